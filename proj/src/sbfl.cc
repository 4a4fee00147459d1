#include "apraudit/sbfl.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "apraudit/error.h"

namespace apraudit::sbfl {
using nlohmann::json;

std::size_t CoverageMatrix::failing_count() const {
  return static_cast<std::size_t>(
      std::count_if(tests.begin(), tests.end(), [](const TestRow& t) { return !t.passed; }));
}

CoverageMatrix BuildMatrix(std::span<const CoverageRecord> records,
                           std::span<const StatementLocation> program_statements) {
  CoverageMatrix m;
  std::set<StatementLocation> all(program_statements.begin(), program_statements.end());
  std::set<TestId> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.test_id).second) throw DuplicateTest("test '" + r.test_id + "' recorded twice");
    all.insert(r.covered.begin(), r.covered.end());
    m.tests.push_back({r.test_id, r.outcome.passed()});
  }
  m.statements.assign(all.begin(), all.end());
  std::map<StatementLocation, std::size_t> column;
  for (std::size_t j = 0; j < m.statements.size(); ++j) column[m.statements[j]] = j;
  m.hits.assign(records.size(), std::vector<bool>(m.statements.size(), false));
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (const auto& loc : records[i].covered) m.hits[i][column.at(loc)] = true;
  }
  return m;
}

double Ochiai(int e_f, int n_f, int e_p) {
  if (e_f == 0) return 0.0;
  return e_f / std::sqrt(static_cast<double>(e_f + n_f) * static_cast<double>(e_f + e_p));
}

std::vector<SuspiciousnessScore> Rank(const CoverageMatrix& matrix) {
  const int total_failed = static_cast<int>(matrix.failing_count());
  if (total_failed == 0) throw NoFailingTest("coverage matrix has no failing test");
  const int total_passed = static_cast<int>(matrix.tests.size()) - total_failed;

  std::vector<SuspiciousnessScore> out;
  out.reserve(matrix.statements.size());
  for (std::size_t j = 0; j < matrix.statements.size(); ++j) {
    SuspiciousnessScore s;
    s.loc = matrix.statements[j];
    for (std::size_t i = 0; i < matrix.tests.size(); ++i) {
      if (!matrix.hits[i][j]) continue;
      if (matrix.tests[i].passed) {
        ++s.e_p;
      } else {
        ++s.e_f;
      }
    }
    s.n_f = total_failed - s.e_f;
    s.n_p = total_passed - s.e_p;
    s.score = Ochiai(s.e_f, s.n_f, s.e_p);
    out.push_back(std::move(s));
  }
  // Statements arrive in canonical order, so a stable sort settles ties.
  std::stable_sort(out.begin(), out.end(), [](const SuspiciousnessScore& a,
                                              const SuspiciousnessScore& b) {
    return a.score > b.score;
  });
  return out;
}

std::vector<StatementLocation> SelectCandidates(std::span<const SuspiciousnessScore> ranked,
                                                double threshold, std::size_t cap) {
  std::vector<StatementLocation> out;
  for (const auto& s : ranked) {
    if (out.size() >= cap) break;
    if (s.score >= threshold) out.push_back(s.loc);
  }
  return out;
}

std::string ExportMatrix(const CoverageMatrix& m) {
  json statements = json::array();
  for (const auto& s : m.statements) statements.push_back(s.ToString());
  json tests = json::array();
  for (std::size_t i = 0; i < m.tests.size(); ++i) {
    json covered = json::array();
    for (std::size_t j = 0; j < m.statements.size(); ++j) {
      if (m.hits[i][j]) covered.push_back(j);
    }
    tests.push_back({{"id", m.tests[i].test_id},
                     {"passed", m.tests[i].passed},
                     {"covered", std::move(covered)}});
  }
  json doc = {{"statements", std::move(statements)}, {"tests", std::move(tests)}};
  return doc.dump(2) + "\n";
}

CoverageMatrix ImportMatrix(std::string_view text) {
  CoverageMatrix m;
  try {
    json doc = json::parse(text);
    for (const auto& s : doc.at("statements")) {
      m.statements.push_back(StatementLocation::Parse(s.get<std::string>()));
    }
    for (const auto& t : doc.at("tests")) {
      m.tests.push_back({t.at("id").get<std::string>(), t.at("passed").get<bool>()});
      std::vector<bool> row(m.statements.size(), false);
      for (const auto& j : t.at("covered")) {
        auto idx = j.get<std::size_t>();
        if (idx >= row.size()) throw ParseError("statement index out of range");
        row[idx] = true;
      }
      m.hits.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed coverage matrix: ") + e.what());
  }
  return m;
}

}  // namespace apraudit::sbfl

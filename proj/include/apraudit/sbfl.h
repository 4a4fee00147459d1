#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "apraudit/subject.h"

namespace apraudit::sbfl {

struct TestRow {
  TestId test_id;
  bool passed = false;

  bool operator==(const TestRow&) const = default;
};

// Tests x statements hit matrix.
struct CoverageMatrix {
  std::vector<TestRow> tests;
  std::vector<StatementLocation> statements;  // canonical order
  std::vector<std::vector<bool>> hits;        // hits[test][statement]

  bool operator==(const CoverageMatrix&) const = default;

  std::size_t failing_count() const;
};

struct SuspiciousnessScore {
  StatementLocation loc;
  int e_f = 0;  // failing tests executing the statement
  int e_p = 0;  // passing tests executing it
  int n_f = 0;  // failing tests not executing it
  int n_p = 0;  // passing tests not executing it
  double score = 0.0;

  bool operator==(const SuspiciousnessScore&) const = default;
};

// Statements are the union of every covered set and `program_statements`,
// sorted by (file, index). Throws DuplicateTest.
CoverageMatrix BuildMatrix(std::span<const CoverageRecord> records,
                           std::span<const StatementLocation> program_statements = {});

// e_f / sqrt((e_f + n_f) * (e_f + e_p)); 0 when e_f is 0.
double Ochiai(int e_f, int n_f, int e_p);

// Scores every statement, highest first; ties keep canonical statement
// order. Throws NoFailingTest.
std::vector<SuspiciousnessScore> Rank(const CoverageMatrix& matrix);

inline constexpr double kDefaultThreshold = 0.01;
inline constexpr std::size_t kDefaultCap = 300;

// Keeps scores >= threshold, then the first `cap` of those.
std::vector<StatementLocation> SelectCandidates(std::span<const SuspiciousnessScore> ranked,
                                                double threshold = kDefaultThreshold,
                                                std::size_t cap = kDefaultCap);

// Structured-text form for offline analysis.
std::string ExportMatrix(const CoverageMatrix& matrix);
CoverageMatrix ImportMatrix(std::string_view text);  // throws ParseError

}  // namespace apraudit::sbfl

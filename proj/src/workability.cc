#include "apraudit/workability.h"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include "apraudit/error.h"
#include "apraudit/records.h"
#include "apraudit/results_log.h"

namespace apraudit {
namespace fs = std::filesystem;

std::string_view ToString(Outcome o) {
  switch (o) {
    case Outcome::kWorkable: return "Workable";
    case Outcome::kCompilationFails: return "CompilationFails";
    case Outcome::kInconsistentSuite: return "InconsistentSuite";
    case Outcome::kResultDiffers: return "ResultDiffers";
    case Outcome::kFlaky: return "Flaky";
  }
  return "?";
}

Outcome OutcomeFromString(std::string_view s) {
  for (Outcome o : kAllOutcomes) {
    if (ToString(o) == s) return o;
  }
  throw ParseError("unknown outcome '" + std::string(s) + "'");
}

std::string_view ReasonLabel(Outcome o) {
  switch (o) {
    case Outcome::kWorkable: return "Workable";
    case Outcome::kCompilationFails: return "Compilation failed";
    case Outcome::kInconsistentSuite: return "Inconsistent test suite";
    case Outcome::kResultDiffers: return "Result differs from dataset";
    case Outcome::kFlaky: return "Flaky";
  }
  return "?";
}

int RoundConfig::ParallelismFor(int round_index) const {
  if (parallelism_schedule.empty()) return 1;
  return parallelism_schedule[static_cast<std::size_t>(round_index) % parallelism_schedule.size()];
}

void RoundConfig::Validate() const {
  if (rounds < 1) throw ValidationError("", "rounds", "must be at least 1");
  if (parallelism_schedule.empty()) {
    throw ValidationError("", "parallelism_schedule", "must not be empty");
  }
  for (int level : parallelism_schedule) {
    if (level < 1) throw ValidationError("", "parallelism_schedule", "every level must be >= 1");
  }
  if (limits.suite_timeout.count() <= 0 || limits.test_timeout.count() <= 0) {
    throw ValidationError("", "limits", "timeouts must be positive");
  }
}

namespace {

void AddDiagnostics(RoundVerdict& v, const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags) v.diagnostics.push_back(d.ToString());
}

std::string JoinIds(const TestIdSet& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

}  // namespace

RoundVerdict SetupTest(const DefectEntry& entry, Adapter& adapter, WorkspaceFactory& workspaces,
                       int round_index, int parallelism) {
  RoundVerdict v;
  v.defect_id = entry.id;
  v.round_index = round_index;
  v.parallelism = parallelism;

  Workspace ws = workspaces.Checkout(entry, "round-" + std::to_string(round_index));

  ParseReport parsed = adapter.Parse(ws);
  if (!parsed.ok) {
    v.outcome = Outcome::kCompilationFails;
    AddDiagnostics(v, parsed.diagnostics);
    return v;
  }
  CompileResult compiled = adapter.Compile(ws);
  if (!compiled.ok) {
    v.outcome = Outcome::kCompilationFails;
    AddDiagnostics(v, compiled.diagnostics);
    return v;
  }

  SuiteResult suite = adapter.RunSuite(ws);
  v.failing = suite.FailingTests();
  if (suite.abnormal) v.diagnostics.push_back("suite: " + *suite.abnormal);

  for (const auto& [id, in_suite] : suite.outcomes) {
    SingleRun single = adapter.RunSingle(ws, id);
    if (single.outcome.status != in_suite.status) {
      v.disagreements.push_back({id, in_suite.status, single.outcome.status});
    }
  }
  if (!v.disagreements.empty()) {
    v.outcome = Outcome::kInconsistentSuite;
    return v;
  }

  if (v.failing != entry.expected_failing) {
    TestIdSet missing, extra;
    std::set_difference(entry.expected_failing.begin(), entry.expected_failing.end(),
                        v.failing.begin(), v.failing.end(),
                        std::inserter(missing, missing.end()));
    std::set_difference(v.failing.begin(), v.failing.end(), entry.expected_failing.begin(),
                        entry.expected_failing.end(), std::inserter(extra, extra.end()));
    if (!missing.empty()) v.diagnostics.push_back("expected to fail but did not: " + JoinIds(missing));
    if (!extra.empty()) v.diagnostics.push_back("failed unexpectedly: " + JoinIds(extra));
    v.outcome = Outcome::kResultDiffers;
    return v;
  }
  v.outcome = Outcome::kWorkable;
  return v;
}

WorkabilityVerdict CombineRounds(std::string defect_id, std::vector<RoundVerdict> rounds) {
  WorkabilityVerdict w;
  w.defect_id = std::move(defect_id);
  if (rounds.empty()) {
    w.audit_error = "no rounds recorded";
    return w;
  }
  w.outcome = rounds.front().outcome;
  for (const auto& r : rounds) {
    if (r.outcome != rounds.front().outcome || r.failing != rounds.front().failing) {
      w.outcome = Outcome::kFlaky;
      break;
    }
  }
  w.rounds = std::move(rounds);
  return w;
}

WorkabilityVerdict Audit(const DefectEntry& entry, Adapter& adapter, const RoundConfig& cfg,
                         WorkspaceFactory& workspaces) {
  cfg.Validate();
  std::vector<RoundVerdict> rounds;
  for (int r = 0; r < cfg.rounds; ++r) {
    rounds.push_back(SetupTest(entry, adapter, workspaces, r, cfg.ParallelismFor(r)));
  }
  return CombineRounds(entry.id, std::move(rounds));
}

ExclusionSummary ClassifyDataset(const std::vector<WorkabilityVerdict>& verdicts) {
  ExclusionSummary s;
  for (Outcome o : kAllOutcomes) s.counts[o] = 0;
  for (const auto& v : verdicts) {
    if (v.audit_error) {
      ++s.audit_errors;
      continue;
    }
    ++s.counts[v.outcome];
    ++s.total;
  }
  s.excluded = s.total - s.workable();
  if (s.total == 0) {
    s.workable_ratio = 1.0;
    s.warnings.push_back("no classified defects; workable ratio is undefined and shown as 1.0");
  } else {
    s.workable_ratio = static_cast<double>(s.workable()) / s.total;
  }
  if (s.audit_errors > 0) {
    s.warnings.push_back(std::to_string(s.audit_errors) +
                         " defect(s) hit an audit error and are not counted");
  }
  return s;
}

namespace {

struct LogLine {
  std::size_t end_offset;  // offset just past the newline
  nlohmann::json record;
};

std::vector<LogLine> ReadLines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<LogLine> lines;
  std::size_t start = 0;
  while (start < data.size()) {
    auto nl = data.find('\n', start);
    if (nl == std::string::npos) break;
    std::string_view text(data.data() + start, nl - start);
    start = nl + 1;
    if (text.empty()) continue;
    try {
      lines.push_back({start, nlohmann::json::parse(text)});
    } catch (const nlohmann::json::parse_error&) {
      break;  // torn record; everything from here on is discarded
    }
  }
  return lines;
}

struct ResumeState {
  int rounds_done = 0;
  std::set<std::string> errored;
  bool finished = false;
};

// Works out how far a previous run got and truncates any partial round.
ResumeState PrepareResume(const fs::path& path, const Dataset& dataset, const RoundConfig& cfg) {
  ResumeState st;
  auto lines = ReadLines(path);
  if (lines.empty()) {
    std::ofstream(path, std::ios::trunc | std::ios::binary);
    return st;
  }
  if (records::TypeOf(lines.front().record) != records::kHeader ||
      !records::HeaderMatches(lines.front().record, dataset, cfg)) {
    throw ValidationError("", "log", path.string() + " belongs to a different audit");
  }
  std::map<int, std::set<std::string>> done;
  std::map<int, std::set<std::string>> errors_in;
  for (const auto& l : lines) {
    std::string type = records::TypeOf(l.record);
    if (type == records::kVerdict) st.finished = true;
    if (type != records::kRound && type != records::kAuditError) continue;
    int r = l.record.at("round").get<int>();
    std::string defect = l.record.at("defect").get<std::string>();
    done[r].insert(defect);
    if (type == records::kAuditError) errors_in[r].insert(defect);
  }
  if (st.finished) return st;

  std::set<std::string> active;
  for (const auto& e : dataset.entries) active.insert(e.id);
  for (int r = 0; r < cfg.rounds; ++r) {
    if (done[r] != active) break;
    st.rounds_done = r + 1;
    for (const auto& id : errors_in[r]) {
      active.erase(id);
      st.errored.insert(id);
    }
  }
  std::size_t keep = lines.front().end_offset;
  for (const auto& l : lines) {
    std::string type = records::TypeOf(l.record);
    if ((type == records::kRound || type == records::kAuditError) &&
        l.record.at("round").get<int>() < st.rounds_done) {
      keep = l.end_offset;
    }
  }
  fs::resize_file(path, keep);
  return st;
}

}  // namespace

AuditRun AuditDataset(const Dataset& dataset, AdapterRegistry& registry, const RoundConfig& cfg,
                      const fs::path& log_path, const AuditOptions& options) {
  cfg.Validate();
  if (dataset.kind != DatasetKind::kExecutable) {
    throw ValidationError("", "kind", "a published-summary dataset cannot be executed");
  }
  std::vector<std::shared_ptr<Adapter>> adapters;
  for (const auto& e : dataset.entries) adapters.push_back(registry.Resolve(e.adapter));
  registry.SetLimits(cfg.limits);

  ResumeState st;
  bool fresh = true;
  if (options.resume && fs::exists(log_path)) {
    st = PrepareResume(log_path, dataset, cfg);
    fresh = fs::file_size(log_path) == 0;
  }
  AuditRun run;
  if (st.finished) {
    run.verdicts = ReplayVerdicts(log_path);
    run.rounds_completed = cfg.rounds;
    run.complete = true;
    for (const auto& v : run.verdicts) run.any_audit_error |= v.audit_error.has_value();
    return run;
  }

  {
    ResultsLog log(log_path, /*append=*/!fresh);
    if (fresh) log.Append(records::Header(dataset, cfg));
    WorkspaceFactory workspaces(options.scratch);

    run.rounds_completed = st.rounds_done;
    for (int r = st.rounds_done; r < cfg.rounds; ++r) {
      if (options.stop_after_rounds && run.rounds_completed >= *options.stop_after_rounds) {
        log.Flush();
        return run;
      }
      const int level = cfg.ParallelismFor(r);
      std::vector<std::size_t> todo;
      for (std::size_t i = 0; i < dataset.entries.size(); ++i) {
        if (!st.errored.contains(dataset.entries[i].id)) todo.push_back(i);
      }
      std::vector<std::optional<RoundVerdict>> verdicts(dataset.entries.size());
      std::vector<std::string> errors(dataset.entries.size());
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (std::size_t k = next.fetch_add(1); k < todo.size(); k = next.fetch_add(1)) {
          std::size_t i = todo[k];
          try {
            verdicts[i] = SetupTest(dataset.entries[i], *adapters[i], workspaces, r, level);
          } catch (const std::exception& e) {
            errors[i] = e.what();
            if (errors[i].empty()) errors[i] = "unknown failure";
          }
        }
      };
      const int threads = std::max(1, std::min<int>(level, static_cast<int>(todo.size())));
      if (threads == 1) {
        worker();
      } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
      }
      // Entry order, so logs do not depend on scheduling.
      for (std::size_t i : todo) {
        if (verdicts[i]) {
          log.Append(records::Round(*verdicts[i]));
        } else {
          log.Append(records::AuditError(dataset.entries[i].id, r, errors[i]));
          st.errored.insert(dataset.entries[i].id);
        }
      }
      log.Flush();
      ++run.rounds_completed;
    }
    log.Flush();
  }

  run.verdicts = ReplayVerdicts(log_path);
  {
    ResultsLog log(log_path, /*append=*/true);
    for (const auto& v : run.verdicts) {
      log.Append(records::Verdict(v));
      run.any_audit_error |= v.audit_error.has_value();
    }
  }
  run.complete = true;
  return run;
}

std::vector<WorkabilityVerdict> ReplayVerdicts(const fs::path& log_path) {
  auto recs = ReadLogRecords(log_path);
  std::vector<std::string> order;
  std::map<std::string, std::vector<RoundVerdict>> rounds;
  std::map<std::string, std::string> errors;
  auto note = [&](const std::string& id) {
    if (!rounds.contains(id)) {
      rounds[id];
      order.push_back(id);
    }
  };
  for (const auto& rec : recs) {
    std::string type = records::TypeOf(rec);
    if (type == records::kHeader) {
      for (const auto& id : rec.at("entries")) note(id.get<std::string>());
    } else if (type == records::kRound) {
      RoundVerdict v = records::RoundFrom(rec);
      note(v.defect_id);
      rounds[v.defect_id].push_back(std::move(v));
    } else if (type == records::kAuditError) {
      std::string id = rec.at("defect").get<std::string>();
      note(id);
      if (!errors.contains(id)) errors[id] = rec.at("message").get<std::string>();
    }
  }
  std::vector<WorkabilityVerdict> out;
  for (const auto& id : order) {
    WorkabilityVerdict v = CombineRounds(id, std::move(rounds[id]));
    if (errors.contains(id)) {
      v.audit_error = errors[id];
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace apraudit

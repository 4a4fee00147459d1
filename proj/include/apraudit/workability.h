#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apraudit/dataset.h"
#include "apraudit/subject.h"

namespace apraudit {

// Ordered by the position at which the setup-test detects them; kFlaky is
// only produced by comparing rounds.
enum class Outcome { kWorkable, kCompilationFails, kInconsistentSuite, kResultDiffers, kFlaky };

inline constexpr Outcome kAllOutcomes[] = {Outcome::kWorkable, Outcome::kCompilationFails,
                                           Outcome::kInconsistentSuite, Outcome::kResultDiffers,
                                           Outcome::kFlaky};

std::string_view ToString(Outcome o);  // "Workable", "CompilationFails", ...
Outcome OutcomeFromString(std::string_view s);
// Human wording used in exclusion tables, e.g. "Inconsistent test suite".
std::string_view ReasonLabel(Outcome o);

struct Disagreement {
  TestId test_id;
  TestStatus in_suite = TestStatus::kPass;
  TestStatus single = TestStatus::kPass;

  bool operator==(const Disagreement&) const = default;
};

struct RoundVerdict {
  std::string defect_id;
  Outcome outcome = Outcome::kWorkable;
  TestIdSet failing;  // failing tests observed in the whole-suite run
  std::vector<Disagreement> disagreements;
  std::vector<std::string> diagnostics;
  int round_index = 0;
  int parallelism = 1;

  bool operator==(const RoundVerdict&) const = default;
};

struct WorkabilityVerdict {
  std::string defect_id;
  Outcome outcome = Outcome::kWorkable;
  std::vector<RoundVerdict> rounds;
  // Set when the harness itself failed for this defect. Such defects are
  // reported separately and never counted under any Outcome.
  std::optional<std::string> audit_error;

  bool operator==(const WorkabilityVerdict&) const = default;
};

struct RoundConfig {
  int rounds = 20;
  std::vector<int> parallelism_schedule = {1, 5, 10, 15, 20, 25};
  ExecutionLimits limits;

  int ParallelismFor(int round_index) const;
  void Validate() const;  // throws ValidationError
};

// One execution of the setup-test: checkout, parse and compile, full suite,
// every test on its own, then the failing set against the expected one.
// The first failing phase decides the outcome. Throws AdapterFailure (and
// IoError from checkout) when the harness rather than the subject breaks.
RoundVerdict SetupTest(const DefectEntry& entry, Adapter& adapter, WorkspaceFactory& workspaces,
                       int round_index = 0, int parallelism = 1);

// Flaky iff two rounds differ in outcome or observed failing set; otherwise
// the common round outcome.
WorkabilityVerdict CombineRounds(std::string defect_id, std::vector<RoundVerdict> rounds);

// Runs cfg.rounds setup-tests on a single defect, one after another.
WorkabilityVerdict Audit(const DefectEntry& entry, Adapter& adapter, const RoundConfig& cfg,
                         WorkspaceFactory& workspaces);

struct ExclusionSummary {
  std::map<Outcome, int> counts;  // every Outcome present, zero if unseen
  int total = 0;                  // verdicts with an outcome (audit errors excluded)
  int audit_errors = 0;
  int excluded = 0;  // total - workable
  double workable_ratio = 1.0;
  std::vector<std::string> warnings;

  int workable() const { return counts.at(Outcome::kWorkable); }
};

ExclusionSummary ClassifyDataset(const std::vector<WorkabilityVerdict>& verdicts);

class ResultsLog;

struct AuditOptions {
  // Continue an existing log instead of starting over.
  bool resume = true;
  // Stop after this many rounds have been logged (for checkpointed runs).
  std::optional<int> stop_after_rounds;
  std::filesystem::path scratch;  // workspace scratch dir; empty = system temp
};

struct AuditRun {
  std::vector<WorkabilityVerdict> verdicts;  // dataset order; empty if stopped early
  int rounds_completed = 0;
  bool complete = false;
  bool any_audit_error = false;
};

// Audits every entry of `dataset`. Within a round all entries are run on a
// pool sized by the round's parallelism level; rounds are written to `log`
// in entry order once the round finishes.
AuditRun AuditDataset(const Dataset& dataset, AdapterRegistry& registry, const RoundConfig& cfg,
                      const std::filesystem::path& log_path, const AuditOptions& options = {});

// Recomputes verdicts from an audit log.
std::vector<WorkabilityVerdict> ReplayVerdicts(const std::filesystem::path& log_path);

}  // namespace apraudit

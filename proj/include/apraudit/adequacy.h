#pragma once

#include <chrono>
#include <functional>
#include <set>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apraudit/dataset.h"
#include "apraudit/sbfl.h"
#include "apraudit/subject.h"

namespace apraudit {

struct DeletionTrial {
  std::string defect_id;
  StatementLocation loc;
  bool evaluated = false;  // false: the sweep budget ran out before this trial
  bool compile_ok = false;
  bool suite_passed = false;

  bool operator==(const DeletionTrial&) const = default;
};

struct SweepBudget {
  std::chrono::milliseconds wall_clock{60'000};
  std::chrono::milliseconds per_variant{10'000};

  static SweepBudget PaperScale() { return {std::chrono::hours(3), std::chrono::seconds(10)}; }
};

// Parses "90s", "3h", "500ms", "2m" or a bare number of seconds.
std::chrono::milliseconds ParseDuration(std::string_view text);

// Per-variant progress hook, mainly for the CLI.
using TrialCallback = std::function<void(const DeletionTrial&)>;

// For each candidate in order: fresh workspace, delete the statement,
// compile, run the whole suite. Trials not started before the budget expires
// are returned with evaluated=false. The result is in candidate order
// whatever `jobs` is. Throws AdapterFailure.
std::vector<DeletionTrial> DeletionSweep(const DefectEntry& entry, Adapter& adapter,
                                         std::span<const StatementLocation> candidates,
                                         const SweepBudget& budget, WorkspaceFactory& workspaces,
                                         int jobs = 1);

// Coverage of every suite test, each run on its own in a fresh workspace
// checkout. Used to build the SBFL matrix.
std::vector<CoverageRecord> CollectCoverage(const DefectEntry& entry, Adapter& adapter,
                                            WorkspaceFactory& workspaces);

struct AdequacyVerdict {
  std::string defect_id;
  bool trivially_plausible = false;
  std::vector<StatementLocation> plausible_locations;
  bool human_patch_deletion_only = false;
  bool under_specified = false;
  bool sweep_truncated = false;  // some candidate trials were not evaluated

  bool operator==(const AdequacyVerdict&) const = default;
};

AdequacyVerdict MakeAdequacyVerdict(const DefectEntry& entry,
                                    std::span<const DeletionTrial> trials);

// Counts over a workable population.
struct AdequacyTally {
  int population = 0;  // workable defects considered
  int trivially_plausible = 0;
  int deletion_only_patches = 0;  // among the trivially plausible
  int under_specified = 0;
  int truncated_sweeps = 0;

  double trivially_plausible_rate() const;  // fraction of population, 0 if empty
  double under_specified_rate() const;
  bool operator==(const AdequacyTally&) const = default;
};

AdequacyTally SummarizeAdequacy(std::span<const AdequacyVerdict> verdicts);

// One row of a fix-rate table.
struct FixRateRow {
  std::string label;
  int defects = 0;
  int fixed = 0;
  double percent = 0.0;  // rounded to one decimal

  bool operator==(const FixRateRow&) const = default;
};

struct Exclusion {
  std::string label;
  std::set<std::string> removed;  // defect ids
};

// First row is the whole population; each exclusion removes its set from
// what remains. Throws InconsistentSets if `fixed` or an exclusion is not a
// subset of `total`.
std::vector<FixRateRow> FixRate(const std::set<std::string>& total,
                                const std::set<std::string>& fixed,
                                std::span<const Exclusion> exclusions,
                                std::string first_label = "all");

// Same arithmetic when only counts are known: each stage removes
// `removed` defects of which `removed_fixed` were fixed.
struct CountExclusion {
  std::string label;
  int removed = 0;
  int removed_fixed = 0;
};
std::vector<FixRateRow> FixRateFromCounts(int total, int fixed,
                                          std::span<const CountExclusion> exclusions,
                                          std::string first_label = "all");

double RoundToOneDecimal(double value);

}  // namespace apraudit

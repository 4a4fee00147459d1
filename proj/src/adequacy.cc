#include "apraudit/adequacy.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <mutex>
#include <thread>

#include "apraudit/error.h"

namespace apraudit {

std::chrono::milliseconds ParseDuration(std::string_view text) {
  double value = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || value < 0) throw ParseError("bad duration '" + std::string(text) + "'");
  std::string_view unit(p, text.data() + text.size() - p);
  double ms;
  if (unit.empty() || unit == "s") {
    ms = value * 1000;
  } else if (unit == "ms") {
    ms = value;
  } else if (unit == "m") {
    ms = value * 60'000;
  } else if (unit == "h") {
    ms = value * 3'600'000;
  } else {
    throw ParseError("bad duration unit in '" + std::string(text) + "'");
  }
  return std::chrono::milliseconds(static_cast<long long>(std::llround(ms)));
}

namespace {

DeletionTrial RunTrial(const DefectEntry& entry, Adapter& adapter, const StatementLocation& loc,
                       WorkspaceFactory& workspaces) {
  DeletionTrial trial;
  trial.defect_id = entry.id;
  trial.loc = loc;
  trial.evaluated = true;
  Workspace ws = workspaces.Checkout(entry, "sweep/" + loc.ToString());
  try {
    adapter.DeleteStatement(ws, loc);
  } catch (const NotDeletable&) {
    return trial;  // no variant exists, so it cannot compile
  }
  CompileResult compiled = adapter.Compile(ws);
  trial.compile_ok = compiled.ok;
  if (!compiled.ok) return trial;
  SuiteResult suite = adapter.RunSuite(ws);
  trial.suite_passed = !suite.abnormal && !suite.outcomes.empty() && suite.AllPassed();
  return trial;
}

}  // namespace

std::vector<DeletionTrial> DeletionSweep(const DefectEntry& entry, Adapter& adapter,
                                         std::span<const StatementLocation> candidates,
                                         const SweepBudget& budget, WorkspaceFactory& workspaces,
                                         int jobs) {
  using Clock = std::chrono::steady_clock;
  const auto deadline = Clock::now() + budget.wall_clock;

  ExecutionLimits saved = adapter.limits();
  ExecutionLimits variant_limits = saved;
  variant_limits.suite_timeout = std::min(saved.suite_timeout, budget.per_variant);
  variant_limits.test_timeout = std::min(saved.test_timeout, budget.per_variant);
  adapter.set_limits(variant_limits);
  struct Restore {
    Adapter& a;
    ExecutionLimits l;
    ~Restore() { a.set_limits(l); }
  } restore{adapter, saved};

  std::vector<DeletionTrial> trials(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    trials[i].defect_id = entry.id;
    trials[i].loc = candidates[i];
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= candidates.size()) return;
      if (budget.wall_clock.count() <= 0 || Clock::now() >= deadline) continue;
      {
        std::lock_guard lock(error_mu);
        if (error) return;
      }
      try {
        trials[i] = RunTrial(entry, adapter, candidates[i], workspaces);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(candidates.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (const AdapterFailure&) {
      throw;
    } catch (const std::exception& e) {
      throw AdapterFailure("deletion sweep of " + entry.id + " failed: " + e.what());
    }
  }
  return trials;
}

std::vector<CoverageRecord> CollectCoverage(const DefectEntry& entry, Adapter& adapter,
                                            WorkspaceFactory& workspaces) {
  Workspace ws = workspaces.Checkout(entry, "coverage");
  CompileResult compiled = adapter.Compile(ws);
  if (!compiled.ok) throw AdapterFailure(entry.id + " does not compile; audit it first");
  SuiteResult suite = adapter.RunSuite(ws);
  std::vector<CoverageRecord> records;
  for (const auto& [id, outcome] : suite.outcomes) {
    records.push_back(adapter.RunSingle(ws, id).coverage);
  }
  return records;
}

AdequacyVerdict MakeAdequacyVerdict(const DefectEntry& entry,
                                    std::span<const DeletionTrial> trials) {
  AdequacyVerdict v;
  v.defect_id = entry.id;
  for (const auto& t : trials) {
    if (!t.evaluated) {
      v.sweep_truncated = true;
      continue;
    }
    if (t.suite_passed) v.plausible_locations.push_back(t.loc);
  }
  v.trivially_plausible = !v.plausible_locations.empty();
  v.human_patch_deletion_only = IsDeletionOnly(entry.human_patch);
  v.under_specified = v.trivially_plausible && !v.human_patch_deletion_only;
  return v;
}

double AdequacyTally::trivially_plausible_rate() const {
  return population == 0 ? 0.0 : static_cast<double>(trivially_plausible) / population;
}

double AdequacyTally::under_specified_rate() const {
  return population == 0 ? 0.0 : static_cast<double>(under_specified) / population;
}

AdequacyTally SummarizeAdequacy(std::span<const AdequacyVerdict> verdicts) {
  AdequacyTally t;
  t.population = static_cast<int>(verdicts.size());
  for (const auto& v : verdicts) {
    if (v.trivially_plausible) {
      ++t.trivially_plausible;
      if (v.human_patch_deletion_only) ++t.deletion_only_patches;
    }
    if (v.under_specified) ++t.under_specified;
    if (v.sweep_truncated) ++t.truncated_sweeps;
  }
  return t;
}

double RoundToOneDecimal(double value) { return std::round(value * 10.0) / 10.0; }

namespace {

FixRateRow Row(std::string label, int defects, int fixed) {
  FixRateRow r;
  r.label = std::move(label);
  r.defects = defects;
  r.fixed = fixed;
  r.percent = defects == 0 ? 0.0 : RoundToOneDecimal(100.0 * fixed / defects);
  return r;
}

}  // namespace

std::vector<FixRateRow> FixRate(const std::set<std::string>& total,
                                const std::set<std::string>& fixed,
                                std::span<const Exclusion> exclusions, std::string first_label) {
  if (!std::includes(total.begin(), total.end(), fixed.begin(), fixed.end())) {
    throw InconsistentSets("fixed defects are not a subset of the population");
  }
  std::set<std::string> remaining = total;
  std::set<std::string> remaining_fixed = fixed;
  std::vector<FixRateRow> rows;
  rows.push_back(Row(std::move(first_label), static_cast<int>(remaining.size()),
                     static_cast<int>(remaining_fixed.size())));
  for (const auto& ex : exclusions) {
    if (!std::includes(total.begin(), total.end(), ex.removed.begin(), ex.removed.end())) {
      throw InconsistentSets("exclusion '" + ex.label + "' is not a subset of the population");
    }
    for (const auto& id : ex.removed) {
      remaining.erase(id);
      remaining_fixed.erase(id);
    }
    rows.push_back(Row(ex.label, static_cast<int>(remaining.size()),
                       static_cast<int>(remaining_fixed.size())));
  }
  return rows;
}

std::vector<FixRateRow> FixRateFromCounts(int total, int fixed,
                                          std::span<const CountExclusion> exclusions,
                                          std::string first_label) {
  if (total < 0 || fixed < 0 || fixed > total) {
    throw InconsistentSets("fixed count exceeds the population");
  }
  std::vector<FixRateRow> rows;
  rows.push_back(Row(std::move(first_label), total, fixed));
  for (const auto& ex : exclusions) {
    if (ex.removed < 0 || ex.removed_fixed < 0 || ex.removed > total ||
        ex.removed_fixed > fixed || ex.removed_fixed > ex.removed) {
      throw InconsistentSets("exclusion '" + ex.label + "' removes more than remains");
    }
    total -= ex.removed;
    fixed -= ex.removed_fixed;
    if (fixed > total) throw InconsistentSets("exclusion '" + ex.label + "' leaves fixed > total");
    rows.push_back(Row(ex.label, total, fixed));
  }
  return rows;
}

}  // namespace apraudit

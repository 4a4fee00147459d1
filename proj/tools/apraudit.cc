// apraudit: workability and test-suite adequacy audits for defect datasets.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "apraudit/adequacy.h"
#include "apraudit/dataset.h"
#include "apraudit/error.h"
#include "apraudit/external_adapter.h"
#include "apraudit/records.h"
#include "apraudit/report.h"
#include "apraudit/results_log.h"
#include "apraudit/sbfl.h"
#include "apraudit/workability.h"

namespace fs = std::filesystem;
using namespace apraudit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitAuditError = 2;

// "id=command arg..." registers an external adapter process.
void RegisterAdapters(AdapterRegistry& registry, const std::vector<std::string>& specs, int procs) {
  RegisterBuiltinAdapters(registry);
  for (const auto& spec : specs) {
    auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--adapter", "expected id=command");
    std::vector<std::string> argv;
    std::istringstream words(spec.substr(eq + 1));
    for (std::string w; words >> w;) argv.push_back(w);
    registry.Register(spec.substr(0, eq), std::make_shared<ExternalAdapter>(argv, procs));
  }
}

std::vector<int> ParseSchedule(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ValidationError("", "parallel-schedule", "not a number: '" + item + "'");
    }
  }
  return out;
}

void CheckAdapters(const Dataset& ds, const AdapterRegistry& registry) {
  if (ds.kind != DatasetKind::kExecutable) return;
  for (const auto& e : ds.entries) {
    if (!registry.Contains(e.adapter)) {
      throw ValidationError(e.id, "adapter", "no adapter named '" + e.adapter + "'");
    }
  }
}

struct LogContents {
  std::string dataset, version;
  int defects = 0;
  std::vector<WorkabilityVerdict> verdicts;
  std::map<std::string, AdequacyVerdict> adequacy;
};

LogContents ReadLog(const fs::path& path) {
  LogContents c;
  for (const auto& rec : ReadLogRecords(path)) {
    std::string type = records::TypeOf(rec);
    if (type == records::kHeader) {
      c.dataset = rec.at("dataset").get<std::string>();
      c.version = rec.at("version").get<std::string>();
      c.defects = static_cast<int>(rec.at("entries").size());
    } else if (type == records::kAdequacy) {
      AdequacyVerdict v = records::AdequacyFrom(rec);
      c.adequacy[v.defect_id] = std::move(v);
    }
  }
  if (c.dataset.empty()) throw ParseError(path.string() + " has no audit header");
  c.verdicts = ReplayVerdicts(path);
  return c;
}

void PrintVerdicts(const std::vector<WorkabilityVerdict>& verdicts) {
  for (const auto& v : verdicts) {
    std::cout << v.defect_id << "\t"
              << (v.audit_error ? "audit-error: " + *v.audit_error : std::string(ToString(v.outcome)))
              << "\n";
  }
}

int CmdValidate(const std::string& manifest, const std::vector<std::string>& adapters) {
  Dataset ds = LoadManifest(manifest);
  AdapterRegistry registry;
  RegisterAdapters(registry, adapters, 1);
  CheckAdapters(ds, registry);
  std::cout << "ok: " << ds.name << " " << ds.version << ", " << ds.entries.size() << " entries\n";
  return kExitOk;
}

struct AuditArgs {
  std::string manifest;
  int rounds = 20;
  std::string schedule = "1,5,10,15,20,25";
  std::string out = "audit.jsonl";
  std::optional<int> stop_after;
  bool fresh = false;
  std::string scratch;
  std::string suite_timeout = "60s";
  std::string test_timeout = "10s";
};

int CmdAudit(const AuditArgs& a, const std::vector<std::string>& adapters) {
  Dataset ds = LoadManifest(a.manifest);
  RoundConfig cfg;
  cfg.rounds = a.rounds;
  cfg.parallelism_schedule = ParseSchedule(a.schedule);
  cfg.limits.suite_timeout = ParseDuration(a.suite_timeout);
  cfg.limits.test_timeout = ParseDuration(a.test_timeout);
  cfg.Validate();
  int max_level = *std::max_element(cfg.parallelism_schedule.begin(), cfg.parallelism_schedule.end());
  AdapterRegistry registry;
  RegisterAdapters(registry, adapters, max_level);
  CheckAdapters(ds, registry);

  AuditOptions options;
  options.resume = !a.fresh;
  options.stop_after_rounds = a.stop_after;
  options.scratch = a.scratch;
  fs::path log = ResolveLogPath(a.out);
  AuditRun run = AuditDataset(ds, registry, cfg, log, options);
  if (!run.complete) {
    std::cout << "stopped after " << run.rounds_completed << " of " << cfg.rounds
              << " rounds; run again to resume from " << log.string() << "\n";
    return kExitOk;
  }
  PrintVerdicts(run.verdicts);
  std::cout << "log: " << log.string() << "\n";
  return run.any_audit_error ? kExitAuditError : kExitOk;
}

struct AdequacyArgs {
  std::string manifest;
  std::string log;
  double threshold = sbfl::kDefaultThreshold;
  std::size_t cap = sbfl::kDefaultCap;
  std::string budget = "60s";
  std::string per_variant = "10s";
  int jobs = 1;
  std::string scratch;
};

int CmdAdequacy(const AdequacyArgs& a, const std::vector<std::string>& adapters) {
  Dataset ds = LoadManifest(a.manifest);
  AdapterRegistry registry;
  RegisterAdapters(registry, adapters, std::max(1, a.jobs));
  CheckAdapters(ds, registry);
  SweepBudget budget{ParseDuration(a.budget), ParseDuration(a.per_variant)};
  if (budget.wall_clock.count() <= 0) {
    std::cerr << "warning: the sweep budget is 0s, so no deletion trial will be evaluated\n";
  }
  if (a.threshold < 0 || a.threshold > 1) throw ValidationError("", "threshold", "must be in [0, 1]");

  fs::path log_path = ResolveLogPath(a.log);
  LogContents contents = ReadLog(log_path);
  if (contents.verdicts.empty()) throw ValidationError("", "log", "no verdicts; run audit first");

  WorkspaceFactory workspaces(a.scratch);
  std::vector<AdequacyVerdict> verdicts;
  bool failed = false;
  ResultsLog log(log_path, /*append=*/true);
  for (const auto& v : contents.verdicts) {
    if (v.audit_error || v.outcome != Outcome::kWorkable) continue;
    const DefectEntry* entry = ds.Find(v.defect_id);
    if (entry == nullptr) throw ValidationError(v.defect_id, "log", "not in the manifest");
    if (auto done = contents.adequacy.find(v.defect_id); done != contents.adequacy.end()) {
      verdicts.push_back(done->second);
      continue;
    }
    try {
      auto adapter = registry.Resolve(entry->adapter);
      auto coverage = CollectCoverage(*entry, *adapter, workspaces);
      std::vector<StatementLocation> statements;
      {
        Workspace ws = workspaces.Checkout(*entry, "statements");
        statements = adapter->Statements(ws);
      }
      auto matrix = sbfl::BuildMatrix(coverage, statements);
      auto ranked = sbfl::Rank(matrix);
      auto candidates = sbfl::SelectCandidates(ranked, a.threshold, a.cap);
      auto trials = DeletionSweep(*entry, *adapter, candidates, budget, workspaces, a.jobs);
      for (const auto& t : trials) log.Append(records::Trial(t));
      AdequacyVerdict av = MakeAdequacyVerdict(*entry, trials);
      log.Append(records::Adequacy(av));
      std::cout << av.defect_id << "\tcandidates " << candidates.size() << "\tplausible "
                << av.plausible_locations.size();
      for (const auto& l : av.plausible_locations) std::cout << " " << l.ToString();
      if (av.under_specified) std::cout << "\tunder-specified";
      if (av.sweep_truncated) std::cout << "\ttruncated";
      std::cout << "\n";
      verdicts.push_back(std::move(av));
    } catch (const Error& e) {
      std::cerr << v.defect_id << ": adequacy failed: " << e.what() << "\n";
      failed = true;
    }
  }
  log.Flush();
  AdequacyTally t = SummarizeAdequacy(verdicts);
  std::cout << "trivially plausible " << t.trivially_plausible << " of " << t.population
            << ", deletion-only patches " << t.deletion_only_patches << ", under-specified "
            << t.under_specified;
  if (t.truncated_sweeps > 0) std::cout << ", truncated sweeps " << t.truncated_sweeps;
  std::cout << "\n";
  return failed ? kExitAuditError : kExitOk;
}

int CmdReport(const std::string& log_path, const std::string& paper_dir, const std::string& format) {
  if (log_path.empty() && paper_dir.empty()) {
    throw CLI::ValidationError("report", "give --log, --paper-data or both");
  }
  auto emit = [&](const report::Summary& s) {
    std::cout << (format == "json" ? report::EmitJson(s) : report::EmitText(s));
  };
  if (!log_path.empty()) {
    LogContents c = ReadLog(ResolveLogPath(log_path));
    report::Summary s = report::MakeSummary(c.dataset, c.version, c.defects, c.verdicts);
    if (!c.adequacy.empty()) {
      std::vector<AdequacyVerdict> av;
      for (auto& [id, v] : c.adequacy) av.push_back(v);
      AdequacyTally t = SummarizeAdequacy(av);
      t.population = s.workable();
      s.adequacy = t;
    }
    emit(s);
  }
  if (!paper_dir.empty()) {
    if (!log_path.empty() && format != "json") std::cout << "\n";
    emit(report::ReproducePaperTables(report::LoadPaperData(paper_dir)));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audit defect datasets for workability and test-suite adequacy"};
  app.require_subcommand(1);
  std::vector<std::string> adapters;
  app.add_option("--adapter", adapters, "External adapter as id=command (repeatable)");

  std::string validate_manifest;
  auto* validate = app.add_subcommand("validate", "Load and check a dataset manifest");
  validate->add_option("manifest", validate_manifest)->required();

  AuditArgs audit_args;
  auto* audit = app.add_subcommand("audit", "Run the multi-round workability audit");
  audit->add_option("manifest", audit_args.manifest)->required();
  audit->add_option("--rounds", audit_args.rounds, "Setup-test rounds per defect")->capture_default_str();
  audit->add_option("--parallel-schedule", audit_args.schedule, "Parallelism per round, cycled")
      ->capture_default_str();
  audit->add_option("--out", audit_args.out, "Results log")->capture_default_str();
  audit->add_option("--stop-after", audit_args.stop_after, "Stop after this many rounds (resume later)");
  audit->add_flag("--fresh", audit_args.fresh, "Discard an existing log instead of resuming");
  audit->add_option("--scratch", audit_args.scratch, "Directory for workspaces");
  audit->add_option("--suite-timeout", audit_args.suite_timeout)->capture_default_str();
  audit->add_option("--test-timeout", audit_args.test_timeout)->capture_default_str();

  AdequacyArgs adequacy_args;
  auto* adequacy = app.add_subcommand("adequacy", "SBFL-ranked single-statement deletion sweep");
  adequacy->add_option("manifest", adequacy_args.manifest)->required();
  adequacy->add_option("--log", adequacy_args.log, "Results log written by audit")->required();
  adequacy->add_option("--threshold", adequacy_args.threshold)->capture_default_str();
  adequacy->add_option("--cap", adequacy_args.cap)->capture_default_str();
  adequacy->add_option("--budget", adequacy_args.budget, "Wall-clock budget per defect")->capture_default_str();
  adequacy->add_option("--per-variant", adequacy_args.per_variant)->capture_default_str();
  adequacy->add_option("--jobs", adequacy_args.jobs)->capture_default_str();
  adequacy->add_option("--scratch", adequacy_args.scratch);

  std::string report_log, report_paper, report_format = "text";
  auto* rep = app.add_subcommand("report", "Summaries and exclusion tables");
  rep->add_option("--log", report_log);
  rep->add_option("--paper-data", report_paper, "Directory of bundled published data");
  rep->add_option("--format", report_format)->check(CLI::IsMember({"text", "json"}))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  try {
    if (*validate) return CmdValidate(validate_manifest, adapters);
    if (*audit) return CmdAudit(audit_args, adapters);
    if (*adequacy) return CmdAdequacy(adequacy_args, adapters);
    if (*rep) return CmdReport(report_log, report_paper, report_format);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

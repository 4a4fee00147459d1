#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

#include "apraudit/subject.h"

namespace apraudit::scripted {

// Test behaviours a scenario can replay.
struct AlwaysPass {};
struct AlwaysFail {
  std::string message = "scripted failure";
};
// Fails with probability p, drawn from a stream indexed by (seed, test,
// execution number, mode) so replays are bit-identical.
struct FlakyFail {
  double p = 0.0;
};
struct FailOnlyInFullSuite {};
struct PassOnlyInFullSuite {};
// Passes in suite executions 1..n-1 and fails from execution n on.
struct FailAfterNthExecution {
  std::uint64_t n = 1;
};

using Behavior = std::variant<AlwaysPass, AlwaysFail, FlakyFail, FailOnlyInFullSuite,
                              PassOnlyInFullSuite, FailAfterNthExecution>;

struct ScriptedTest {
  TestId id;
  Behavior behavior;
};

struct Scenario {
  std::string defect_id;
  bool parse_ok = true;
  bool compile_ok = true;
  std::vector<ScriptedTest> tests;
  std::uint64_t seed = 0;
};

// Throws ParseError / ValidationError.
Scenario ParseScenario(std::string_view json_text);
Scenario LoadScenario(const std::filesystem::path& path);
std::string SerializeScenario(const Scenario& scenario);

// Scenario file expected inside a scripted defect's source root.
inline constexpr std::string_view kScenarioFile = "scenario.json";

enum class Mode { kWholeSuite, kSingleTest };

// Uniform draw in [0, 1) for one (seed, test, execution, mode) tuple.
double Draw(std::uint64_t seed, std::string_view test_id, std::uint64_t execution, Mode mode);

// Outcome of one test under `mode` during the `execution`-th suite execution
// (1-based).
TestOutcome Replay(const Scenario& scenario, const ScriptedTest& test, Mode mode,
                   std::uint64_t execution);

// Adapter driving Scenario files. Execution counters are kept per defect
// and advance once per RunSuite call; single-test runs reuse the counter of
// the last suite execution on the same workspace.
class ScriptedAdapter : public Adapter {
 public:
  ParseReport Parse(const Workspace& ws) override;
  CompileResult Compile(Workspace& ws) override;
  SuiteResult RunSuite(Workspace& ws) override;
  SingleRun RunSingle(Workspace& ws, std::string_view test_id) override;

  // Adapter calls seen so far for a defect, e.g. "compile", "run_suite",
  // "run_single:T::a".
  std::vector<std::string> CallLog(const std::string& defect_id) const;
  std::uint64_t Executions(const std::string& defect_id) const;
  void Reset();

 private:
  Scenario Read(const Workspace& ws) const;
  void Log(const std::string& defect_id, std::string call);

  mutable std::mutex mu_;
  std::map<std::string, std::uint64_t> executions_;
  std::map<std::string, std::uint64_t> workspace_execution_;  // keyed by workspace root
  std::map<std::string, std::vector<std::string>> calls_;
};

}  // namespace apraudit::scripted

#include "apraudit/scripted.h"

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "apraudit/error.h"

namespace apraudit::scripted {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t Fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct ScenarioImage : ProgramImage {
  Scenario scenario;
};

std::string BehaviorName(const Behavior& b) {
  struct {
    std::string operator()(const AlwaysPass&) const { return "AlwaysPass"; }
    std::string operator()(const AlwaysFail&) const { return "AlwaysFail"; }
    std::string operator()(const FlakyFail&) const { return "FlakyFail"; }
    std::string operator()(const FailOnlyInFullSuite&) const { return "FailOnlyInFullSuite"; }
    std::string operator()(const PassOnlyInFullSuite&) const { return "PassOnlyInFullSuite"; }
    std::string operator()(const FailAfterNthExecution&) const { return "FailAfterNthExecution"; }
  } visitor;
  return std::visit(visitor, b);
}

}  // namespace

double Draw(std::uint64_t seed, std::string_view test_id, std::uint64_t execution, Mode mode) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(Fnv1a(test_id)),
                    static_cast<std::uint32_t>(Fnv1a(test_id) >> 32),
                    static_cast<std::uint32_t>(execution),
                    static_cast<std::uint32_t>(execution >> 32),
                    static_cast<std::uint32_t>(mode == Mode::kWholeSuite ? 0 : 1)};
  std::mt19937_64 engine(seq);
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

TestOutcome Replay(const Scenario& scenario, const ScriptedTest& test, Mode mode,
                   std::uint64_t execution) {
  TestOutcome o;
  o.test_id = test.id;
  auto fail = [&](std::string message) {
    o.status = TestStatus::kFail;
    o.message = std::move(message);
  };
  std::visit(
      [&](const auto& b) {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, AlwaysFail>) {
          fail(b.message);
        } else if constexpr (std::is_same_v<B, FlakyFail>) {
          if (Draw(scenario.seed, test.id, execution, mode) < b.p) fail("flaky failure");
        } else if constexpr (std::is_same_v<B, FailOnlyInFullSuite>) {
          if (mode == Mode::kWholeSuite) fail("fails when run with the whole suite");
        } else if constexpr (std::is_same_v<B, PassOnlyInFullSuite>) {
          if (mode == Mode::kSingleTest) fail("fails when run on its own");
        } else if constexpr (std::is_same_v<B, FailAfterNthExecution>) {
          if (execution >= b.n) fail("fails from execution " + std::to_string(b.n) + " on");
        }
      },
      test.behavior);
  return o;
}

Scenario ParseScenario(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario is not valid JSON: ") + e.what());
  }
  Scenario s;
  try {
    s.defect_id = doc.at("defect_id").get<std::string>();
    s.parse_ok = doc.value("parse_ok", true);
    s.compile_ok = doc.value("compile_ok", true);
    s.seed = doc.value("seed", std::uint64_t{0});
    std::set<std::string> ids;
    for (const auto& t : doc.at("tests")) {
      ScriptedTest test;
      test.id = t.at("id").get<std::string>();
      if (!ids.insert(test.id).second) {
        throw ValidationError(s.defect_id, "tests", "duplicate test id '" + test.id + "'");
      }
      std::string kind = t.at("behavior").get<std::string>();
      if (kind == "AlwaysPass") {
        test.behavior = AlwaysPass{};
      } else if (kind == "AlwaysFail") {
        test.behavior = AlwaysFail{t.value("message", std::string("scripted failure"))};
      } else if (kind == "FlakyFail") {
        double p = t.at("p").get<double>();
        if (!(p >= 0.0 && p <= 1.0)) {
          throw ValidationError(s.defect_id, "tests", "FlakyFail probability outside [0,1]");
        }
        test.behavior = FlakyFail{p};
      } else if (kind == "FailOnlyInFullSuite") {
        test.behavior = FailOnlyInFullSuite{};
      } else if (kind == "PassOnlyInFullSuite") {
        test.behavior = PassOnlyInFullSuite{};
      } else if (kind == "FailAfterNthExecution") {
        auto n = t.at("n").get<std::uint64_t>();
        if (n == 0) throw ValidationError(s.defect_id, "tests", "FailAfterNthExecution needs n >= 1");
        test.behavior = FailAfterNthExecution{n};
      } else {
        throw ParseError("unknown behavior '" + kind + "'");
      }
      s.tests.push_back(std::move(test));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed scenario: ") + e.what());
  }
  return s;
}

Scenario LoadScenario(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseScenario(ss.str());
}

std::string SerializeScenario(const Scenario& s) {
  json tests = json::array();
  for (const auto& t : s.tests) {
    json j = {{"id", t.id}, {"behavior", BehaviorName(t.behavior)}};
    if (const auto* f = std::get_if<AlwaysFail>(&t.behavior)) j["message"] = f->message;
    if (const auto* f = std::get_if<FlakyFail>(&t.behavior)) j["p"] = f->p;
    if (const auto* f = std::get_if<FailAfterNthExecution>(&t.behavior)) j["n"] = f->n;
    tests.push_back(std::move(j));
  }
  json doc = {{"defect_id", s.defect_id}, {"parse_ok", s.parse_ok}, {"compile_ok", s.compile_ok},
              {"seed", s.seed},           {"tests", std::move(tests)}};
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// ScriptedAdapter

Scenario ScriptedAdapter::Read(const Workspace& ws) const {
  try {
    return LoadScenario(ws.source_dir() / kScenarioFile);
  } catch (const Error& e) {
    throw AdapterFailure("scripted workspace " + ws.label() + ": " + e.what());
  }
}

void ScriptedAdapter::Log(const std::string& defect_id, std::string call) {
  std::lock_guard lock(mu_);
  calls_[defect_id].push_back(std::move(call));
}

ParseReport ScriptedAdapter::Parse(const Workspace& ws) {
  Scenario s = Read(ws);
  Log(ws.defect_id(), "parse");
  ParseReport r;
  r.ok = s.parse_ok;
  if (!r.ok) r.diagnostics.push_back({std::string(kScenarioFile), 1, 1, "scripted parse failure"});
  return r;
}

CompileResult ScriptedAdapter::Compile(Workspace& ws) {
  Scenario s = Read(ws);
  Log(ws.defect_id(), "compile");
  CompileResult r;
  r.ok = s.compile_ok && s.parse_ok;
  if (!r.ok) {
    r.diagnostics.push_back({std::string(kScenarioFile), 1, 1, "scripted compilation failure"});
    ws.set_image(nullptr);
  } else {
    auto image = std::make_shared<ScenarioImage>();
    image->scenario = std::move(s);
    ws.set_image(std::move(image));
  }
  return r;
}

SuiteResult ScriptedAdapter::RunSuite(Workspace& ws) {
  const auto* image = dynamic_cast<const ScenarioImage*>(ws.image().get());
  if (image == nullptr) throw AdapterFailure("scripted workspace " + ws.label() + " not compiled");
  std::uint64_t execution;
  {
    std::lock_guard lock(mu_);
    execution = ++executions_[ws.defect_id()];
    workspace_execution_[ws.root().string()] = execution;
    calls_[ws.defect_id()].push_back("run_suite");
  }
  SuiteResult r;
  for (const auto& t : image->scenario.tests) {
    r.outcomes.emplace(t.id, Replay(image->scenario, t, Mode::kWholeSuite, execution));
  }
  return r;
}

SingleRun ScriptedAdapter::RunSingle(Workspace& ws, std::string_view test_id) {
  const auto* image = dynamic_cast<const ScenarioImage*>(ws.image().get());
  if (image == nullptr) throw AdapterFailure("scripted workspace " + ws.label() + " not compiled");
  const ScriptedTest* test = nullptr;
  for (const auto& t : image->scenario.tests) {
    if (t.id == test_id) test = &t;
  }
  if (test == nullptr) throw UnknownTest("no test '" + std::string(test_id) + "'");
  std::uint64_t execution;
  {
    std::lock_guard lock(mu_);
    auto it = workspace_execution_.find(ws.root().string());
    execution = it != workspace_execution_.end() ? it->second : executions_[ws.defect_id()] + 1;
    calls_[ws.defect_id()].push_back("run_single:" + std::string(test_id));
  }
  SingleRun out;
  out.outcome = Replay(image->scenario, *test, Mode::kSingleTest, execution);
  out.coverage.test_id = test->id;
  out.coverage.outcome = out.outcome;
  return out;
}

std::vector<std::string> ScriptedAdapter::CallLog(const std::string& defect_id) const {
  std::lock_guard lock(mu_);
  auto it = calls_.find(defect_id);
  return it == calls_.end() ? std::vector<std::string>{} : it->second;
}

std::uint64_t ScriptedAdapter::Executions(const std::string& defect_id) const {
  std::lock_guard lock(mu_);
  auto it = executions_.find(defect_id);
  return it == executions_.end() ? 0 : it->second;
}

void ScriptedAdapter::Reset() {
  std::lock_guard lock(mu_);
  executions_.clear();
  workspace_execution_.clear();
  calls_.clear();
}

}  // namespace apraudit::scripted

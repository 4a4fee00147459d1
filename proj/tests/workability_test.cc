#include "apraudit/workability.h"

#include <atomic>
#include <fstream>

#include "apraudit/error.h"
#include "apraudit/minilang.h"
#include "apraudit/records.h"
#include "apraudit/report.h"
#include "apraudit/results_log.h"
#include "apraudit/scripted.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "support.h"

namespace apraudit {
namespace {

namespace fs = std::filesystem;
using ::testing::ElementsAre;
using ::testing::HasSubstr;

// Adapter whose every phase is set by the test.
class FakeAdapter : public Adapter {
 public:
  bool parse_ok = true;
  bool compile_ok = true;
  std::map<TestId, TestStatus> suite;
  std::map<TestId, TestStatus> single;
  std::atomic<int> throw_from_round{-1};  // RunSuite throws from this call on
  std::atomic<int> suite_calls{0};
  std::vector<std::string> calls;
  std::mutex mu;

  ParseReport Parse(const Workspace&) override {
    Note("parse");
    ParseReport r;
    r.ok = parse_ok;
    if (!parse_ok) r.diagnostics.push_back({"a.x", 1, 1, "bad token"});
    return r;
  }
  CompileResult Compile(Workspace&) override {
    Note("compile");
    CompileResult r;
    r.ok = compile_ok;
    if (!compile_ok) r.diagnostics.push_back({"a.x", 2, 3, "no such symbol"});
    return r;
  }
  SuiteResult RunSuite(Workspace&) override {
    Note("run_suite");
    int n = suite_calls++;
    if (throw_from_round >= 0 && n >= throw_from_round) throw AdapterFailure("harness broke");
    SuiteResult r;
    for (const auto& [id, s] : suite) r.outcomes[id] = Outcome(id, s);
    return r;
  }
  SingleRun RunSingle(Workspace&, std::string_view id) override {
    Note("run_single:" + std::string(id));
    auto it = single.find(std::string(id));
    if (it == single.end()) throw UnknownTest(std::string(id));
    SingleRun r;
    r.outcome = Outcome(it->first, it->second);
    r.coverage.test_id = it->first;
    r.coverage.outcome = r.outcome;
    return r;
  }

 private:
  static TestOutcome Outcome(const TestId& id, TestStatus s) {
    TestOutcome o;
    o.test_id = id;
    o.status = s;
    if (s != TestStatus::kPass) o.message = "not ok";
    return o;
  }
  void Note(std::string c) {
    std::lock_guard lock(mu);
    calls.push_back(std::move(c));
  }
};

class WorkabilityTest : public ::testing::Test {
 protected:
  DefectEntry Entry(const std::string& id, TestIdSet expected) {
    return testing::MiniDefect(tmp / id, id, {{"main.mini", "fn f() { return 1; }"}}, {},
                               std::move(expected));
  }
  testing::TempDir tmp;
  WorkspaceFactory factory{tmp / "scratch"};
};

TEST_F(WorkabilityTest, WorkableWhenEverythingAgrees) {
  FakeAdapter a;
  a.suite = a.single = {{"T::bug", TestStatus::kFail}, {"T::ok", TestStatus::kPass}};
  RoundVerdict v = SetupTest(Entry("W/1", {"T::bug"}), a, factory, 3, 5);
  EXPECT_EQ(v.outcome, Outcome::kWorkable);
  EXPECT_EQ(v.failing, TestIdSet{"T::bug"});
  EXPECT_EQ(v.round_index, 3);
  EXPECT_EQ(v.parallelism, 5);
}

TEST_F(WorkabilityTest, CompileFailureStopsBeforeAnyTestRuns) {
  FakeAdapter a;
  a.compile_ok = false;
  a.suite = a.single = {{"T::bug", TestStatus::kFail}};
  RoundVerdict v = SetupTest(Entry("C/1", {"T::bug"}), a, factory);
  EXPECT_EQ(v.outcome, Outcome::kCompilationFails);
  EXPECT_THAT(a.calls, ElementsAre("parse", "compile"));
  ASSERT_EQ(v.diagnostics.size(), 1u);
  EXPECT_THAT(v.diagnostics[0], HasSubstr("no such symbol"));
}

TEST_F(WorkabilityTest, ParseFailureCountsAsCompilationFailure) {
  FakeAdapter a;
  a.parse_ok = false;
  RoundVerdict v = SetupTest(Entry("P/1", {}), a, factory);
  EXPECT_EQ(v.outcome, Outcome::kCompilationFails);
  EXPECT_THAT(a.calls, ElementsAre("parse"));
}

TEST_F(WorkabilityTest, InconsistentSuiteListsEveryDisagreement) {
  FakeAdapter a;
  a.suite = {{"T::a", TestStatus::kFail}, {"T::b", TestStatus::kPass}, {"T::c", TestStatus::kError}};
  a.single = {{"T::a", TestStatus::kPass}, {"T::b", TestStatus::kFail}, {"T::c", TestStatus::kError}};
  RoundVerdict v = SetupTest(Entry("I/1", {"T::a"}), a, factory);
  EXPECT_EQ(v.outcome, Outcome::kInconsistentSuite);
  EXPECT_THAT(v.disagreements,
              ElementsAre(Disagreement{"T::a", TestStatus::kFail, TestStatus::kPass},
                          Disagreement{"T::b", TestStatus::kPass, TestStatus::kFail}));
}

TEST_F(WorkabilityTest, ErrorAndFailAreDifferentStatuses) {
  FakeAdapter a;
  a.suite = {{"T::a", TestStatus::kError}};
  a.single = {{"T::a", TestStatus::kFail}};
  EXPECT_EQ(SetupTest(Entry("E/1", {"T::a"}), a, factory).outcome, Outcome::kInconsistentSuite);
}

TEST_F(WorkabilityTest, ResultDiffersNamesMissingAndExtra) {
  FakeAdapter a;
  a.suite = a.single = {{"T::a", TestStatus::kPass}, {"T::b", TestStatus::kFail}};
  RoundVerdict v = SetupTest(Entry("R/1", {"T::a"}), a, factory);
  EXPECT_EQ(v.outcome, Outcome::kResultDiffers);
  EXPECT_THAT(v.diagnostics, ElementsAre(HasSubstr("T::a"), HasSubstr("T::b")));
}

TEST_F(WorkabilityTest, EmptyExpectedAndNothingFails) {
  FakeAdapter a;
  a.suite = a.single = {{"T::a", TestStatus::kPass}};
  EXPECT_EQ(SetupTest(Entry("Z/1", {}), a, factory).outcome, Outcome::kWorkable);
}

// Every combination of phase results, against the first-failure rule
// written out directly.
TEST_F(WorkabilityTest, FirstFailingPhaseDecides) {
  DefectEntry e = Entry("X/1", {"T::a"});
  for (int mask = 0; mask < 16; ++mask) {
    bool parse_ok = mask & 1, compile_ok = mask & 2, consistent = mask & 4, as_expected = mask & 8;
    FakeAdapter a;
    a.parse_ok = parse_ok;
    a.compile_ok = compile_ok;
    TestStatus bug = as_expected ? TestStatus::kFail : TestStatus::kPass;
    a.suite = {{"T::a", bug}, {"T::b", TestStatus::kPass}};
    a.single = a.suite;
    if (!consistent) a.single["T::b"] = TestStatus::kFail;
    Outcome expected = !parse_ok || !compile_ok ? Outcome::kCompilationFails
                       : !consistent            ? Outcome::kInconsistentSuite
                       : !as_expected           ? Outcome::kResultDiffers
                                                : Outcome::kWorkable;
    EXPECT_EQ(SetupTest(e, a, factory).outcome, expected) << "mask " << mask;
  }
}

TEST_F(WorkabilityTest, AdapterFailurePropagates) {
  FakeAdapter a;
  a.throw_from_round = 0;
  EXPECT_THROW(SetupTest(Entry("F/1", {}), a, factory), AdapterFailure);
}

TEST(CombineRoundsTest, Rules) {
  RoundVerdict w{"A/1", Outcome::kWorkable, {"T::a"}};
  RoundVerdict other_failing{"A/1", Outcome::kWorkable, {"T::b"}};
  RoundVerdict rd{"A/1", Outcome::kResultDiffers, {"T::a"}};
  EXPECT_EQ(CombineRounds("A/1", {w, w, w}).outcome, Outcome::kWorkable);
  EXPECT_EQ(CombineRounds("A/1", {rd, rd}).outcome, Outcome::kResultDiffers);
  EXPECT_EQ(CombineRounds("A/1", {w, rd}).outcome, Outcome::kFlaky);
  EXPECT_EQ(CombineRounds("A/1", {w, other_failing}).outcome, Outcome::kFlaky);
  EXPECT_EQ(CombineRounds("A/1", {w}).outcome, Outcome::kWorkable);
  WorkabilityVerdict none = CombineRounds("A/1", {});
  EXPECT_TRUE(none.audit_error.has_value());
}

TEST(OutcomeTest, NamesRoundTrip) {
  for (Outcome o : kAllOutcomes) EXPECT_EQ(OutcomeFromString(ToString(o)), o);
  EXPECT_EQ(ReasonLabel(Outcome::kInconsistentSuite), "Inconsistent test suite");
  EXPECT_EQ(ReasonLabel(Outcome::kCompilationFails), "Compilation failed");
  EXPECT_EQ(ReasonLabel(Outcome::kResultDiffers), "Result differs from dataset");
  EXPECT_EQ(ReasonLabel(Outcome::kFlaky), "Flaky");
}

TEST(RoundConfigTest, ScheduleAndValidation) {
  RoundConfig cfg;
  EXPECT_EQ(cfg.rounds, 20);
  std::vector<int> levels;
  for (int r = 0; r < 8; ++r) levels.push_back(cfg.ParallelismFor(r));
  EXPECT_EQ(levels, (std::vector<int>{1, 5, 10, 15, 20, 25, 1, 5}));
  RoundConfig bad = cfg;
  bad.rounds = 0;
  EXPECT_THROW(bad.Validate(), ValidationError);
  bad = cfg;
  bad.parallelism_schedule = {};
  EXPECT_THROW(bad.Validate(), ValidationError);
  bad.parallelism_schedule = {1, 0};
  EXPECT_THROW(bad.Validate(), ValidationError);
}

TEST(ClassifyTest, EmptyDatasetWarns) {
  ExclusionSummary s = ClassifyDataset({});
  EXPECT_EQ(s.total, 0);
  EXPECT_EQ(s.workable_ratio, 1.0);
  EXPECT_EQ(s.warnings.size(), 1u);
  for (Outcome o : kAllOutcomes) EXPECT_EQ(s.counts.at(o), 0);
}

TEST(ClassifyTest, AuditErrorsAreNotCounted) {
  WorkabilityVerdict ok{"A/1", Outcome::kWorkable};
  WorkabilityVerdict flaky{"A/2", Outcome::kFlaky};
  WorkabilityVerdict broken{"A/3", Outcome::kWorkable, {}, "harness broke"};
  ExclusionSummary s = ClassifyDataset({ok, flaky, broken});
  EXPECT_EQ(s.total, 2);
  EXPECT_EQ(s.audit_errors, 1);
  EXPECT_EQ(s.excluded, 1);
  EXPECT_DOUBLE_EQ(s.workable_ratio, 0.5);
  EXPECT_THAT(s.warnings, ElementsAre(HasSubstr("audit error")));
}

TEST(ClassifyTest, BundledPopulationCounts) {
  report::PaperData data = report::LoadPaperData(testing::SourcePath("paper-data"));
  ExclusionSummary s = ClassifyDataset(data.verdicts);
  EXPECT_EQ(s.total, 835);
  EXPECT_EQ(s.counts.at(Outcome::kCompilationFails), 26);
  EXPECT_EQ(s.counts.at(Outcome::kInconsistentSuite), 126);
  EXPECT_EQ(s.counts.at(Outcome::kResultDiffers), 5);
  EXPECT_EQ(s.counts.at(Outcome::kFlaky), 23);
  EXPECT_EQ(s.excluded, 180);
  EXPECT_EQ(s.workable(), 655);
}

// Flakiness from a test that starts failing on the 13th suite execution.
TEST(AuditTest, LateFailureIsFlaky) {
  testing::TempDir tmp;
  WorkspaceFactory factory(tmp / "scratch");
  scripted::ScriptedAdapter adapter;
  DefectEntry e = testing::FixtureEntry("tests/fixtures/scripted/manifest.json", "Late/1");
  RoundConfig cfg;
  WorkabilityVerdict v = Audit(e, adapter, cfg, factory);
  EXPECT_EQ(v.outcome, Outcome::kFlaky);
  ASSERT_EQ(v.rounds.size(), 20u);
  for (int r = 0; r < 12; ++r) EXPECT_EQ(v.rounds[r].outcome, Outcome::kWorkable) << r;
  for (int r = 12; r < 20; ++r) EXPECT_EQ(v.rounds[r].outcome, Outcome::kResultDiffers) << r;

  cfg.rounds = 12;
  scripted::ScriptedAdapter again;
  EXPECT_EQ(Audit(e, again, cfg, factory).outcome, Outcome::kWorkable);
}

class AuditDatasetTest : public ::testing::Test {
 protected:
  AuditDatasetTest() {
    RegisterBuiltinAdapters(registry);
    cfg.rounds = 4;
    cfg.parallelism_schedule = {1, 3};
    options.scratch = tmp / "scratch";
  }
  Dataset Fixtures() { return LoadManifest(testing::SourcePath("tests/fixtures/minilang/manifest.json")); }

  testing::TempDir tmp;
  AdapterRegistry registry;
  RoundConfig cfg;
  AuditOptions options;
};

TEST_F(AuditDatasetTest, MiniLangFixtures) {
  AuditRun run = AuditDataset(Fixtures(), registry, cfg, tmp / "a.jsonl", options);
  EXPECT_TRUE(run.complete);
  EXPECT_EQ(run.rounds_completed, 4);
  std::map<std::string, Outcome> got;
  for (const auto& v : run.verdicts) got[v.defect_id] = v.outcome;
  EXPECT_EQ(got, (std::map<std::string, Outcome>{{"Help/1", Outcome::kWorkable},
                                                 {"Help/2", Outcome::kWorkable},
                                                 {"Counter/1", Outcome::kInconsistentSuite},
                                                 {"Counter/2", Outcome::kWorkable},
                                                 {"Math/1", Outcome::kWorkable}}));
  EXPECT_EQ(ReplayVerdicts(tmp / "a.jsonl"), run.verdicts);
}

TEST_F(AuditDatasetTest, ScriptedFixtures) {
  cfg.rounds = 20;
  Dataset ds = LoadManifest(testing::SourcePath("tests/fixtures/scripted/manifest.json"));
  AuditRun run = AuditDataset(ds, registry, cfg, tmp / "s.jsonl", options);
  std::vector<Outcome> got;
  for (const auto& v : run.verdicts) got.push_back(v.outcome);
  EXPECT_THAT(got, ElementsAre(Outcome::kCompilationFails, Outcome::kInconsistentSuite,
                               Outcome::kResultDiffers, Outcome::kFlaky));
}

TEST_F(AuditDatasetTest, ResumeAfterStopGivesTheSameLog) {
  AuditDataset(Fixtures(), registry, cfg, tmp / "full.jsonl", options);

  AuditOptions first = options;
  first.stop_after_rounds = 2;
  AuditRun partial = AuditDataset(Fixtures(), registry, cfg, tmp / "part.jsonl", first);
  EXPECT_FALSE(partial.complete);
  EXPECT_EQ(partial.rounds_completed, 2);
  EXPECT_TRUE(partial.verdicts.empty());

  // a torn record from an interrupted write is dropped on resume
  {
    std::ofstream out(tmp / "part.jsonl", std::ios::app);
    out << R"({"type":"round","defect":"Help/1","round":2,"parall)";
  }
  AuditRun rest = AuditDataset(Fixtures(), registry, cfg, tmp / "part.jsonl", options);
  EXPECT_TRUE(rest.complete);
  EXPECT_EQ(testing::ReadFile(tmp / "part.jsonl"), testing::ReadFile(tmp / "full.jsonl"));

  // running again on a finished log changes nothing
  AuditDataset(Fixtures(), registry, cfg, tmp / "part.jsonl", options);
  EXPECT_EQ(testing::ReadFile(tmp / "part.jsonl"), testing::ReadFile(tmp / "full.jsonl"));
}

TEST_F(AuditDatasetTest, LogOfAnotherAuditIsRefused) {
  AuditOptions stop = options;
  stop.stop_after_rounds = 1;
  AuditDataset(Fixtures(), registry, cfg, tmp / "a.jsonl", stop);
  RoundConfig other = cfg;
  other.rounds = 5;
  EXPECT_THROW(AuditDataset(Fixtures(), registry, other, tmp / "a.jsonl", options), ValidationError);
  AuditOptions fresh = options;
  fresh.resume = false;
  EXPECT_TRUE(AuditDataset(Fixtures(), registry, other, tmp / "a.jsonl", fresh).complete);
}

TEST_F(AuditDatasetTest, PublishedSummaryCannotRun) {
  report::PaperData data = report::LoadPaperData(testing::SourcePath("paper-data"));
  EXPECT_THROW(AuditDataset(data.dataset, registry, cfg, tmp / "x.jsonl", options), ValidationError);
}

TEST_F(AuditDatasetTest, UnknownAdapterFailsUpFront) {
  Dataset ds = Fixtures();
  ds.entries[2].adapter = "nope";
  EXPECT_THROW(AuditDataset(ds, registry, cfg, tmp / "x.jsonl", options), UnknownAdapter);
  EXPECT_FALSE(fs::exists(tmp / "x.jsonl"));
}

TEST_F(AuditDatasetTest, HarnessFailureBecomesAuditError) {
  auto fake = std::make_shared<FakeAdapter>();
  fake->suite = fake->single = {{"T::a", TestStatus::kFail}};
  fake->throw_from_round = 1;
  registry.Register("fake", fake);
  Dataset ds;
  ds.name = "mixed";
  ds.version = "1";
  ds.entries.push_back(testing::MiniDefect(tmp / "f", "Fake/1", {{"m.mini", ""}}, {}, {"T::a"}));
  ds.entries.back().adapter = "fake";
  Dataset fixtures = Fixtures();
  ds.entries.push_back(fixtures.entries[0]);
  cfg.parallelism_schedule = {1};
  AuditRun run = AuditDataset(ds, registry, cfg, tmp / "e.jsonl", options);
  EXPECT_TRUE(run.any_audit_error);
  ASSERT_EQ(run.verdicts.size(), 2u);
  EXPECT_THAT(*run.verdicts[0].audit_error, HasSubstr("harness broke"));
  EXPECT_FALSE(run.verdicts[1].audit_error.has_value());
  // the broken defect is not retried in later rounds
  EXPECT_EQ(fake->suite_calls.load(), 2);
  int errors = 0;
  for (const auto& r : ReadLogRecords(tmp / "e.jsonl")) {
    if (records::TypeOf(r) == records::kAuditError) ++errors;
  }
  EXPECT_EQ(errors, 1);
}

// The same defects audited serially and on a wide pool give identical
// per-round outcomes and failing sets.
TEST_F(AuditDatasetTest, ParallelismDoesNotChangeResults) {
  auto project = [](const std::vector<WorkabilityVerdict>& vs) {
    std::vector<std::tuple<std::string, Outcome, std::vector<std::pair<Outcome, TestIdSet>>>> out;
    for (const auto& v : vs) {
      std::vector<std::pair<Outcome, TestIdSet>> rounds;
      for (const auto& r : v.rounds) rounds.emplace_back(r.outcome, r.failing);
      out.emplace_back(v.defect_id, v.outcome, rounds);
    }
    return out;
  };
  cfg.parallelism_schedule = {1};
  auto serial = AuditDataset(Fixtures(), registry, cfg, tmp / "1.jsonl", options);
  cfg.parallelism_schedule = {10};
  auto wide = AuditDataset(Fixtures(), registry, cfg, tmp / "10.jsonl", options);
  EXPECT_EQ(project(serial.verdicts), project(wide.verdicts));
}

}  // namespace
}  // namespace apraudit

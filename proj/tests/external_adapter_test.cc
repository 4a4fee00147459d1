#include "apraudit/external_adapter.h"

#include <sstream>

#include "apraudit/error.h"
#include "apraudit/minilang.h"
#include "apraudit/workability.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "support.h"

namespace apraudit {
namespace {

using ::testing::HasSubstr;

const char* kManifest = "tests/fixtures/minilang/manifest.json";

TEST(ProtocolTest, RoundTrips) {
  Diagnostic d{"a.mini", 3, 10, "unknown function 'g'", true};
  EXPECT_EQ(protocol::DiagnosticFrom(protocol::ToJson(d)), d);
  SuiteResult r;
  r.outcomes["T::a"] = {"T::a", TestStatus::kFail, "boom", Millis(3)};
  r.outcomes["T::b"] = {"T::b", TestStatus::kPass, std::nullopt, Millis(1)};
  r.abnormal = "budget";
  SuiteResult back = protocol::SuiteFrom(protocol::ToJson(r));
  EXPECT_EQ(back.FailingTests(), TestIdSet{"T::a"});
  EXPECT_EQ(back.outcomes.at("T::a").message, "boom");
  EXPECT_EQ(back.abnormal, "budget");
}

TEST(ServeAdapterTest, AnswersOneLinePerRequest) {
  testing::TempDir tmp;
  WorkspaceFactory factory(tmp / "scratch");
  DefectEntry e = testing::FixtureEntry(kManifest, "Math/1");
  Workspace ws = factory.Checkout(e, "serve");
  std::string base = ws.root().parent_path().string();
  nlohmann::json limits = {{"suite_timeout_ms", 60000}, {"test_timeout_ms", 10000}};
  std::ostringstream req;
  for (const char* op : {"parse", "compile", "run_suite"}) {
    req << nlohmann::json{{"op", op}, {"defect", e.id}, {"workspace", base}, {"limits", limits}}.dump()
        << "\n";
  }
  req << nlohmann::json{{"op", "run_single"}, {"defect", e.id}, {"workspace", base},
                        {"test", "MathTest::nope"}, {"limits", limits}}.dump() << "\n";
  req << "not json\n";
  std::istringstream in(req.str());
  std::ostringstream out;
  minilang::MiniLangAdapter adapter;
  EXPECT_EQ(ServeAdapter(adapter, in, out), 5);
  std::vector<nlohmann::json> lines;
  std::istringstream back(out.str());
  for (std::string l; std::getline(back, l);) lines.push_back(nlohmann::json::parse(l));
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_TRUE(lines[0].at("ok").get<bool>());
  EXPECT_TRUE(lines[1].at("ok").get<bool>());
  EXPECT_EQ(lines[2].at("outcomes").size(), 6u);
  EXPECT_EQ(lines[3].at("kind"), "unknown_test");
  EXPECT_TRUE(lines[4].contains("error"));
}

class ExternalAdapterTest : public ::testing::Test {
 protected:
  testing::TempDir tmp;
  WorkspaceFactory factory{tmp / "scratch"};
};

// Verdicts through the driver process match the in-process adapter.
TEST_F(ExternalAdapterTest, DriverMatchesInProcessAdapter) {
  ExternalAdapter external({APRAUDIT_DRIVER}, 2);
  minilang::MiniLangAdapter local;
  Dataset ds = LoadManifest(testing::SourcePath(kManifest));
  for (const auto& e : ds.entries) {
    RoundVerdict a = SetupTest(e, external, factory);
    RoundVerdict b = SetupTest(e, local, factory);
    EXPECT_EQ(a.outcome, b.outcome) << e.id;
    EXPECT_EQ(a.failing, b.failing) << e.id;
    EXPECT_EQ(a.disagreements, b.disagreements) << e.id;
  }
  EXPECT_GE(external.processes_started(), 1);
  EXPECT_LE(external.processes_started(), 2);
}

TEST_F(ExternalAdapterTest, CoverageComesBack) {
  ExternalAdapter external({APRAUDIT_DRIVER}, 1);
  DefectEntry e = testing::FixtureEntry(kManifest, "Math/1");
  Workspace ws = factory.Checkout(e, "cov");
  ASSERT_TRUE(external.Compile(ws).ok);
  SingleRun r = external.RunSingle(ws, "MathTest::test_abs_minus_one");
  EXPECT_FALSE(r.outcome.passed());
  EXPECT_EQ(r.coverage.covered,
            (std::set<StatementLocation>{{"math.mini", 1}, {"math.mini", 3}}));
  EXPECT_THROW(external.RunSingle(ws, "MathTest::missing"), UnknownTest);
  EXPECT_THROW(external.DeleteStatement(ws, {"math.mini", 1}), AdapterFailure);
}

TEST_F(ExternalAdapterTest, MissingProgram) {
  ExternalAdapter external({"/nonexistent/adapter-binary"});
  DefectEntry e = testing::FixtureEntry(kManifest, "Math/1");
  Workspace ws = factory.Checkout(e, "x");
  EXPECT_THROW(external.Parse(ws), AdapterFailure);
}

TEST_F(ExternalAdapterTest, GarbageResponseIsAProtocolError) {
  ExternalAdapter external({"sh", "-c", "while read l; do echo 'this is not json'; done"});
  DefectEntry e = testing::FixtureEntry(kManifest, "Math/1");
  Workspace ws = factory.Checkout(e, "x");
  EXPECT_THROW(external.Parse(ws), ProtocolError);
}

TEST_F(ExternalAdapterTest, WrongShapeIsAProtocolError) {
  ExternalAdapter external({"sh", "-c", "while read l; do echo '[1,2]'; done"});
  DefectEntry e = testing::FixtureEntry(kManifest, "Math/1");
  Workspace ws = factory.Checkout(e, "x");
  EXPECT_THROW(external.Compile(ws), ProtocolError);
}

TEST_F(ExternalAdapterTest, ProcessThatExitsIsAProtocolError) {
  ExternalAdapter external({"true"});
  DefectEntry e = testing::FixtureEntry(kManifest, "Math/1");
  Workspace ws = factory.Checkout(e, "x");
  EXPECT_THROW(external.Parse(ws), ProtocolError);
}

}  // namespace
}  // namespace apraudit

#include "apraudit/dataset.h"

#include <map>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "apraudit/error.h"
#include "support.h"

namespace apraudit {
namespace {

using ::testing::HasSubstr;
using testing::TempDir;
using testing::WriteFile;

constexpr const char* kReplaceCondition =
    "--- a/src/Option.java\n"
    "+++ b/src/Option.java\n"
    "@@ -10,3 +10,3 @@\n"
    " String render() {\n"
    "-  if (argName != null) {\n"
    "+  if (argName != null && argName.length() > 0) {\n"
    "     out.append(argName);\n";

TEST(ParseUnifiedDiffTest, DropsContextAndPrefixes) {
  Patch p = ParseUnifiedDiff(kReplaceCondition);
  ASSERT_EQ(p.hunks.size(), 1u);
  EXPECT_EQ(p.hunks[0].file, "src/Option.java");
  EXPECT_EQ(p.hunks[0].removed, std::vector<std::string>{"  if (argName != null) {"});
  EXPECT_EQ(p.hunks[0].added.size(), 1u);
}

TEST(ParseUnifiedDiffTest, MiscountedHunkIsRejected) {
  EXPECT_THROW(ParseUnifiedDiff("--- a/x\n+++ b/x\n@@ -1,3 +1,3 @@\n-a\n"), ParseError);
  EXPECT_THROW(ParseUnifiedDiff("@@ -1,1 +1,1 @@\n-a\n+b\n"), ParseError);
}

TEST(IsDeletionOnlyTest, PureDeletion) {
  Patch p = ParseUnifiedDiff("--- a/f\n+++ b/f\n@@ -1,4 +1,1 @@\n keep\n-a\n-b\n-c\n");
  EXPECT_EQ(p.hunks[0].removed.size(), 3u);
  EXPECT_TRUE(IsDeletionOnly(p));
}

TEST(IsDeletionOnlyTest, ReplacedConditionIsNot) {
  EXPECT_FALSE(IsDeletionOnly(ParseUnifiedDiff(kReplaceCondition)));
}

TEST(IsDeletionOnlyTest, EveryHunkMustBeADeletion) {
  Patch p = ParseUnifiedDiff(
      "--- a/f\n+++ b/f\n@@ -1,2 +1,1 @@\n k\n-a\n@@ -9,1 +8,2 @@\n k\n+b\n");
  ASSERT_EQ(p.hunks.size(), 2u);
  EXPECT_TRUE(p.hunks[0].added.empty());
  EXPECT_FALSE(IsDeletionOnly(p));
}

TEST(IsDeletionOnlyTest, AgreesWithAddedLineCount) {
  const char* patches[] = {
      kReplaceCondition,
      "--- a/f\n+++ b/f\n@@ -1,1 +1,0 @@\n-a\n",
      "--- a/f\n+++ b/f\n@@ -1,0 +1,2 @@\n+a\n+b\n",
      "--- a/f\n+++ b/f\n@@ -1,1 +1,0 @@\n-a\n--- a/g\n+++ b/g\n@@ -3,1 +3,0 @@\n-z\n",
  };
  for (const char* text : patches) {
    Patch p = ParseUnifiedDiff(text);
    EXPECT_EQ(IsDeletionOnly(p), AddedLineCount(p) == 0) << text;
  }
}

class ManifestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    for (const char* d : {"a/src", "a/test", "b/src", "b/test"}) {
      std::filesystem::create_directories(dir_ / d);
    }
    WriteFile(dir_ / "fix.diff", "--- a/main.mini\n+++ b/main.mini\n@@ -1,1 +1,1 @@\n-x\n+y\n");
  }

  std::string Entry(const std::string& id, const std::string& root,
                    const std::string& extra = "") const {
    return R"({"id":")" + id + R"(","source_root":")" + root + R"(/src","test_root":")" + root +
           R"(/test","adapter":"minilang","expected_failing":["T::t"],"patch":"fix.diff")" + extra +
           "}";
  }

  Dataset Parse(const std::string& entries) const {
    return ParseManifest(R"({"dataset":{"name":"demo","version":"1"},"entries":[)" + entries + "]}",
                         dir_.path());
  }

  TempDir dir_;
};

TEST_F(ManifestTest, TwoValidEntries) {
  Dataset ds = Parse(Entry("Demo/1", "a") + "," + Entry("Demo/2", "b"));
  ASSERT_EQ(ds.entries.size(), 2u);
  EXPECT_EQ(ds.entries[0].project, "Demo");
  EXPECT_EQ(ds.entries[0].source_root, dir_.path() / "a/src");
  EXPECT_EQ(ds.entries[1].expected_failing, TestIdSet{"T::t"});
}

TEST_F(ManifestTest, DuplicateIdNamesTheEntry) {
  try {
    Parse(Entry("Demo/1", "a") + "," + Entry("Demo/1", "b"));
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.entry_id(), "Demo/1");
    EXPECT_EQ(e.field(), "id");
  }
}

TEST_F(ManifestTest, EmptyExpectedFailing) {
  std::string e = Entry("Demo/1", "a");
  e.replace(e.find(R"(["T::t"])"), 8, "[]");
  try {
    Parse(e);
    FAIL();
  } catch (const ValidationError& err) {
    EXPECT_EQ(err.field(), "expected_failing");
  }
}

TEST_F(ManifestTest, MissingDirectory) {
  EXPECT_THROW(Parse(Entry("Demo/1", "nope")), ValidationError);
}

TEST_F(ManifestTest, OverlappingTrees) {
  std::string e = R"({"id":"Demo/1","source_root":"a","test_root":"a/test","adapter":"minilang",)"
                  R"("expected_failing":["T::t"],"patch":"fix.diff"})";
  try {
    Parse(e);
    FAIL();
  } catch (const ValidationError& err) {
    EXPECT_EQ(err.field(), "test_root");
  }
}

TEST_F(ManifestTest, PatchOutsideSourceRoot) {
  WriteFile(dir_ / "escape.diff", "--- a/../x\n+++ b/../x\n@@ -1,1 +1,1 @@\n-x\n+y\n");
  std::string e = Entry("Demo/1", "a");
  e.replace(e.find("fix.diff"), 8, "escape.diff");
  try {
    Parse(e);
    FAIL();
  } catch (const ValidationError& err) {
    EXPECT_EQ(err.field(), "patch");
  }
}

TEST_F(ManifestTest, PatchWithoutHunks) {
  WriteFile(dir_ / "empty.diff", "");
  std::string e = Entry("Demo/1", "a");
  e.replace(e.find("fix.diff"), 8, "empty.diff");
  EXPECT_THROW(Parse(e), ValidationError);
}

TEST_F(ManifestTest, MalformedJson) {
  EXPECT_THROW(ParseManifest("{", dir_.path()), ParseError);
  EXPECT_THROW(LoadManifest(dir_ / "missing.json"), ParseError);
}

TEST_F(ManifestTest, NoEntries) { EXPECT_THROW(Parse(""), ValidationError); }

TEST_F(ManifestTest, Deterministic) {
  WriteFile(dir_ / "m.json", R"({"dataset":{"name":"demo","version":"1"},"entries":[)" +
                                 Entry("Demo/1", "a", R"(,"notes":"n")") + "]}");
  EXPECT_EQ(LoadManifest(dir_ / "m.json"), LoadManifest(dir_ / "m.json"));
}

TEST(BundledDataTest, SummaryManifestHas835Defects) {
  Dataset ds = LoadManifest(testing::SourcePath("paper-data/defects4j-2.0-summary.json"));
  EXPECT_EQ(ds.kind, DatasetKind::kPublishedSummary);
  ASSERT_EQ(ds.entries.size(), 835u);
  std::map<std::string, int> per_project;
  for (const auto& e : ds.entries) ++per_project[e.project];
  EXPECT_EQ(per_project.size(), 17u);
  // Active bug counts of Defects4J 2.0.0, one line per project.
  const std::map<std::string, int> expected = {
      {"Chart", 26},   {"Cli", 39},         {"Closure", 174},         {"Codec", 18},
      {"Collections", 4}, {"Compress", 47}, {"Csv", 16},             {"Gson", 18},
      {"JacksonCore", 26}, {"JacksonDatabind", 112}, {"JacksonXml", 6}, {"Jsoup", 93},
      {"JxPath", 22},  {"Lang", 64},        {"Math", 106},            {"Mockito", 38},
      {"Time", 26}};
  EXPECT_EQ(per_project, expected);
  for (const char* gone : {"Lang/2", "Time/21", "Closure/63", "Closure/93", "Cli/6"}) {
    EXPECT_EQ(ds.Find(gone), nullptr) << gone;
  }
}

TEST(SplitDefectIdTest, Basic) {
  auto n = SplitDefectId("JacksonDatabind/95");
  ASSERT_TRUE(n.has_value());
  EXPECT_EQ(n->project, "JacksonDatabind");
  EXPECT_EQ(n->number, 95);
  EXPECT_FALSE(SplitDefectId("Demo/x").has_value());
  EXPECT_FALSE(SplitDefectId("nodelimiter").has_value());
}

}  // namespace
}  // namespace apraudit

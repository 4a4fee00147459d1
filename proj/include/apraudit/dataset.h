#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace apraudit {

// Test ids have the form "TestClass::test_name".
using TestId = std::string;
using TestIdSet = std::set<TestId>;

struct Hunk {
  std::string file;  // relative to the defect's source root
  std::vector<std::string> removed;
  std::vector<std::string> added;

  bool operator==(const Hunk&) const = default;
};

struct Patch {
  std::vector<Hunk> hunks;

  bool operator==(const Patch&) const = default;
};

// Parses unified-diff text. Context lines are dropped; "a/" and "b/" path
// prefixes are stripped. Throws ParseError on malformed input.
Patch ParseUnifiedDiff(std::string_view text);

// True iff every hunk adds nothing.
bool IsDeletionOnly(const Patch& patch);

std::size_t AddedLineCount(const Patch& patch);

struct DefectEntry {
  std::string id;
  std::string project;
  std::filesystem::path source_root;
  std::filesystem::path test_root;
  std::string adapter;
  TestIdSet expected_failing;
  Patch human_patch;
  std::optional<std::string> notes;

  bool operator==(const DefectEntry&) const = default;
};

enum class DatasetKind {
  // Every entry is backed by source and test trees that can be executed.
  kExecutable,
  // Entries only name published defects; no trees, patches or expected
  // failing tests are attached. Used for the bundled paper-data population.
  kPublishedSummary,
};

struct Dataset {
  std::string name;
  std::string version;
  DatasetKind kind = DatasetKind::kExecutable;
  std::vector<DefectEntry> entries;

  const DefectEntry* Find(std::string_view id) const;

  bool operator==(const Dataset&) const = default;
};

// Loads and validates a JSON manifest. Relative paths resolve against the
// manifest's directory. Throws ParseError or ValidationError.
Dataset LoadManifest(const std::filesystem::path& path);

// Same, from in-memory text; `base_dir` anchors relative paths.
Dataset ParseManifest(std::string_view text, const std::filesystem::path& base_dir);

// Splits "Project/Number" ids. Returns nullopt if the suffix is not numeric.
struct DefectNumber {
  std::string project;
  long number = 0;
};
std::optional<DefectNumber> SplitDefectId(std::string_view id);

}  // namespace apraudit

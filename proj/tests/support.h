#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "apraudit/dataset.h"

namespace apraudit::testing {

// Fresh directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

void WriteFile(const std::filesystem::path& path, const std::string& text);
std::string ReadFile(const std::filesystem::path& path);

// Path under the source tree, e.g. SourcePath("tests/fixtures/...").
std::filesystem::path SourcePath(const std::string& rel);

// Writes a minilang defect (src/, test/, fix.diff) below `dir` and returns
// its entry. `sources` and `tests` map relative file names to text.
DefectEntry MiniDefect(const std::filesystem::path& dir, const std::string& id,
                       const std::map<std::string, std::string>& sources,
                       const std::map<std::string, std::string>& tests,
                       const TestIdSet& expected_failing, const std::string& patch = "");

// Entry for a scripted scenario written below `dir`.
DefectEntry ScriptedDefect(const std::filesystem::path& dir, const std::string& scenario_json,
                           const TestIdSet& expected_failing);

// Entry of a fixture manifest by id.
DefectEntry FixtureEntry(const std::string& manifest_rel, const std::string& id);

// Runs a shell command, returning exit status and captured stdout+stderr.
struct CommandResult {
  int status = -1;
  std::string output;
};
CommandResult RunCommand(const std::string& command);

}  // namespace apraudit::testing

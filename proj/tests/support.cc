#include "support.h"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "apraudit/scripted.h"

namespace apraudit::testing {
namespace fs = std::filesystem;

TempDir::TempDir() {
  std::random_device rd;
  for (int i = 0; i < 100; ++i) {
    fs::path p = fs::temp_directory_path() / ("apraudit-test-" + std::to_string(rd()));
    if (fs::create_directory(p)) {
      path_ = p;
      return;
    }
  }
  throw std::runtime_error("cannot create temp dir");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void WriteFile(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path SourcePath(const std::string& rel) { return fs::path(APRAUDIT_SOURCE_DIR) / rel; }

namespace {

const char* kDefaultPatch =
    "--- a/main.mini\n+++ b/main.mini\n@@ -1,1 +1,1 @@\n-x\n+y\n";

}  // namespace

DefectEntry MiniDefect(const fs::path& dir, const std::string& id,
                       const std::map<std::string, std::string>& sources,
                       const std::map<std::string, std::string>& tests,
                       const TestIdSet& expected_failing, const std::string& patch) {
  fs::create_directories(dir / "src");
  fs::create_directories(dir / "test");
  for (const auto& [name, text] : sources) WriteFile(dir / "src" / name, text);
  for (const auto& [name, text] : tests) WriteFile(dir / "test" / name, text);
  DefectEntry e;
  e.id = id;
  e.project = id.substr(0, id.find('/'));
  e.source_root = dir / "src";
  e.test_root = dir / "test";
  e.adapter = "minilang";
  e.expected_failing = expected_failing;
  e.human_patch = ParseUnifiedDiff(patch.empty() ? kDefaultPatch : patch);
  return e;
}

DefectEntry ScriptedDefect(const fs::path& dir, const std::string& scenario_json,
                           const TestIdSet& expected_failing) {
  fs::create_directories(dir / "test");
  WriteFile(dir / "src" / std::string(scripted::kScenarioFile), scenario_json);
  scripted::Scenario s = scripted::ParseScenario(scenario_json);
  DefectEntry e;
  e.id = s.defect_id;
  e.project = e.id.substr(0, e.id.find('/'));
  e.source_root = dir / "src";
  e.test_root = dir / "test";
  e.adapter = "scripted";
  e.expected_failing = expected_failing;
  e.human_patch = ParseUnifiedDiff(kDefaultPatch);
  return e;
}

DefectEntry FixtureEntry(const std::string& manifest_rel, const std::string& id) {
  Dataset ds = LoadManifest(SourcePath(manifest_rel));
  const DefectEntry* e = ds.Find(id);
  if (e == nullptr) throw std::runtime_error("no fixture entry " + id);
  return *e;
}

CommandResult RunCommand(const std::string& command) {
  CommandResult r;
  FILE* pipe = ::popen((command + " 2>&1").c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  int status = ::pclose(pipe);
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace apraudit::testing

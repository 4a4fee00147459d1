#pragma once

#include <atomic>
#include <chrono>
#include <compare>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "apraudit/dataset.h"

namespace apraudit {

using Millis = std::chrono::milliseconds;

// A statement in the unmutated source tree: file path relative to the
// source root, and 1-based pre-order index within that file.
struct StatementLocation {
  std::string file;
  int statement_index = 0;

  auto operator<=>(const StatementLocation&) const = default;
  bool operator==(const StatementLocation&) const = default;

  std::string ToString() const;  // "file#index"
  static StatementLocation Parse(std::string_view text);
};

struct Diagnostic {
  std::string file;
  int line = 0;
  int column = 0;
  std::string message;
  bool error = true;

  bool operator==(const Diagnostic&) const = default;
  std::string ToString() const;
};

struct ParseReport {
  bool ok = true;
  std::vector<Diagnostic> diagnostics;
};

struct CompileResult {
  bool ok = true;
  std::vector<Diagnostic> diagnostics;
};

enum class TestStatus { kPass, kFail, kError, kTimeout };

std::string_view ToString(TestStatus s);
TestStatus TestStatusFromString(std::string_view s);

struct TestOutcome {
  TestId test_id;
  TestStatus status = TestStatus::kPass;
  std::optional<std::string> message;  // absent when status is kPass
  Millis duration{0};

  bool passed() const { return status == TestStatus::kPass; }
};

struct SuiteResult {
  std::map<TestId, TestOutcome> outcomes;
  Millis wall_time{0};
  // Set when the suite did not run to completion (subject crash or the
  // whole-suite budget ran out). Unfinished tests are reported as kError or
  // kTimeout rather than dropped.
  std::optional<std::string> abnormal;

  TestIdSet FailingTests() const;
  bool AllPassed() const;
};

struct CoverageRecord {
  TestId test_id;
  std::set<StatementLocation> covered;
  TestOutcome outcome;
};

struct SingleRun {
  TestOutcome outcome;
  CoverageRecord coverage;
};

// Opaque per-adapter build product stored on a workspace by Compile().
class ProgramImage {
 public:
  virtual ~ProgramImage() = default;
};

// A private copy of one defect's source and test trees plus a private
// scratch directory. Move-only; the directory tree is removed on
// destruction unless Keep() was called.
class Workspace {
 public:
  Workspace(std::string defect_id, std::string label, std::filesystem::path base);
  Workspace(Workspace&& other) noexcept;
  Workspace& operator=(Workspace&& other) noexcept;
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;
  ~Workspace();

  const std::string& defect_id() const { return defect_id_; }
  const std::string& label() const { return label_; }
  // Private copy of the subject: root()/src and root()/test.
  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path source_dir() const { return root_ / "src"; }
  std::filesystem::path test_dir() const { return root_ / "test"; }
  const std::filesystem::path& temp_dir() const { return temp_dir_; }

  void Keep() { keep_ = true; }

  const std::shared_ptr<const ProgramImage>& image() const { return image_; }
  void set_image(std::shared_ptr<const ProgramImage> image) { image_ = std::move(image); }

 private:
  std::string defect_id_;
  std::string label_;
  std::filesystem::path base_;  // owns root_ and temp_dir_
  std::filesystem::path root_;
  std::filesystem::path temp_dir_;
  std::shared_ptr<const ProgramImage> image_;
  bool keep_ = false;
};

// Creates workspaces under one scratch directory. Thread-safe.
class WorkspaceFactory {
 public:
  // Empty `scratch` means a fresh directory under the system temp dir.
  explicit WorkspaceFactory(std::filesystem::path scratch = {});
  ~WorkspaceFactory();
  WorkspaceFactory(const WorkspaceFactory&) = delete;
  WorkspaceFactory& operator=(const WorkspaceFactory&) = delete;

  // Copies the entry's trees into a new workspace. Throws IoError.
  Workspace Checkout(const DefectEntry& entry, std::string_view label);

  const std::filesystem::path& scratch() const { return scratch_; }

 private:
  std::filesystem::path scratch_;
  bool owns_scratch_ = false;
  std::atomic<unsigned long> next_{0};
};

struct ExecutionLimits {
  Millis suite_timeout{60'000};
  Millis test_timeout{10'000};
};

// The contract through which the auditor drives a subject program.
// Implementations must tolerate concurrent calls on distinct workspaces.
class Adapter {
 public:
  virtual ~Adapter() = default;

  virtual ParseReport Parse(const Workspace& ws) = 0;
  virtual CompileResult Compile(Workspace& ws) = 0;
  virtual SuiteResult RunSuite(Workspace& ws) = 0;
  // Runs exactly one test in a fresh execution context. Throws UnknownTest.
  virtual SingleRun RunSingle(Workspace& ws, std::string_view test_id) = 0;

  // Every statement of the (unmutated) program, canonical order. Adapters
  // without statement-level structure return an empty list.
  virtual std::vector<StatementLocation> Statements(const Workspace& ws);

  // Applies a single-statement deletion to the workspace copy. Locations
  // keep referring to the unmutated tree. Throws NotDeletable, or
  // AdapterFailure if the adapter cannot mutate programs at all.
  virtual void DeleteStatement(Workspace& ws, const StatementLocation& loc);

  virtual void set_limits(const ExecutionLimits& limits) { limits_ = limits; }
  const ExecutionLimits& limits() const { return limits_; }

 protected:
  ExecutionLimits limits_;
};

// Maps adapter ids (as named by DefectEntry::adapter) to adapters.
class AdapterRegistry {
 public:
  void Register(std::string id, std::shared_ptr<Adapter> adapter);  // throws DuplicateAdapter
  std::shared_ptr<Adapter> Resolve(std::string_view id) const;      // throws UnknownAdapter
  bool Contains(std::string_view id) const;
  std::vector<std::string> Ids() const;
  void SetLimits(const ExecutionLimits& limits);

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Adapter>, std::less<>> adapters_;
};

// Registers the built-in "minilang" and "scripted" adapters.
void RegisterBuiltinAdapters(AdapterRegistry& registry);

}  // namespace apraudit

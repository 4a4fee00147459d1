#include "apraudit/subject.h"

#include <charconv>
#include <random>
#include <system_error>

#include "apraudit/error.h"

namespace apraudit {
namespace fs = std::filesystem;

std::string StatementLocation::ToString() const {
  return file + "#" + std::to_string(statement_index);
}

StatementLocation StatementLocation::Parse(std::string_view text) {
  auto hash = text.rfind('#');
  if (hash == std::string_view::npos || hash == 0) {
    throw ParseError("bad statement location '" + std::string(text) + "'");
  }
  StatementLocation loc;
  loc.file = std::string(text.substr(0, hash));
  auto digits = text.substr(hash + 1);
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), loc.statement_index);
  if (ec != std::errc() || p != digits.data() + digits.size() || loc.statement_index < 1) {
    throw ParseError("bad statement location '" + std::string(text) + "'");
  }
  return loc;
}

std::string Diagnostic::ToString() const {
  std::string s = file;
  if (line > 0) s += ":" + std::to_string(line) + ":" + std::to_string(column);
  s += error ? ": error: " : ": warning: ";
  s += message;
  return s;
}

std::string_view ToString(TestStatus s) {
  switch (s) {
    case TestStatus::kPass: return "pass";
    case TestStatus::kFail: return "fail";
    case TestStatus::kError: return "error";
    case TestStatus::kTimeout: return "timeout";
  }
  return "?";
}

TestStatus TestStatusFromString(std::string_view s) {
  if (s == "pass") return TestStatus::kPass;
  if (s == "fail") return TestStatus::kFail;
  if (s == "error") return TestStatus::kError;
  if (s == "timeout") return TestStatus::kTimeout;
  throw ParseError("unknown test status '" + std::string(s) + "'");
}

TestIdSet SuiteResult::FailingTests() const {
  TestIdSet failing;
  for (const auto& [id, o] : outcomes) {
    if (!o.passed()) failing.insert(id);
  }
  return failing;
}

bool SuiteResult::AllPassed() const {
  for (const auto& [id, o] : outcomes) {
    if (!o.passed()) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Workspace

Workspace::Workspace(std::string defect_id, std::string label, fs::path base)
    : defect_id_(std::move(defect_id)),
      label_(std::move(label)),
      base_(std::move(base)),
      root_(base_ / "root"),
      temp_dir_(base_ / "tmp") {}

Workspace::Workspace(Workspace&& other) noexcept
    : defect_id_(std::move(other.defect_id_)),
      label_(std::move(other.label_)),
      base_(std::move(other.base_)),
      root_(std::move(other.root_)),
      temp_dir_(std::move(other.temp_dir_)),
      image_(std::move(other.image_)),
      keep_(other.keep_) {
  other.base_.clear();
}

Workspace& Workspace::operator=(Workspace&& other) noexcept {
  if (this != &other) {
    if (!base_.empty() && !keep_) {
      std::error_code ec;
      fs::remove_all(base_, ec);
    }
    defect_id_ = std::move(other.defect_id_);
    label_ = std::move(other.label_);
    base_ = std::move(other.base_);
    root_ = std::move(other.root_);
    temp_dir_ = std::move(other.temp_dir_);
    image_ = std::move(other.image_);
    keep_ = other.keep_;
    other.base_.clear();
  }
  return *this;
}

Workspace::~Workspace() {
  if (!base_.empty() && !keep_) {
    std::error_code ec;
    fs::remove_all(base_, ec);
  }
}

// ---------------------------------------------------------------------------
// WorkspaceFactory

namespace {

std::string Sanitize(std::string_view s) {
  std::string out;
  for (char c : s) {
    bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                c == '-' || c == '_' || c == '.';
    out.push_back(keep ? c : '_');
  }
  return out;
}

}  // namespace

WorkspaceFactory::WorkspaceFactory(fs::path scratch) : scratch_(std::move(scratch)) {
  if (scratch_.empty()) {
    std::random_device rd;
    for (int attempt = 0; attempt < 100; ++attempt) {
      fs::path candidate = fs::temp_directory_path() /
                           ("apraudit-" + std::to_string(rd()) + std::to_string(rd() % 1000));
      std::error_code ec;
      if (fs::create_directory(candidate, ec)) {
        scratch_ = candidate;
        owns_scratch_ = true;
        break;
      }
    }
    if (scratch_.empty()) throw IoError("cannot create scratch directory");
  } else {
    std::error_code ec;
    fs::create_directories(scratch_, ec);
    if (ec) throw IoError("cannot create " + scratch_.string() + ": " + ec.message());
  }
}

WorkspaceFactory::~WorkspaceFactory() {
  if (owns_scratch_) {
    std::error_code ec;
    fs::remove_all(scratch_, ec);
  }
}

Workspace WorkspaceFactory::Checkout(const DefectEntry& entry, std::string_view label) {
  fs::path base;
  std::error_code ec;
  // create_directory fails on an existing path, which keeps bases unique
  // even if two factories share the scratch directory.
  for (;;) {
    base = scratch_ / (Sanitize(entry.id) + "-" + std::to_string(next_.fetch_add(1)));
    if (fs::create_directory(base, ec)) break;
    if (ec) throw IoError("cannot create workspace " + base.string() + ": " + ec.message());
  }
  Workspace ws(entry.id, std::string(label), base);
  auto copy_tree = [&](const fs::path& from, const fs::path& to) {
    fs::create_directories(to, ec);
    if (ec) throw IoError("cannot create " + to.string() + ": " + ec.message());
    fs::copy(from, to, fs::copy_options::recursive | fs::copy_options::copy_symlinks, ec);
    if (ec) throw IoError("cannot copy " + from.string() + ": " + ec.message());
  };
  copy_tree(entry.source_root, ws.source_dir());
  copy_tree(entry.test_root, ws.test_dir());
  fs::create_directories(ws.temp_dir(), ec);
  if (ec) throw IoError("cannot create " + ws.temp_dir().string() + ": " + ec.message());
  return ws;
}

// ---------------------------------------------------------------------------
// Adapter defaults and registry

std::vector<StatementLocation> Adapter::Statements(const Workspace&) { return {}; }

void Adapter::DeleteStatement(Workspace&, const StatementLocation&) {
  throw AdapterFailure("adapter does not support statement deletion");
}

void AdapterRegistry::Register(std::string id, std::shared_ptr<Adapter> adapter) {
  std::lock_guard lock(mu_);
  if (adapters_.contains(id)) throw DuplicateAdapter("adapter '" + id + "' already registered");
  adapters_.emplace(std::move(id), std::move(adapter));
}

std::shared_ptr<Adapter> AdapterRegistry::Resolve(std::string_view id) const {
  std::lock_guard lock(mu_);
  auto it = adapters_.find(id);
  if (it == adapters_.end()) throw UnknownAdapter("no adapter '" + std::string(id) + "'");
  return it->second;
}

bool AdapterRegistry::Contains(std::string_view id) const {
  std::lock_guard lock(mu_);
  return adapters_.find(id) != adapters_.end();
}

std::vector<std::string> AdapterRegistry::Ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, a] : adapters_) ids.push_back(id);
  return ids;
}

void AdapterRegistry::SetLimits(const ExecutionLimits& limits) {
  std::lock_guard lock(mu_);
  for (auto& [id, a] : adapters_) a->set_limits(limits);
}

}  // namespace apraudit

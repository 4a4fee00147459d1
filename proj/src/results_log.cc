#include "apraudit/results_log.h"

#include <cstdlib>
#include <sstream>

#include "apraudit/error.h"

namespace apraudit {
namespace fs = std::filesystem;

namespace {

// Drops an incomplete final line so appends start on a record boundary.
void TrimPartialTail(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) return;
  std::ifstream in(path, std::ios::binary);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.empty() || data.back() == '\n') return;
  auto last_nl = data.rfind('\n');
  fs::resize_file(path, last_nl == std::string::npos ? 0 : last_nl + 1, ec);
  if (ec) throw IoError("cannot trim " + path.string() + ": " + ec.message());
}

}  // namespace

ResultsLog::ResultsLog(const fs::path& path, bool append) : path_(path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  if (append) TrimPartialTail(path);
  out_.open(path, append ? std::ios::app | std::ios::binary : std::ios::trunc | std::ios::binary);
  if (!out_) throw IoError("cannot open results log " + path.string());
  writer_ = std::thread([this] { WriterLoop(); });
}

ResultsLog::~ResultsLog() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  writer_.join();
}

void ResultsLog::Append(nlohmann::ordered_json record) {
  {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(record));
  }
  cv_.notify_all();
}

void ResultsLog::Flush() {
  std::unique_lock lock(mu_);
  drained_.wait(lock, [this] { return queue_.empty() && !writing_; });
}

void ResultsLog::WriterLoop() {
  std::unique_lock lock(mu_);
  for (;;) {
    cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
    while (!queue_.empty()) {
      auto record = std::move(queue_.front());
      queue_.pop_front();
      writing_ = true;
      lock.unlock();
      out_ << record.dump() << '\n';
      out_.flush();
      lock.lock();
      writing_ = false;
    }
    drained_.notify_all();
    if (stopping_) return;
  }
}

std::vector<nlohmann::json> ReadLogRecords(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read results log " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<nlohmann::json> records;
  std::size_t start = 0;
  int line_no = 0;
  while (start < data.size()) {
    auto nl = data.find('\n', start);
    if (nl == std::string::npos) break;  // interrupted write
    ++line_no;
    std::string_view line(data.data() + start, nl - start);
    start = nl + 1;
    if (line.empty()) continue;
    try {
      records.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

fs::path ResolveLogPath(const fs::path& path) {
  if (path.is_absolute()) return path;
  if (const char* dir = std::getenv("APRAUDIT_LOG_DIR"); dir != nullptr && *dir != '\0') {
    return fs::path(dir) / path;
  }
  return path;
}

}  // namespace apraudit

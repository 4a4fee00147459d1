#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>
#include <vector>

#include <json.hpp>

namespace apraudit {

// Append-only JSON-lines record log. Any thread may Append(); a single
// writer thread owns the file and writes records in the order they were
// enqueued.
class ResultsLog {
 public:
  // Opens `path` for appending (truncating first unless `append`). A
  // trailing partial line left by an interrupted run is cut off.
  ResultsLog(const std::filesystem::path& path, bool append);
  ~ResultsLog();
  ResultsLog(const ResultsLog&) = delete;
  ResultsLog& operator=(const ResultsLog&) = delete;

  void Append(nlohmann::ordered_json record);
  // Blocks until every record appended so far is on disk.
  void Flush();

  const std::filesystem::path& path() const { return path_; }

 private:
  void WriterLoop();

  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable drained_;
  std::deque<nlohmann::ordered_json> queue_;
  bool stopping_ = false;
  bool writing_ = false;
  std::thread writer_;
};

// Reads every complete record. A trailing line without a newline is ignored
// (interrupted write); other malformed lines throw ParseError.
std::vector<nlohmann::json> ReadLogRecords(const std::filesystem::path& path);

// Resolves a log path given on the command line. Relative paths are taken
// against $APRAUDIT_LOG_DIR when set, else against the working directory.
std::filesystem::path ResolveLogPath(const std::filesystem::path& path);

}  // namespace apraudit

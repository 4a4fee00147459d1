#pragma once

#include <condition_variable>
#include <cstdio>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "apraudit/subject.h"

namespace apraudit {

// Line protocol shared by ExternalAdapter and ServeAdapter. Each request is
// one JSON object per line:
//   {"op":"parse"|"compile"|"run_suite"|"run_single",
//    "defect":..., "workspace":<base dir>, "test":<id, run_single only>,
//    "limits":{"suite_timeout_ms":..,"test_timeout_ms":..}}
// and each response is one line, either {"error":"..."} or the result:
//   parse, compile: {"ok":bool,"diagnostics":[{file,line,column,message,error}]}
//   run_suite:      {"outcomes":[{test,status,message?,duration_ms}],"wall_ms":..,"abnormal"?}
//   run_single:     {"outcome":{...},"covered":["file#n",...]}
namespace protocol {

nlohmann::json ToJson(const Diagnostic& d);
Diagnostic DiagnosticFrom(const nlohmann::json& j);
nlohmann::json ToJson(const TestOutcome& o);
TestOutcome OutcomeFrom(const nlohmann::json& j);
nlohmann::json ToJson(const SuiteResult& r);
SuiteResult SuiteFrom(const nlohmann::json& j);

}  // namespace protocol

// Serves `adapter` over the line protocol until `in` reaches end of file.
// Returns the number of requests handled.
int ServeAdapter(Adapter& adapter, std::istream& in, std::ostream& out);

// Adapter that forwards every call to child processes speaking the line
// protocol. Up to `max_processes` children are started on demand; each has
// at most one request in flight. Statement deletion is not available
// through the protocol.
class ExternalAdapter : public Adapter {
 public:
  ExternalAdapter(std::vector<std::string> command, int max_processes = 4);
  ~ExternalAdapter() override;

  ParseReport Parse(const Workspace& ws) override;
  CompileResult Compile(Workspace& ws) override;
  SuiteResult RunSuite(Workspace& ws) override;
  SingleRun RunSingle(Workspace& ws, std::string_view test_id) override;

  int processes_started() const;

 private:
  struct Process;

  nlohmann::json Call(const Workspace& ws, const std::string& op, const std::string& test = "");
  std::unique_ptr<Process> Acquire();
  void Release(std::unique_ptr<Process> p);

  std::vector<std::string> command_;
  int max_processes_;
  mutable std::mutex mu_;
  std::condition_variable idle_cv_;
  std::vector<std::unique_ptr<Process>> idle_;
  int live_ = 0;
  int started_ = 0;
};

}  // namespace apraudit

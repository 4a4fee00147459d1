#include "apraudit/external_adapter.h"

#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>

#include "apraudit/error.h"

extern char** environ;

namespace apraudit {
using nlohmann::json;
namespace fs = std::filesystem;

namespace protocol {

json ToJson(const Diagnostic& d) {
  return {{"file", d.file},
          {"line", d.line},
          {"column", d.column},
          {"message", d.message},
          {"error", d.error}};
}

Diagnostic DiagnosticFrom(const json& j) {
  return {j.at("file").get<std::string>(), j.at("line").get<int>(), j.at("column").get<int>(),
          j.at("message").get<std::string>(), j.at("error").get<bool>()};
}

json ToJson(const TestOutcome& o) {
  json j = {{"test", o.test_id},
            {"status", std::string(ToString(o.status))},
            {"duration_ms", o.duration.count()}};
  if (o.message) j["message"] = *o.message;
  return j;
}

TestOutcome OutcomeFrom(const json& j) {
  TestOutcome o;
  o.test_id = j.at("test").get<std::string>();
  o.status = TestStatusFromString(j.at("status").get<std::string>());
  o.duration = Millis(j.value("duration_ms", 0));
  if (j.contains("message")) o.message = j.at("message").get<std::string>();
  return o;
}

json ToJson(const SuiteResult& r) {
  json outcomes = json::array();
  for (const auto& [id, o] : r.outcomes) outcomes.push_back(ToJson(o));
  json j = {{"outcomes", std::move(outcomes)}, {"wall_ms", r.wall_time.count()}};
  if (r.abnormal) j["abnormal"] = *r.abnormal;
  return j;
}

SuiteResult SuiteFrom(const json& j) {
  SuiteResult r;
  for (const auto& o : j.at("outcomes")) {
    TestOutcome t = OutcomeFrom(o);
    if (r.outcomes.contains(t.test_id)) throw ProtocolError("test reported twice: " + t.test_id);
    r.outcomes.emplace(t.test_id, std::move(t));
  }
  r.wall_time = Millis(j.value("wall_ms", 0));
  if (j.contains("abnormal")) r.abnormal = j.at("abnormal").get<std::string>();
  return r;
}

}  // namespace protocol

// ---------------------------------------------------------------------------
// Server side

namespace {

json Diagnostics(const std::vector<Diagnostic>& diags) {
  json a = json::array();
  for (const auto& d : diags) a.push_back(protocol::ToJson(d));
  return a;
}

}  // namespace

int ServeAdapter(Adapter& adapter, std::istream& in, std::ostream& out) {
  // Compiled workspaces, so a run after a compile in the same process
  // reuses the image. Workspace directories are owned by the client.
  std::map<std::string, Workspace> cache;
  int handled = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++handled;
    json response;
    try {
      json req = json::parse(line);
      const std::string op = req.at("op").get<std::string>();
      const std::string base = req.at("workspace").get<std::string>();
      const std::string defect = req.at("defect").get<std::string>();
      if (req.contains("limits")) {
        ExecutionLimits limits;
        limits.suite_timeout = Millis(req["limits"].at("suite_timeout_ms").get<long long>());
        limits.test_timeout = Millis(req["limits"].at("test_timeout_ms").get<long long>());
        adapter.set_limits(limits);
      }
      auto it = cache.find(base);
      if (it == cache.end()) {
        if (cache.size() >= 64) cache.clear();
        Workspace ws(defect, "external", base);
        ws.Keep();
        it = cache.emplace(base, std::move(ws)).first;
      }
      Workspace& ws = it->second;
      auto ensure_compiled = [&] {
        if (ws.image()) return;
        CompileResult c = adapter.Compile(ws);
        if (!c.ok) throw AdapterFailure("workspace does not compile");
      };
      if (op == "parse") {
        ParseReport r = adapter.Parse(ws);
        response = {{"ok", r.ok}, {"diagnostics", Diagnostics(r.diagnostics)}};
      } else if (op == "compile") {
        CompileResult r = adapter.Compile(ws);
        response = {{"ok", r.ok}, {"diagnostics", Diagnostics(r.diagnostics)}};
      } else if (op == "run_suite") {
        ensure_compiled();
        response = protocol::ToJson(adapter.RunSuite(ws));
      } else if (op == "run_single") {
        ensure_compiled();
        SingleRun r = adapter.RunSingle(ws, req.at("test").get<std::string>());
        json covered = json::array();
        for (const auto& loc : r.coverage.covered) covered.push_back(loc.ToString());
        response = {{"outcome", protocol::ToJson(r.outcome)}, {"covered", std::move(covered)}};
      } else {
        response = {{"error", "unknown op '" + op + "'"}};
      }
    } catch (const UnknownTest& e) {
      response = {{"error", e.what()}, {"kind", "unknown_test"}};
    } catch (const std::exception& e) {
      response = {{"error", e.what()}};
    }
    out << response.dump() << '\n' << std::flush;
  }
  return handled;
}

// ---------------------------------------------------------------------------
// Client side

struct ExternalAdapter::Process {
  pid_t pid = -1;
  int fd = -1;
  std::string buffer;

  ~Process() {
    if (fd >= 0) ::close(fd);
    if (pid > 0) {
      ::kill(pid, SIGKILL);
      int status;
      ::waitpid(pid, &status, 0);
    }
  }

  void Send(const std::string& line) {
    std::size_t off = 0;
    while (off < line.size()) {
      ssize_t n = ::send(fd, line.data() + off, line.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError(std::string("adapter process closed its input: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string ReadLine(Millis timeout) {
    auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      auto nl = buffer.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        return line;
      }
      auto left = std::chrono::duration_cast<Millis>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw AdapterFailure("adapter process did not answer in time");
      pollfd p{fd, POLLIN, 0};
      int rc = ::poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1'000'000)));
      if (rc < 0 && errno != EINTR) throw AdapterFailure("poll failed");
      if (rc <= 0) continue;
      char chunk[4096];
      ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw ProtocolError("adapter process exited mid-request");
      buffer.append(chunk, static_cast<std::size_t>(n));
    }
  }
};

ExternalAdapter::ExternalAdapter(std::vector<std::string> command, int max_processes)
    : command_(std::move(command)), max_processes_(std::max(1, max_processes)) {
  if (command_.empty()) throw AdapterFailure("external adapter needs a command");
}

ExternalAdapter::~ExternalAdapter() = default;

int ExternalAdapter::processes_started() const {
  std::lock_guard lock(mu_);
  return started_;
}

std::unique_ptr<ExternalAdapter::Process> ExternalAdapter::Acquire() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [this] { return !idle_.empty() || live_ < max_processes_; });
  if (!idle_.empty()) {
    auto p = std::move(idle_.back());
    idle_.pop_back();
    return p;
  }
  ++live_;
  ++started_;
  lock.unlock();

  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
    std::lock_guard relock(mu_);
    --live_;
    throw AdapterFailure("socketpair failed");
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, sv[1], 0);
  posix_spawn_file_actions_adddup2(&actions, sv[1], 1);
  std::vector<char*> argv;
  for (auto& a : command_) argv.push_back(a.data());
  argv.push_back(nullptr);
  auto p = std::make_unique<Process>();
  int rc = ::posix_spawnp(&p->pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(sv[1]);
  p->fd = sv[0];
  if (rc != 0) {
    p->pid = -1;
    std::lock_guard relock(mu_);
    --live_;
    idle_cv_.notify_one();
    throw AdapterFailure("cannot start adapter process '" + command_[0] + "': " + std::strerror(rc));
  }
  return p;
}

void ExternalAdapter::Release(std::unique_ptr<Process> p) {
  std::lock_guard lock(mu_);
  if (p) {
    idle_.push_back(std::move(p));
  } else {
    --live_;
  }
  idle_cv_.notify_one();
}

json ExternalAdapter::Call(const Workspace& ws, const std::string& op, const std::string& test) {
  json req = {{"op", op},
              {"defect", ws.defect_id()},
              {"workspace", ws.root().parent_path().string()},
              {"limits",
               {{"suite_timeout_ms", limits_.suite_timeout.count()},
                {"test_timeout_ms", limits_.test_timeout.count()}}}};
  if (!test.empty()) req["test"] = test;
  // Slack on top of the subject's own budgets for process overhead.
  Millis wait = limits_.suite_timeout + limits_.test_timeout + Millis(5000);

  auto proc = Acquire();
  json response;
  try {
    proc->Send(req.dump() + "\n");
    std::string line = proc->ReadLine(wait);
    try {
      response = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ProtocolError("malformed adapter response: " + std::string(e.what()));
    }
    if (!response.is_object()) throw ProtocolError("adapter response is not an object");
  } catch (...) {
    proc.reset();  // never reuse a process in an unknown state
    Release(nullptr);
    throw;
  }
  Release(std::move(proc));
  if (response.contains("error")) {
    std::string message = response["error"].is_string() ? response["error"].get<std::string>()
                                                         : response["error"].dump();
    if (response.value("kind", "") == "unknown_test") throw UnknownTest(message);
    throw AdapterFailure("external adapter: " + message);
  }
  return response;
}

namespace {

template <typename F>
auto Decode(F f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed adapter response: ") + e.what());
  } catch (const ParseError& e) {
    throw ProtocolError(std::string("malformed adapter response: ") + e.what());
  }
}

}  // namespace

ParseReport ExternalAdapter::Parse(const Workspace& ws) {
  json r = Call(ws, "parse");
  return Decode([&] {
    ParseReport p;
    p.ok = r.at("ok").get<bool>();
    for (const auto& d : r.at("diagnostics")) p.diagnostics.push_back(protocol::DiagnosticFrom(d));
    return p;
  });
}

CompileResult ExternalAdapter::Compile(Workspace& ws) {
  json r = Call(ws, "compile");
  return Decode([&] {
    CompileResult c;
    c.ok = r.at("ok").get<bool>();
    for (const auto& d : r.at("diagnostics")) c.diagnostics.push_back(protocol::DiagnosticFrom(d));
    return c;
  });
}

SuiteResult ExternalAdapter::RunSuite(Workspace& ws) {
  json r = Call(ws, "run_suite");
  return Decode([&] { return protocol::SuiteFrom(r); });
}

SingleRun ExternalAdapter::RunSingle(Workspace& ws, std::string_view test_id) {
  json r = Call(ws, "run_single", std::string(test_id));
  return Decode([&] {
    SingleRun s;
    s.outcome = protocol::OutcomeFrom(r.at("outcome"));
    s.coverage.test_id = s.outcome.test_id;
    s.coverage.outcome = s.outcome;
    for (const auto& l : r.at("covered")) {
      s.coverage.covered.insert(StatementLocation::Parse(l.get<std::string>()));
    }
    return s;
  });
}

}  // namespace apraudit

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "apraudit/minilang.h"

namespace apraudit::minilang {

std::string ToString(const Value& v) {
  if (std::holds_alternative<Unit>(v)) return "()";
  if (const auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  return std::to_string(std::get<std::int64_t>(v));
}

// ---------------------------------------------------------------------------
// Structural equality

namespace {

template <typename T>
bool PtrsEqual(const std::vector<std::shared_ptr<const T>>& a,
               const std::vector<std::shared_ptr<const T>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(*a[i] == *b[i])) return false;
  }
  return true;
}

bool ExprEq(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return *a == *b;
}

}  // namespace

bool operator==(const Expr& a, const Expr& b) {
  return a.kind == b.kind && a.int_value == b.int_value && a.bool_value == b.bool_value &&
         a.name == b.name && a.line == b.line && a.column == b.column && PtrsEqual(a.args, b.args);
}

bool operator==(const Stmt& a, const Stmt& b) {
  return a.kind == b.kind && a.name == b.name && ExprEq(a.expr, b.expr) &&
         PtrsEqual(a.body, b.body) && PtrsEqual(a.orelse, b.orelse) && a.has_else == b.has_else &&
         a.file == b.file && a.index == b.index && a.line == b.line && a.column == b.column;
}

bool operator==(const Function& a, const Function& b) {
  return a.name == b.name && a.params == b.params && PtrsEqual(a.body, b.body) &&
         a.file == b.file && a.line == b.line;
}

bool operator==(const Global& a, const Global& b) {
  return a.name == b.name && ExprEq(a.init, b.init) && a.file == b.file && a.line == b.line;
}

bool operator==(const Program& a, const Program& b) {
  if (a.globals != b.globals || a.functions != b.functions) return false;
  if (a.statement_table.size() != b.statement_table.size()) return false;
  for (auto ia = a.statement_table.begin(), ib = b.statement_table.begin();
       ia != a.statement_table.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !(*ia->second == *ib->second)) return false;
  }
  return true;
}

const Function* Program::FindFunction(std::string_view name) const {
  for (const auto& f : functions) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

std::vector<StatementLocation> Program::Statements() const {
  std::vector<StatementLocation> out;
  out.reserve(statement_table.size());
  for (const auto& [loc, s] : statement_table) out.push_back(loc);
  return out;
}

const TestCase* TestSuiteDef::Find(std::string_view id) const {
  for (const auto& t : tests) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Interpreter

struct Interpreter::State {
  using Clock = std::chrono::steady_clock;

  const Program& program;
  InterpreterOptions options;
  std::map<std::string, Value, std::less<>> globals;
  std::set<StatementLocation>* trace = nullptr;
  std::uint64_t fuel_left = 0;
  Clock::time_point deadline;
  Clock::time_point deadline_cap = Clock::time_point::max();
  int depth = 0;

  State(const Program& p, InterpreterOptions o) : program(p), options(std::move(o)) {}

  struct Frame {
    std::map<std::string, Value, std::less<>> locals;
  };

  enum class Flow { kNext, kReturn };

  void Tick() {
    if (fuel_left == 0) throw FuelExhausted("step budget exhausted");
    --fuel_left;
    if ((fuel_left & 0xfff) == 0 && Clock::now() > deadline) {
      throw FuelExhausted("time limit exceeded");
    }
  }

  void ResetBudget() {
    fuel_left = options.fuel;
    deadline = std::min(Clock::now() + options.time_limit, deadline_cap);
  }

  [[noreturn]] static void Fail(const std::string& file, int line, const std::string& what) {
    throw RuntimeError(file + ":" + std::to_string(line) + ": " + what);
  }

  static bool AsBool(const Value& v, const std::string& file, int line, const char* ctx) {
    if (const auto* b = std::get_if<bool>(&v)) return *b;
    Fail(file, line, std::string(ctx) + " needs a boolean, got " + ToString(v));
  }

  static std::int64_t AsInt(const Value& v, const std::string& file, int line) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    Fail(file, line, "expected an integer, got " + ToString(v));
  }

  Value Eval(const Expr& e, Frame& frame, const std::string& file) {
    switch (e.kind) {
      case Expr::Kind::kInt: return e.int_value;
      case Expr::Kind::kBool: return e.bool_value;
      case Expr::Kind::kVar: {
        if (auto it = frame.locals.find(e.name); it != frame.locals.end()) return it->second;
        if (auto it = globals.find(e.name); it != globals.end()) return it->second;
        Fail(file, e.line, "undefined variable '" + e.name + "'");
      }
      case Expr::Kind::kUnary: {
        Value v = Eval(*e.args[0], frame, file);
        if (e.name == "!") return !AsBool(v, file, e.line, "'!'");
        std::int64_t i = AsInt(v, file, e.line);
        std::int64_t r;
        if (__builtin_sub_overflow(std::int64_t{0}, i, &r)) Fail(file, e.line, "integer overflow");
        return r;
      }
      case Expr::Kind::kBinary: return EvalBinary(e, frame, file);
      case Expr::Kind::kCall: {
        std::vector<Value> args;
        args.reserve(e.args.size());
        for (const auto& a : e.args) args.push_back(Eval(*a, frame, file));
        return CallFunction(e.name, args, file, e.line);
      }
    }
    Fail(file, e.line, "bad expression");
  }

  Value EvalBinary(const Expr& e, Frame& frame, const std::string& file) {
    const std::string& op = e.name;
    if (op == "&&" || op == "||") {
      bool lhs = AsBool(Eval(*e.args[0], frame, file), file, e.line, ("'" + op + "'").c_str());
      if (op == "&&" && !lhs) return false;
      if (op == "||" && lhs) return true;
      return AsBool(Eval(*e.args[1], frame, file), file, e.line, ("'" + op + "'").c_str());
    }
    Value a = Eval(*e.args[0], frame, file);
    Value b = Eval(*e.args[1], frame, file);
    if (op == "==" || op == "!=") {
      if (a.index() != b.index()) {
        Fail(file, e.line, "cannot compare " + ToString(a) + " with " + ToString(b));
      }
      return (a == b) == (op == "==");
    }
    std::int64_t x = AsInt(a, file, e.line);
    std::int64_t y = AsInt(b, file, e.line);
    std::int64_t r = 0;
    if (op == "<") return x < y;
    if (op == "<=") return x <= y;
    if (op == ">") return x > y;
    if (op == ">=") return x >= y;
    bool overflow = false;
    if (op == "+") {
      overflow = __builtin_add_overflow(x, y, &r);
    } else if (op == "-") {
      overflow = __builtin_sub_overflow(x, y, &r);
    } else if (op == "*") {
      overflow = __builtin_mul_overflow(x, y, &r);
    } else if (op == "/" || op == "%") {
      if (y == 0) Fail(file, e.line, "division by zero");
      if (x == INT64_MIN && y == -1) Fail(file, e.line, "integer overflow");
      r = op == "/" ? x / y : x % y;
    } else {
      Fail(file, e.line, "unknown operator '" + op + "'");
    }
    if (overflow) Fail(file, e.line, "integer overflow");
    return r;
  }

  std::filesystem::path SlotPath(std::int64_t key, const std::string& file, int line) const {
    if (options.temp_dir.empty()) Fail(file, line, "no temp directory for this execution");
    return options.temp_dir / ("slot-" + std::to_string(key));
  }

  Value CallBuiltin(std::string_view name, const std::vector<Value>& args, const std::string& file,
                    int line) {
    if (name == "tmp_write") {
      auto path = SlotPath(AsInt(args[0], file, line), file, line);
      std::ofstream out(path, std::ios::trunc);
      out << AsInt(args[1], file, line) << "\n";
      if (!out) Fail(file, line, "cannot write " + path.string());
      return Unit{};
    }
    auto path = SlotPath(AsInt(args[0], file, line), file, line);
    std::ifstream in(path);
    std::int64_t v = 0;
    if (in) in >> v;
    return v;
  }

  Value CallFunction(std::string_view name, const std::vector<Value>& args, const std::string& file,
                     int line) {
    Tick();
    const Function* f = program.FindFunction(name);
    if (f == nullptr) {
      if ((name == "tmp_write" && args.size() == 2) || (name == "tmp_read" && args.size() == 1)) {
        return CallBuiltin(name, args, file, line);
      }
      Fail(file, line, "call to undefined function '" + std::string(name) + "'");
    }
    if (f->params.size() != args.size()) {
      Fail(file, line, "wrong number of arguments to '" + f->name + "'");
    }
    if (depth >= options.max_call_depth) Fail(file, line, "call depth limit exceeded");
    Frame frame;
    for (std::size_t i = 0; i < args.size(); ++i) frame.locals[f->params[i]] = args[i];
    ++depth;
    Value result = Unit{};
    struct DepthGuard {
      int& d;
      ~DepthGuard() { --d; }
    } guard{depth};
    ExecBlock(f->body, frame, result);
    return result;
  }

  Flow ExecBlock(const std::vector<StmtPtr>& body, Frame& frame, Value& result) {
    for (const auto& s : body) {
      if (Exec(*s, frame, result) == Flow::kReturn) return Flow::kReturn;
    }
    return Flow::kNext;
  }

  Flow Exec(const Stmt& s, Frame& frame, Value& result) {
    Tick();
    if (trace != nullptr && s.index > 0) trace->insert(s.location());
    switch (s.kind) {
      case Stmt::Kind::kAssign:
        frame.locals[s.name] = Eval(*s.expr, frame, s.file);
        return Flow::kNext;
      case Stmt::Kind::kGlobalAssign: {
        Value v = Eval(*s.expr, frame, s.file);
        auto it = globals.find(s.name);
        if (it == globals.end()) Fail(s.file, s.line, "undeclared global '" + s.name + "'");
        it->second = v;
        return Flow::kNext;
      }
      case Stmt::Kind::kIf:
        if (AsBool(Eval(*s.expr, frame, s.file), s.file, s.line, "if condition")) {
          return ExecBlock(s.body, frame, result);
        }
        return ExecBlock(s.orelse, frame, result);
      case Stmt::Kind::kWhile:
        while (AsBool(Eval(*s.expr, frame, s.file), s.file, s.line, "while condition")) {
          if (ExecBlock(s.body, frame, result) == Flow::kReturn) return Flow::kReturn;
          Tick();
        }
        return Flow::kNext;
      case Stmt::Kind::kReturn:
        result = s.expr ? Eval(*s.expr, frame, s.file) : Value(Unit{});
        return Flow::kReturn;
      case Stmt::Kind::kCall:
        Eval(*s.expr, frame, s.file);
        return Flow::kNext;
      case Stmt::Kind::kAssert:
        if (!AsBool(Eval(*s.expr, frame, s.file), s.file, s.line, "assert")) {
          throw AssertionFailure("assertion failed at " + s.file + ":" + std::to_string(s.line));
        }
        return Flow::kNext;
    }
    return Flow::kNext;
  }
};

Interpreter::Interpreter(const Program& program, InterpreterOptions options)
    : state_(std::make_unique<State>(program, std::move(options))) {
  state_->ResetBudget();
  State::Frame empty;
  for (const auto& g : program.globals) {
    state_->globals[g.name] = state_->Eval(*g.init, empty, g.file);
  }
}

Interpreter::~Interpreter() = default;

Value Interpreter::Call(std::string_view function, const std::vector<Value>& args,
                        std::set<StatementLocation>* trace) {
  state_->ResetBudget();
  state_->trace = trace;
  state_->depth = 0;
  return state_->CallFunction(function, args, "<entry>", 0);
}

void Interpreter::RunTest(const TestCase& test, std::set<StatementLocation>* trace) {
  state_->ResetBudget();
  state_->trace = trace;
  state_->depth = 0;
  State::Frame frame;
  Value ignored = Unit{};
  state_->ExecBlock(test.body, frame, ignored);
}

void Interpreter::CapDeadline(std::chrono::steady_clock::time_point deadline) {
  state_->deadline_cap = deadline;
}

std::optional<Value> Interpreter::GlobalValue(std::string_view name) const {
  auto it = state_->globals.find(name);
  if (it == state_->globals.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Test harness

namespace {

TestOutcome RunOne(Interpreter& interp, const TestCase& test, std::set<StatementLocation>* trace) {
  TestOutcome o;
  o.test_id = test.id;
  auto start = std::chrono::steady_clock::now();
  try {
    interp.RunTest(test, trace);
    o.status = TestStatus::kPass;
  } catch (const AssertionFailure& e) {
    o.status = TestStatus::kFail;
    o.message = e.what();
  } catch (const FuelExhausted& e) {
    o.status = TestStatus::kTimeout;
    o.message = e.what();
  } catch (const RuntimeError& e) {
    o.status = TestStatus::kError;
    o.message = e.what();
  }
  o.duration = std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - start);
  return o;
}

}  // namespace

TestRun RunTests(const Program& program, const TestSuiteDef& suite, const RunMode& mode,
                 const InterpreterOptions& options, Millis suite_timeout) {
  TestRun run;
  auto start = std::chrono::steady_clock::now();
  if (const auto* single = std::get_if<SingleTest>(&mode)) {
    const TestCase* test = suite.Find(single->test_id);
    if (test == nullptr) throw UnknownTest("no test '" + single->test_id + "'");
    CoverageRecord cov;
    cov.test_id = test->id;
    TestOutcome o;
    try {
      Interpreter interp(program, options);
      o = RunOne(interp, *test, &cov.covered);
    } catch (const Error& e) {  // global initializer failed
      o = {test->id, TestStatus::kError, std::string(e.what()), Millis{0}};
    }
    cov.outcome = o;
    run.suite.outcomes.emplace(o.test_id, o);
    run.coverage = std::move(cov);
  } else {
    std::optional<Interpreter> interp;
    std::optional<std::string> init_error;
    try {
      interp.emplace(program, options);
      interp->CapDeadline(start + suite_timeout);
    } catch (const Error& e) {
      init_error = e.what();
    }
    for (const auto& test : suite.tests) {
      TestOutcome o;
      if (init_error) {
        o = {test.id, TestStatus::kError, *init_error, Millis{0}};
      } else if (std::chrono::steady_clock::now() - start > suite_timeout) {
        o = {test.id, TestStatus::kTimeout, std::string("suite time budget exhausted"), Millis{0}};
        run.suite.abnormal = "suite timeout exceeded";
      } else {
        o = RunOne(*interp, test, nullptr);
        if (o.status == TestStatus::kTimeout && std::chrono::steady_clock::now() - start > suite_timeout) {
          run.suite.abnormal = "suite timeout exceeded";
        }
      }
      run.suite.outcomes.emplace(o.test_id, o);
    }
  }
  run.suite.wall_time =
      std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - start);
  return run;
}

// ---------------------------------------------------------------------------
// Statement deletion

namespace {

// Rebuilds `body` without the target; untouched subtrees are shared.
std::vector<StmtPtr> Without(const std::vector<StmtPtr>& body, const StatementLocation& loc,
                             bool& found) {
  std::vector<StmtPtr> out;
  out.reserve(body.size());
  for (const auto& s : body) {
    if (found) {
      out.push_back(s);
      continue;
    }
    if (s->location() == loc) {
      found = true;
      continue;
    }
    if (s->compound()) {
      auto body2 = Without(s->body, loc, found);
      auto orelse2 = Without(s->orelse, loc, found);
      if (found) {
        auto copy = std::make_shared<Stmt>(*s);
        copy->body = std::move(body2);
        copy->orelse = std::move(orelse2);
        out.push_back(copy);
        continue;
      }
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace

Program DeleteStatement(const Program& program, const StatementLocation& loc) {
  auto it = program.statement_table.find(loc);
  if (it == program.statement_table.end()) {
    throw NotDeletable("no deletable statement at " + loc.ToString());
  }
  Program out;
  out.globals = program.globals;
  bool found = false;
  for (const auto& f : program.functions) {
    Function g = f;
    if (!found && f.file == loc.file) g.body = Without(f.body, loc, found);
    out.functions.push_back(std::move(g));
  }
  if (!found) throw NotDeletable("statement " + loc.ToString() + " not reachable from a function");

  // Re-point table entries at the rebuilt nodes so the table stays consistent
  // with the new tree.
  std::function<void(const std::vector<StmtPtr>&)> index = [&](const std::vector<StmtPtr>& body) {
    for (const auto& s : body) {
      out.statement_table.emplace(s->location(), s);
      index(s->body);
      index(s->orelse);
    }
  };
  for (const auto& f : out.functions) index(f.body);
  return out;
}

}  // namespace apraudit::minilang

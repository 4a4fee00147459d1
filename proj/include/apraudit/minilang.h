#pragma once

// A small deterministic subject language. Programs live in `.mini` files,
// tests in `.minitest` files.
//
//   program   := (global | function)*
//   global    := "global" IDENT "=" expr ";"
//   function  := "fn" IDENT "(" [IDENT ("," IDENT)*] ")" block
//   block     := "{" stmt* "}"
//   stmt      := IDENT "=" expr ";"              local assignment
//              | "global" IDENT "=" expr ";"     global assignment
//              | "if" expr block ["else" (block | if-stmt)]
//              | "while" expr block
//              | "return" [expr] ";"
//              | call ";"
//              | "assert" expr ";"
//   expr      := integer and boolean literals, names, calls, unary - and !,
//                * / % + - < <= > >= == != && || with C precedence
//   testfile  := ("test" IDENT block)*
//
// Test ids are "<test file stem>::<test name>". Builtins tmp_write(k, v) and
// tmp_read(k) store integers in the execution's private temp directory.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "apraudit/error.h"
#include "apraudit/subject.h"

namespace apraudit::minilang {

struct Unit {
  bool operator==(const Unit&) const = default;
};

using Value = std::variant<Unit, std::int64_t, bool>;

std::string ToString(const Value& v);

struct Expr;
struct Stmt;
using ExprPtr = std::shared_ptr<const Expr>;
using StmtPtr = std::shared_ptr<const Stmt>;

struct Expr {
  enum class Kind { kInt, kBool, kVar, kUnary, kBinary, kCall };

  Kind kind = Kind::kInt;
  std::int64_t int_value = 0;
  bool bool_value = false;
  std::string name;  // variable, callee or operator
  std::vector<ExprPtr> args;
  int line = 0;
  int column = 0;
};

bool operator==(const Expr& a, const Expr& b);

struct Stmt {
  enum class Kind { kAssign, kGlobalAssign, kIf, kWhile, kReturn, kCall, kAssert };

  Kind kind = Kind::kAssign;
  std::string name;             // assignment target
  ExprPtr expr;                 // value, condition, call, or null for bare return
  std::vector<StmtPtr> body;    // if-then / while body
  std::vector<StmtPtr> orelse;  // if-else
  bool has_else = false;
  std::string file;
  int index = 0;  // pre-order number within file; 0 for test-body statements
  int line = 0;
  int column = 0;

  StatementLocation location() const { return {file, index}; }
  bool compound() const { return kind == Kind::kIf || kind == Kind::kWhile; }
};

bool operator==(const Stmt& a, const Stmt& b);

struct Function {
  std::string name;
  std::vector<std::string> params;
  std::vector<StmtPtr> body;
  std::string file;
  int line = 0;
};

bool operator==(const Function& a, const Function& b);

struct Global {
  std::string name;
  ExprPtr init;
  std::string file;
  int line = 0;
};

bool operator==(const Global& a, const Global& b);

struct Program {
  std::vector<Global> globals;
  std::vector<Function> functions;
  std::map<StatementLocation, StmtPtr> statement_table;

  const Function* FindFunction(std::string_view name) const;
  std::vector<StatementLocation> Statements() const;
};

bool operator==(const Program& a, const Program& b);

struct TestCase {
  TestId id;
  std::vector<StmtPtr> body;
  std::string file;
  int line = 0;
};

struct TestSuiteDef {
  std::vector<TestCase> tests;  // declared order

  const TestCase* Find(std::string_view id) const;
};

struct SourceFile {
  std::string path;  // relative name used in locations and diagnostics
  std::string text;
};

struct ParsedProgram {
  std::optional<Program> program;
  std::vector<Diagnostic> diagnostics;
};

struct ParsedSuite {
  std::optional<TestSuiteDef> suite;
  std::vector<Diagnostic> diagnostics;
};

ParsedProgram ParseProgram(std::string_view source_text, std::string_view file = "main.mini");
ParsedProgram ParseProgram(const std::vector<SourceFile>& files);
ParsedSuite ParseTests(const std::vector<SourceFile>& files);

// Static checks: unique function names, calls resolve with the right arity,
// names read are parameters, locals assigned somewhere in the body, or
// globals; global assignments target declared globals.
std::vector<Diagnostic> Check(const Program& program, const TestSuiteDef* suite = nullptr);

// Assertion failure inside the interpreted program.
class AssertionFailure : public Error {
 public:
  using Error::Error;
};

// Undefined variable, type mismatch, division by zero and the like.
class RuntimeError : public Error {
 public:
  using Error::Error;
};

class FuelExhausted : public Error {
 public:
  using Error::Error;
};

struct InterpreterOptions {
  std::uint64_t fuel = 1'000'000;  // statement and call steps per test
  Millis time_limit{10'000};       // per test
  std::filesystem::path temp_dir;  // empty: tmp_* builtins fail
  int max_call_depth = 512;
};

// One execution context. Globals are initialized on construction and
// persist across calls made through the same instance.
class Interpreter {
 public:
  Interpreter(const Program& program, InterpreterOptions options);
  ~Interpreter();
  Interpreter(const Interpreter&) = delete;
  Interpreter& operator=(const Interpreter&) = delete;

  // Calls a program function. Throws AssertionFailure, RuntimeError,
  // FuelExhausted. Executed program statements are added to `trace`.
  Value Call(std::string_view function, const std::vector<Value>& args,
             std::set<StatementLocation>* trace = nullptr);

  // Runs a test body with a fresh fuel budget.
  void RunTest(const TestCase& test, std::set<StatementLocation>* trace = nullptr);

  std::optional<Value> GlobalValue(std::string_view name) const;

  // No test started after this call runs past `deadline`, whatever the
  // per-test time limit says.
  void CapDeadline(std::chrono::steady_clock::time_point deadline);

 private:
  struct State;
  std::unique_ptr<State> state_;
};

struct WholeSuite {};
struct SingleTest {
  TestId test_id;
};
using RunMode = std::variant<WholeSuite, SingleTest>;

struct TestRun {
  SuiteResult suite;
  std::optional<CoverageRecord> coverage;  // set in SingleTest mode
};

// WholeSuite runs every test in declared order inside one interpreter;
// SingleTest runs one test in a fresh interpreter and records coverage.
// Throws UnknownTest.
TestRun RunTests(const Program& program, const TestSuiteDef& suite, const RunMode& mode,
                 const InterpreterOptions& options, Millis suite_timeout = Millis{60'000});

// Returns a new program without the statement at `loc` (compound statements
// go with their bodies). The input is not modified. Throws NotDeletable.
Program DeleteStatement(const Program& program, const StatementLocation& loc);

// Adapter for workspaces holding `.mini` sources under src/ and
// `.minitest` files under test/. Only files inside the workspace are loaded.
class MiniLangAdapter : public Adapter {
 public:
  explicit MiniLangAdapter(std::uint64_t fuel = 1'000'000) : fuel_(fuel) {}

  ParseReport Parse(const Workspace& ws) override;
  CompileResult Compile(Workspace& ws) override;
  SuiteResult RunSuite(Workspace& ws) override;
  SingleRun RunSingle(Workspace& ws, std::string_view test_id) override;
  std::vector<StatementLocation> Statements(const Workspace& ws) override;
  void DeleteStatement(Workspace& ws, const StatementLocation& loc) override;

 private:
  InterpreterOptions OptionsFor(const Workspace& ws) const;
  std::uint64_t fuel_;
};

// Name of the file (inside Workspace::root()) listing deleted locations.
inline constexpr std::string_view kVariantFile = "variant.json";

}  // namespace apraudit::minilang

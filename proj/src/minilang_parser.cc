#include <cctype>
#include <charconv>
#include <map>
#include <set>

#include "apraudit/minilang.h"

namespace apraudit::minilang {
namespace {

enum class Tok { kIdent, kInt, kPunct, kKeyword, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  int line = 1;
  int column = 1;
};

const std::set<std::string, std::less<>> kKeywords = {
    "fn", "global", "if", "else", "while", "return", "assert", "true", "false", "test"};

// Thrown internally to unwind to the top-level parse loop.
struct SyntaxError {
  Diagnostic diag;
};

class Lexer {
 public:
  Lexer(std::string_view text, std::string file) : text_(text), file_(std::move(file)) {}

  std::vector<Token> Run() {
    std::vector<Token> out;
    for (;;) {
      SkipSpaceAndComments();
      Token t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= text_.size()) {
        t.kind = Tok::kEnd;
        out.push_back(t);
        return out;
      }
      char c = text_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
          t.text.push_back(Advance());
        }
        t.kind = kKeywords.contains(t.text) ? Tok::kKeyword : Tok::kIdent;
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          t.text.push_back(Advance());
        }
        t.kind = Tok::kInt;
      } else {
        static const char* kTwo[] = {"==", "!=", "<=", ">=", "&&", "||"};
        t.kind = Tok::kPunct;
        for (const char* two : kTwo) {
          if (text_.substr(pos_, 2) == two) {
            t.text.push_back(Advance());
            t.text.push_back(Advance());
            break;
          }
        }
        if (t.text.empty()) {
          if (std::string_view("{}(),;=<>+-*/%!").find(c) == std::string_view::npos) {
            throw SyntaxError{{file_, line_, col_, std::string("unexpected character '") + c + "'"}};
          }
          t.text.push_back(Advance());
        }
      }
      out.push_back(std::move(t));
    }
  }

 private:
  char Advance() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void SkipSpaceAndComments() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        Advance();
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') Advance();
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::string file_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::string file, bool number_statements)
      : toks_(std::move(tokens)), file_(std::move(file)), number_(number_statements) {}

  void ParseProgramInto(Program& program) {
    while (!AtEnd()) {
      if (IsKeyword("global")) {
        Token kw = Next();
        Global g;
        g.name = ExpectIdent("global name");
        g.file = file_;
        g.line = kw.line;
        ExpectPunct("=");
        g.init = ParseExpr();
        ExpectPunct(";");
        program.globals.push_back(std::move(g));
      } else if (IsKeyword("fn")) {
        Token kw = Next();
        Function f;
        f.name = ExpectIdent("function name");
        f.file = file_;
        f.line = kw.line;
        ExpectPunct("(");
        if (!IsPunct(")")) {
          f.params.push_back(ExpectIdent("parameter name"));
          while (IsPunct(",")) {
            Next();
            f.params.push_back(ExpectIdent("parameter name"));
          }
        }
        ExpectPunct(")");
        f.body = ParseBlock();
        program.functions.push_back(std::move(f));
      } else {
        Fail(Peek(), "expected 'fn' or 'global', found " + Describe(Peek()));
      }
    }
  }

  void ParseTestsInto(TestSuiteDef& suite, const std::string& suite_name) {
    while (!AtEnd()) {
      if (!IsKeyword("test")) Fail(Peek(), "expected 'test', found " + Describe(Peek()));
      Token kw = Next();
      TestCase t;
      t.id = suite_name + "::" + ExpectIdent("test name");
      t.file = file_;
      t.line = kw.line;
      t.body = ParseBlock();
      suite.tests.push_back(std::move(t));
    }
  }

  const std::vector<StmtPtr>& numbered() const { return numbered_; }

 private:
  const Token& Peek() const { return toks_[pos_]; }
  bool AtEnd() const { return Peek().kind == Tok::kEnd; }
  Token Next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool IsPunct(std::string_view p) const { return Peek().kind == Tok::kPunct && Peek().text == p; }
  bool IsKeyword(std::string_view k) const {
    return Peek().kind == Tok::kKeyword && Peek().text == k;
  }

  static std::string Describe(const Token& t) {
    if (t.kind == Tok::kEnd) return "end of file";
    return "'" + t.text + "'";
  }

  [[noreturn]] void Fail(const Token& at, std::string message) {
    throw SyntaxError{{file_, at.line, at.column, std::move(message)}};
  }

  void ExpectPunct(std::string_view p) {
    if (!IsPunct(p)) Fail(Peek(), "expected '" + std::string(p) + "', found " + Describe(Peek()));
    Next();
  }

  std::string ExpectIdent(std::string_view what) {
    if (Peek().kind != Tok::kIdent) {
      Fail(Peek(), "expected " + std::string(what) + ", found " + Describe(Peek()));
    }
    return Next().text;
  }

  std::vector<StmtPtr> ParseBlock() {
    ExpectPunct("{");
    std::vector<StmtPtr> body;
    while (!IsPunct("}")) {
      if (AtEnd()) Fail(Peek(), "expected '}' before end of file");
      body.push_back(ParseStmt());
    }
    Next();
    return body;
  }

  // Statements get their pre-order number before their children are parsed.
  std::shared_ptr<Stmt> NewStmt(Stmt::Kind kind, const Token& at) {
    auto s = std::make_shared<Stmt>();
    s->kind = kind;
    s->file = file_;
    s->line = at.line;
    s->column = at.column;
    if (number_) {
      s->index = static_cast<int>(numbered_.size()) + 1;
      numbered_.push_back(s);
    }
    return s;
  }

  StmtPtr ParseStmt() {
    const Token start = Peek();
    if (IsKeyword("global")) {
      auto s = NewStmt(Stmt::Kind::kGlobalAssign, start);
      Next();
      s->name = ExpectIdent("global name");
      ExpectPunct("=");
      s->expr = ParseExpr();
      ExpectPunct(";");
      return s;
    }
    if (IsKeyword("if")) return ParseIf();
    if (IsKeyword("while")) {
      auto s = NewStmt(Stmt::Kind::kWhile, start);
      Next();
      s->expr = ParseExpr();
      s->body = ParseBlock();
      return s;
    }
    if (IsKeyword("return")) {
      auto s = NewStmt(Stmt::Kind::kReturn, start);
      Next();
      if (!IsPunct(";")) s->expr = ParseExpr();
      ExpectPunct(";");
      return s;
    }
    if (IsKeyword("assert")) {
      auto s = NewStmt(Stmt::Kind::kAssert, start);
      Next();
      s->expr = ParseExpr();
      ExpectPunct(";");
      return s;
    }
    if (start.kind == Tok::kIdent && toks_[pos_ + 1].kind == Tok::kPunct) {
      const std::string& after = toks_[pos_ + 1].text;
      if (after == "=") {
        auto s = NewStmt(Stmt::Kind::kAssign, start);
        s->name = Next().text;
        Next();
        s->expr = ParseExpr();
        ExpectPunct(";");
        return s;
      }
      if (after == "(") {
        auto s = NewStmt(Stmt::Kind::kCall, start);
        s->expr = ParsePrimary();
        ExpectPunct(";");
        return s;
      }
    }
    if (IsPunct("}")) Fail(start, "unexpected '}'");
    Fail(start, "expected a statement, found " + Describe(start));
  }

  StmtPtr ParseIf() {
    auto s = NewStmt(Stmt::Kind::kIf, Peek());
    Next();
    s->expr = ParseExpr();
    s->body = ParseBlock();
    if (IsKeyword("else")) {
      Next();
      s->has_else = true;
      if (IsKeyword("if")) {
        s->orelse.push_back(ParseIf());
      } else {
        s->orelse = ParseBlock();
      }
    }
    return s;
  }

  // Precedence climbing: || < && < equality < relational < additive < mult.
  ExprPtr ParseExpr() { return ParseBinary(0); }

  static int Precedence(const Token& t) {
    if (t.kind != Tok::kPunct) return -1;
    static const std::map<std::string, int, std::less<>> kPrec = {
        {"||", 0}, {"&&", 1}, {"==", 2}, {"!=", 2}, {"<", 3}, {"<=", 3}, {">", 3},
        {">=", 3}, {"+", 4},  {"-", 4},  {"*", 5},  {"/", 5},  {"%", 5}};
    auto it = kPrec.find(t.text);
    return it == kPrec.end() ? -1 : it->second;
  }

  ExprPtr ParseBinary(int min_prec) {
    ExprPtr lhs = ParseUnary();
    for (;;) {
      int prec = Precedence(Peek());
      if (prec < min_prec) return lhs;
      Token op = Next();
      ExprPtr rhs = ParseBinary(prec + 1);
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::kBinary;
      e->name = op.text;
      e->args = {lhs, rhs};
      e->line = op.line;
      e->column = op.column;
      lhs = e;
    }
  }

  ExprPtr ParseUnary() {
    if (IsPunct("-") || IsPunct("!")) {
      Token op = Next();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::kUnary;
      e->name = op.text;
      e->args = {ParseUnary()};
      e->line = op.line;
      e->column = op.column;
      return e;
    }
    return ParsePrimary();
  }

  ExprPtr ParsePrimary() {
    Token t = Peek();
    auto e = std::make_shared<Expr>();
    e->line = t.line;
    e->column = t.column;
    if (t.kind == Tok::kInt) {
      Next();
      e->kind = Expr::Kind::kInt;
      auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), e->int_value);
      if (ec != std::errc()) Fail(t, "integer literal out of range");
      return e;
    }
    if (t.kind == Tok::kKeyword && (t.text == "true" || t.text == "false")) {
      Next();
      e->kind = Expr::Kind::kBool;
      e->bool_value = t.text == "true";
      return e;
    }
    if (t.kind == Tok::kIdent) {
      Next();
      e->name = t.text;
      if (IsPunct("(")) {
        Next();
        e->kind = Expr::Kind::kCall;
        if (!IsPunct(")")) {
          e->args.push_back(ParseExpr());
          while (IsPunct(",")) {
            Next();
            e->args.push_back(ParseExpr());
          }
        }
        ExpectPunct(")");
      } else {
        e->kind = Expr::Kind::kVar;
      }
      return e;
    }
    if (IsPunct("(")) {
      Next();
      ExprPtr inner = ParseExpr();
      ExpectPunct(")");
      return inner;
    }
    Fail(t, "expected an expression, found " + Describe(t));
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::string file_;
  bool number_;
  std::vector<StmtPtr> numbered_;
};

std::string Stem(std::string_view path) {
  auto slash = path.find_last_of('/');
  std::string_view name = slash == std::string_view::npos ? path : path.substr(slash + 1);
  auto dot = name.find('.');
  return std::string(name.substr(0, dot));
}

}  // namespace

ParsedProgram ParseProgram(std::string_view source_text, std::string_view file) {
  return ParseProgram(std::vector<SourceFile>{{std::string(file), std::string(source_text)}});
}

ParsedProgram ParseProgram(const std::vector<SourceFile>& files) {
  ParsedProgram out;
  Program program;
  for (const auto& f : files) {
    try {
      Parser parser(Lexer(f.text, f.path).Run(), f.path, /*number_statements=*/true);
      parser.ParseProgramInto(program);
      for (const auto& s : parser.numbered()) program.statement_table.emplace(s->location(), s);
    } catch (const SyntaxError& e) {
      out.diagnostics.push_back(e.diag);
    }
  }
  if (out.diagnostics.empty()) out.program = std::move(program);
  return out;
}

ParsedSuite ParseTests(const std::vector<SourceFile>& files) {
  ParsedSuite out;
  TestSuiteDef suite;
  for (const auto& f : files) {
    try {
      Parser parser(Lexer(f.text, f.path).Run(), f.path, /*number_statements=*/false);
      parser.ParseTestsInto(suite, Stem(f.path));
    } catch (const SyntaxError& e) {
      out.diagnostics.push_back(e.diag);
    }
  }
  std::set<std::string> ids;
  for (const auto& t : suite.tests) {
    if (!ids.insert(t.id).second) {
      out.diagnostics.push_back({t.file, t.line, 1, "duplicate test '" + t.id + "'"});
    }
  }
  if (out.diagnostics.empty()) out.suite = std::move(suite);
  return out;
}

// ---------------------------------------------------------------------------
// Static checks

namespace {

struct BuiltinInfo {
  std::string_view name;
  std::size_t arity;
};
constexpr BuiltinInfo kBuiltins[] = {{"tmp_write", 2}, {"tmp_read", 1}};

class Checker {
 public:
  explicit Checker(const Program& p) : program_(p) {
    for (const auto& g : p.globals) globals_.insert(g.name);
  }

  std::vector<Diagnostic> Run(const TestSuiteDef* suite) {
    std::map<std::string, const Function*> seen;
    for (const auto& f : program_.functions) {
      auto [it, inserted] = seen.emplace(f.name, &f);
      if (!inserted) {
        diags_.push_back({f.file, f.line, 1, "duplicate function '" + f.name + "'"});
      }
      for (const auto& b : kBuiltins) {
        if (b.name == f.name) {
          diags_.push_back({f.file, f.line, 1, "function '" + f.name + "' shadows a builtin"});
        }
      }
    }
    std::set<std::string> seen_globals;
    for (const auto& g : program_.globals) {
      if (!seen_globals.insert(g.name).second) {
        diags_.push_back({g.file, g.line, 1, "duplicate global '" + g.name + "'"});
      }
      std::set<std::string> none;
      CheckExpr(*g.init, none, g.file);
    }
    for (const auto& f : program_.functions) {
      std::set<std::string> locals(f.params.begin(), f.params.end());
      CollectAssigned(f.body, locals);
      CheckBody(f.body, locals, f.file);
    }
    if (suite != nullptr) {
      for (const auto& t : suite->tests) {
        std::set<std::string> locals;
        CollectAssigned(t.body, locals);
        CheckBody(t.body, locals, t.file);
      }
    }
    return std::move(diags_);
  }

 private:
  static void CollectAssigned(const std::vector<StmtPtr>& body, std::set<std::string>& out) {
    for (const auto& s : body) {
      if (s->kind == Stmt::Kind::kAssign) out.insert(s->name);
      CollectAssigned(s->body, out);
      CollectAssigned(s->orelse, out);
    }
  }

  void CheckBody(const std::vector<StmtPtr>& body, const std::set<std::string>& locals,
                 const std::string& file) {
    for (const auto& s : body) {
      if (s->kind == Stmt::Kind::kGlobalAssign && !globals_.contains(s->name)) {
        diags_.push_back({file, s->line, s->column, "assignment to undeclared global '" + s->name + "'"});
      }
      if (s->expr) CheckExpr(*s->expr, locals, file);
      CheckBody(s->body, locals, file);
      CheckBody(s->orelse, locals, file);
    }
  }

  void CheckExpr(const Expr& e, const std::set<std::string>& locals, const std::string& file) {
    switch (e.kind) {
      case Expr::Kind::kVar:
        if (!locals.contains(e.name) && !globals_.contains(e.name)) {
          diags_.push_back({file, e.line, e.column, "undefined variable '" + e.name + "'"});
        }
        break;
      case Expr::Kind::kCall: {
        std::optional<std::size_t> arity;
        if (const Function* f = program_.FindFunction(e.name)) arity = f->params.size();
        for (const auto& b : kBuiltins) {
          if (b.name == e.name) arity = b.arity;
        }
        if (!arity) {
          diags_.push_back({file, e.line, e.column, "call to undefined function '" + e.name + "'"});
        } else if (*arity != e.args.size()) {
          diags_.push_back({file, e.line, e.column,
                            "function '" + e.name + "' expects " + std::to_string(*arity) +
                                " argument(s), got " + std::to_string(e.args.size())});
        }
        break;
      }
      default:
        break;
    }
    for (const auto& a : e.args) CheckExpr(*a, locals, file);
  }

  const Program& program_;
  std::set<std::string> globals_;
  std::vector<Diagnostic> diags_;
};

}  // namespace

std::vector<Diagnostic> Check(const Program& program, const TestSuiteDef* suite) {
  return Checker(program).Run(suite);
}

}  // namespace apraudit::minilang

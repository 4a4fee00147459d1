#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "apraudit/minilang.h"

namespace apraudit::minilang {
namespace fs = std::filesystem;

namespace {

struct Image : ProgramImage {
  Program program;
  TestSuiteDef suite;
};

struct Loaded {
  std::vector<SourceFile> sources;
  std::vector<SourceFile> tests;
  std::vector<StatementLocation> deleted;
  std::vector<Diagnostic> diagnostics;
};

bool Inside(const fs::path& canonical, const fs::path& canonical_root) {
  auto rel = canonical.lexically_relative(canonical_root);
  return !rel.empty() && *rel.begin() != "..";
}

// Reads every file with `ext` under `dir`, refusing anything that resolves
// outside the workspace root.
void Collect(const fs::path& dir, std::string_view ext, const fs::path& ws_root,
             std::vector<SourceFile>& out, std::vector<Diagnostic>& diags) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return;
  const fs::path root = fs::canonical(ws_root, ec);
  std::vector<fs::path> paths;
  for (auto it = fs::recursive_directory_iterator(dir, ec); it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (ec) break;
    if (it->path().extension() == ext) paths.push_back(it->path());
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    std::string rel = p.lexically_relative(dir).generic_string();
    fs::path resolved = fs::weakly_canonical(p, ec);
    if (ec || !Inside(resolved, root)) {
      diags.push_back({rel, 0, 0, "refusing to load file outside the workspace"});
      continue;
    }
    if (!fs::is_regular_file(resolved, ec)) continue;
    std::ifstream in(resolved, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out.push_back({rel, ss.str()});
  }
}

Loaded Load(const Workspace& ws) {
  Loaded l;
  Collect(ws.source_dir(), ".mini", ws.root(), l.sources, l.diagnostics);
  Collect(ws.test_dir(), ".minitest", ws.root(), l.tests, l.diagnostics);
  fs::path variant = ws.root() / kVariantFile;
  if (fs::exists(variant)) {
    std::ifstream in(variant);
    try {
      auto doc = nlohmann::json::parse(in);
      for (const auto& s : doc.at("deleted")) {
        l.deleted.push_back(StatementLocation::Parse(s.get<std::string>()));
      }
    } catch (const std::exception& e) {
      throw AdapterFailure(std::string("corrupt variant file: ") + e.what());
    }
  }
  return l;
}

struct Built {
  std::optional<Program> program;
  std::optional<TestSuiteDef> suite;
  std::vector<Diagnostic> diagnostics;
};

Built Build(const Workspace& ws) {
  Built b;
  Loaded l = Load(ws);
  b.diagnostics = std::move(l.diagnostics);
  if (l.sources.empty()) b.diagnostics.push_back({"src", 0, 0, "no .mini source files"});
  auto parsed = ParseProgram(l.sources);
  auto tests = ParseTests(l.tests);
  b.diagnostics.insert(b.diagnostics.end(), parsed.diagnostics.begin(), parsed.diagnostics.end());
  b.diagnostics.insert(b.diagnostics.end(), tests.diagnostics.begin(), tests.diagnostics.end());
  if (!b.diagnostics.empty()) return b;
  Program program = std::move(*parsed.program);
  for (const auto& loc : l.deleted) program = DeleteStatement(program, loc);
  b.program = std::move(program);
  b.suite = std::move(tests.suite);
  return b;
}

const Image& RequireImage(const Workspace& ws) {
  const auto* image = dynamic_cast<const Image*>(ws.image().get());
  if (image == nullptr) throw AdapterFailure("workspace " + ws.label() + " is not compiled");
  return *image;
}

}  // namespace

InterpreterOptions MiniLangAdapter::OptionsFor(const Workspace& ws) const {
  InterpreterOptions o;
  o.fuel = fuel_;
  o.time_limit = limits_.test_timeout;
  o.temp_dir = ws.temp_dir();
  return o;
}

ParseReport MiniLangAdapter::Parse(const Workspace& ws) {
  ParseReport r;
  Loaded l = Load(ws);
  r.diagnostics = std::move(l.diagnostics);
  if (l.sources.empty()) r.diagnostics.push_back({"src", 0, 0, "no .mini source files"});
  auto parsed = ParseProgram(l.sources);
  auto tests = ParseTests(l.tests);
  r.diagnostics.insert(r.diagnostics.end(), parsed.diagnostics.begin(), parsed.diagnostics.end());
  r.diagnostics.insert(r.diagnostics.end(), tests.diagnostics.begin(), tests.diagnostics.end());
  r.ok = r.diagnostics.empty();
  return r;
}

CompileResult MiniLangAdapter::Compile(Workspace& ws) {
  CompileResult r;
  Built b = Build(ws);
  r.diagnostics = std::move(b.diagnostics);
  if (b.program) {
    auto checks = Check(*b.program, &*b.suite);
    r.diagnostics.insert(r.diagnostics.end(), checks.begin(), checks.end());
  }
  r.ok = std::none_of(r.diagnostics.begin(), r.diagnostics.end(),
                      [](const Diagnostic& d) { return d.error; });
  if (r.ok) {
    auto image = std::make_shared<Image>();
    image->program = std::move(*b.program);
    image->suite = std::move(*b.suite);
    ws.set_image(std::move(image));
  } else {
    ws.set_image(nullptr);
  }
  return r;
}

SuiteResult MiniLangAdapter::RunSuite(Workspace& ws) {
  const Image& image = RequireImage(ws);
  return RunTests(image.program, image.suite, WholeSuite{}, OptionsFor(ws), limits_.suite_timeout)
      .suite;
}

SingleRun MiniLangAdapter::RunSingle(Workspace& ws, std::string_view test_id) {
  const Image& image = RequireImage(ws);
  TestRun run = RunTests(image.program, image.suite, SingleTest{std::string(test_id)},
                         OptionsFor(ws), limits_.suite_timeout);
  SingleRun out;
  out.coverage = std::move(*run.coverage);
  out.outcome = out.coverage.outcome;
  return out;
}

std::vector<StatementLocation> MiniLangAdapter::Statements(const Workspace& ws) {
  if (const auto* image = dynamic_cast<const Image*>(ws.image().get())) {
    return image->program.Statements();
  }
  Built b = Build(ws);
  return b.program ? b.program->Statements() : std::vector<StatementLocation>{};
}

void MiniLangAdapter::DeleteStatement(Workspace& ws, const StatementLocation& loc) {
  Built b = Build(ws);
  if (!b.program) throw AdapterFailure("cannot mutate a workspace that does not parse");
  // Validates the location against the current (possibly mutated) program.
  minilang::DeleteStatement(*b.program, loc);

  fs::path variant = ws.root() / kVariantFile;
  nlohmann::json doc = {{"deleted", nlohmann::json::array()}};
  if (fs::exists(variant)) {
    std::ifstream in(variant);
    doc = nlohmann::json::parse(in);
  }
  doc["deleted"].push_back(loc.ToString());
  std::ofstream out(variant, std::ios::trunc);
  out << doc.dump(2) << "\n";
  if (!out) throw AdapterFailure("cannot write " + variant.string());
  ws.set_image(nullptr);
}

}  // namespace apraudit::minilang

#include "apraudit/dataset.h"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "apraudit/error.h"

namespace apraudit {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string StripDiffPath(std::string_view raw) {
  // "--- a/foo.c\t2020-01-01" -> "foo.c"
  std::string path(raw.substr(0, raw.find('\t')));
  while (!path.empty() && (path.back() == ' ' || path.back() == '\r')) path.pop_back();
  if (path.rfind("a/", 0) == 0 || path.rfind("b/", 0) == 0) path.erase(0, 2);
  return path;
}

// Parses "@@ -l,s +l,s @@" and returns the old/new line counts.
std::pair<long, long> ParseHunkHeader(std::string_view line, std::size_t line_no) {
  auto fail = [&] {
    throw ParseError("patch line " + std::to_string(line_no) + ": malformed hunk header");
  };
  auto read_range = [&](std::string_view& s, char sign) -> long {
    if (s.empty() || s.front() != sign) fail();
    s.remove_prefix(1);
    long start = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), start);
    if (ec != std::errc()) fail();
    s.remove_prefix(p - s.data());
    long count = 1;
    if (!s.empty() && s.front() == ',') {
      s.remove_prefix(1);
      auto [q, ec2] = std::from_chars(s.data(), s.data() + s.size(), count);
      if (ec2 != std::errc()) fail();
      s.remove_prefix(q - s.data());
    }
    return count;
  };
  std::string_view s = line.substr(2);
  if (s.empty() || s.front() != ' ') fail();
  s.remove_prefix(1);
  long old_count = read_range(s, '-');
  if (s.empty() || s.front() != ' ') fail();
  s.remove_prefix(1);
  long new_count = read_range(s, '+');
  if (s.rfind(" @@", 0) != 0) fail();
  return {old_count, new_count};
}

}  // namespace

Patch ParseUnifiedDiff(std::string_view text) {
  Patch patch;
  std::vector<std::string> lines;
  {
    std::string buf(text);
    std::istringstream in(buf);
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(std::move(line));
    }
  }

  std::string old_file, new_file;
  bool have_files = false;
  for (std::size_t i = 0; i < lines.size();) {
    const std::string& line = lines[i];
    if (line.rfind("--- ", 0) == 0) {
      if (i + 1 >= lines.size() || lines[i + 1].rfind("+++ ", 0) != 0) {
        throw ParseError("patch line " + std::to_string(i + 1) + ": '---' without '+++'");
      }
      old_file = StripDiffPath(std::string_view(line).substr(4));
      new_file = StripDiffPath(std::string_view(lines[i + 1]).substr(4));
      have_files = true;
      i += 2;
      continue;
    }
    if (line.rfind("@@", 0) == 0) {
      if (!have_files) {
        throw ParseError("patch line " + std::to_string(i + 1) + ": hunk before file header");
      }
      auto [old_left, new_left] = ParseHunkHeader(line, i + 1);
      Hunk hunk;
      hunk.file = new_file == "/dev/null" ? old_file : new_file;
      ++i;
      while ((old_left > 0 || new_left > 0) && i < lines.size()) {
        const std::string& body = lines[i];
        if (body.rfind("\\ ", 0) == 0) {  // "\ No newline at end of file"
          ++i;
          continue;
        }
        char tag = body.empty() ? ' ' : body.front();
        std::string content = body.empty() ? std::string() : body.substr(1);
        if (tag == ' ') {
          --old_left;
          --new_left;
        } else if (tag == '-') {
          --old_left;
          hunk.removed.push_back(std::move(content));
        } else if (tag == '+') {
          --new_left;
          hunk.added.push_back(std::move(content));
        } else {
          throw ParseError("patch line " + std::to_string(i + 1) + ": unexpected line in hunk");
        }
        ++i;
      }
      if (old_left != 0 || new_left != 0) {
        throw ParseError("patch: hunk for " + hunk.file + " is truncated or miscounted");
      }
      patch.hunks.push_back(std::move(hunk));
      continue;
    }
    // Headers such as "diff --git" or "index ..." are ignored.
    ++i;
  }
  return patch;
}

bool IsDeletionOnly(const Patch& patch) {
  for (const auto& h : patch.hunks) {
    if (!h.added.empty()) return false;
  }
  return true;
}

std::size_t AddedLineCount(const Patch& patch) {
  std::size_t n = 0;
  for (const auto& h : patch.hunks) n += h.added.size();
  return n;
}

const DefectEntry* Dataset::Find(std::string_view id) const {
  for (const auto& e : entries) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

std::optional<DefectNumber> SplitDefectId(std::string_view id) {
  auto slash = id.rfind('/');
  if (slash == std::string_view::npos || slash == 0 || slash + 1 == id.size()) return std::nullopt;
  std::string_view digits = id.substr(slash + 1);
  long n = 0;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
  if (ec != std::errc() || p != digits.data() + digits.size()) return std::nullopt;
  return DefectNumber{std::string(id.substr(0, slash)), n};
}

namespace {

bool IsUnder(const fs::path& child, const fs::path& root) {
  auto c = child.lexically_normal();
  auto r = root.lexically_normal();
  auto rel = c.lexically_relative(r);
  if (rel.empty()) return false;
  auto first = *rel.begin();
  return first != ".." && !rel.is_absolute();
}

bool TreesOverlap(const fs::path& a, const fs::path& b) {
  auto na = fs::weakly_canonical(a);
  auto nb = fs::weakly_canonical(b);
  return na == nb || IsUnder(na, nb) || IsUnder(nb, na);
}

template <typename T>
T Required(const json& obj, const char* key, const std::string& entry_id) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError((entry_id.empty() ? std::string() : entry_id + ": ") +
                     "missing field '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError((entry_id.empty() ? std::string() : entry_id + ": ") + "field '" + key +
                     "' has the wrong type");
  }
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Dataset ParseManifest(std::string_view text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("manifest root must be an object");

  Dataset ds;
  const json& meta = doc.contains("dataset") ? doc["dataset"] : json();
  ds.name = Required<std::string>(meta, "name", "");
  ds.version = Required<std::string>(meta, "version", "");
  std::string kind = doc.value("kind", std::string("executable"));
  if (kind == "executable") {
    ds.kind = DatasetKind::kExecutable;
  } else if (kind == "published-summary") {
    ds.kind = DatasetKind::kPublishedSummary;
  } else {
    throw ParseError("unknown dataset kind '" + kind + "'");
  }
  if (!doc.contains("entries") || !doc["entries"].is_array()) {
    throw ParseError("manifest needs an 'entries' array");
  }

  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path.lexically_normal() : (base_dir / path).lexically_normal();
  };

  std::unordered_set<std::string> seen;
  for (const json& item : doc["entries"]) {
    DefectEntry e;
    e.id = Required<std::string>(item, "id", "");
    if (!seen.insert(e.id).second) {
      throw ValidationError(e.id, "id", "duplicate id \"" + e.id + "\"");
    }
    if (e.id.empty()) throw ValidationError("", "id", "empty id");
    e.project = item.value("project", std::string());
    if (e.project.empty()) {
      auto split = SplitDefectId(e.id);
      e.project = split ? split->project : e.id.substr(0, e.id.find('/'));
    }
    if (item.contains("notes")) e.notes = Required<std::string>(item, "notes", e.id);

    if (ds.kind == DatasetKind::kPublishedSummary) {
      e.adapter = item.value("adapter", std::string());
      ds.entries.push_back(std::move(e));
      continue;
    }

    e.adapter = Required<std::string>(item, "adapter", e.id);
    e.source_root = resolve(Required<std::string>(item, "source_root", e.id));
    e.test_root = resolve(Required<std::string>(item, "test_root", e.id));
    for (auto& t : Required<std::vector<std::string>>(item, "expected_failing", e.id)) {
      e.expected_failing.insert(std::move(t));
    }
    if (e.expected_failing.empty()) {
      throw ValidationError(e.id, "expected_failing", "at least one failing test is required");
    }
    if (!fs::is_directory(e.source_root)) {
      throw ValidationError(e.id, "source_root", "not a directory: " + e.source_root.string());
    }
    if (!fs::is_directory(e.test_root)) {
      throw ValidationError(e.id, "test_root", "not a directory: " + e.test_root.string());
    }
    if (TreesOverlap(e.source_root, e.test_root)) {
      throw ValidationError(e.id, "test_root", "source and test trees overlap");
    }

    fs::path patch_path = resolve(Required<std::string>(item, "patch", e.id));
    std::string patch_text;
    try {
      patch_text = ReadFile(patch_path);
    } catch (const IoError&) {
      throw ValidationError(e.id, "patch", "cannot read " + patch_path.string());
    }
    try {
      e.human_patch = ParseUnifiedDiff(patch_text);
    } catch (const ParseError& err) {
      throw ParseError(e.id + ": " + err.what());
    }
    if (e.human_patch.hunks.empty()) {
      throw ValidationError(e.id, "patch", "patch has no hunks");
    }
    for (const auto& h : e.human_patch.hunks) {
      fs::path target = (e.source_root / h.file).lexically_normal();
      if (!IsUnder(target, e.source_root)) {
        throw ValidationError(e.id, "patch", "hunk file '" + h.file + "' is outside source_root");
      }
    }
    ds.entries.push_back(std::move(e));
  }
  if (ds.entries.empty()) throw ValidationError("", "entries", "dataset has no entries");
  return ds;
}

Dataset LoadManifest(const fs::path& path) {
  std::string text;
  try {
    text = ReadFile(path);
  } catch (const IoError& e) {
    throw ParseError(e.what());
  }
  return ParseManifest(text, path.parent_path());
}

}  // namespace apraudit

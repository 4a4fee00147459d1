#include "apraudit/report.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "apraudit/error.h"

namespace apraudit::report {
namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kEnDash = "\xE2\x80\x93";

std::string Percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

double PercentOf(int part, int whole) {
  return whole == 0 ? 0.0 : RoundToOneDecimal(100.0 * part / whole);
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ParseError("cannot read " + p.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

std::vector<ExclusionRow> ExclusionTable(const std::vector<WorkabilityVerdict>& verdicts) {
  struct Item {
    std::string project;
    long number;
    std::string id;
    Outcome outcome;
  };
  std::vector<Item> numbered;
  std::vector<Item> other;
  for (const auto& v : verdicts) {
    if (v.audit_error || v.outcome == Outcome::kWorkable) continue;
    if (auto n = SplitDefectId(v.defect_id)) {
      numbered.push_back({n->project, n->number, v.defect_id, v.outcome});
    } else {
      other.push_back({"", 0, v.defect_id, v.outcome});
    }
  }
  std::sort(numbered.begin(), numbered.end(), [](const Item& a, const Item& b) {
    return std::tie(a.project, a.number) < std::tie(b.project, b.number);
  });
  std::sort(other.begin(), other.end(), [](const Item& a, const Item& b) { return a.id < b.id; });

  std::vector<ExclusionRow> rows;
  for (std::size_t i = 0; i < numbered.size();) {
    std::size_t j = i;
    while (j + 1 < numbered.size() && numbered[j + 1].project == numbered[i].project &&
           numbered[j + 1].outcome == numbered[i].outcome &&
           numbered[j + 1].number == numbered[j].number + 1) {
      ++j;
    }
    std::string ids = numbered[i].project + "/" + std::to_string(numbered[i].number);
    if (j > i) ids += kEnDash + std::to_string(numbered[j].number);
    rows.push_back({ids, std::string(ReasonLabel(numbered[i].outcome))});
    i = j + 1;
  }
  for (const auto& it : other) rows.push_back({it.id, std::string(ReasonLabel(it.outcome))});
  return rows;
}

std::string FormatExclusionTable(const std::vector<ExclusionRow>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.ids + " | " + r.reason + "\n";
  return out;
}

int Summary::workable() const {
  auto it = counts.find(Outcome::kWorkable);
  return it == counts.end() ? 0 : it->second;
}

Summary MakeSummary(const std::string& dataset, const std::string& version, int defects,
                    const std::vector<WorkabilityVerdict>& verdicts) {
  std::set<std::string> seen;
  for (const auto& v : verdicts) {
    if (!seen.insert(v.defect_id).second) {
      throw InconsistentSets("defect " + v.defect_id + " has more than one verdict");
    }
  }
  ExclusionSummary ex = ClassifyDataset(verdicts);
  if (ex.total + ex.audit_errors != defects) {
    throw InconsistentSets("verdicts cover " + std::to_string(ex.total + ex.audit_errors) +
                           " defects but the dataset has " + std::to_string(defects));
  }
  Summary s;
  s.dataset = dataset;
  s.version = version;
  s.defects = defects;
  s.counts = ex.counts;
  s.audit_errors = ex.audit_errors;
  s.excluded = ex.excluded;
  s.workable_percent = ex.total == 0 ? 100.0 : PercentOf(ex.workable(), ex.total);
  s.excluded_percent = PercentOf(ex.excluded, ex.total);
  s.exclusions = ExclusionTable(verdicts);
  s.notes = ex.warnings;
  return s;
}

std::string EmitJson(const Summary& s) {
  ordered_json counts = ordered_json::object();
  for (Outcome o : kAllOutcomes) {
    auto it = s.counts.find(o);
    counts[std::string(ToString(o))] = it == s.counts.end() ? 0 : it->second;
  }
  ordered_json rows = ordered_json::array();
  for (const auto& r : s.exclusions) rows.push_back({{"ids", r.ids}, {"reason", r.reason}});
  ordered_json doc = {{"dataset", s.dataset},
                      {"version", s.version},
                      {"defects", s.defects},
                      {"counts", std::move(counts)},
                      {"audit_errors", s.audit_errors},
                      {"excluded", s.excluded},
                      {"workable_percent", s.workable_percent},
                      {"excluded_percent", s.excluded_percent},
                      {"exclusions", std::move(rows)}};
  if (s.adequacy) {
    const auto& a = *s.adequacy;
    doc["adequacy"] = {{"population", a.population},
                       {"trivially_plausible", a.trivially_plausible},
                       {"deletion_only_patches", a.deletion_only_patches},
                       {"under_specified", a.under_specified},
                       {"truncated_sweeps", a.truncated_sweeps}};
  }
  ordered_json tables = ordered_json::array();
  for (const auto& t : s.fix_rates) {
    ordered_json trs = ordered_json::array();
    for (const auto& r : t.rows) {
      trs.push_back(
          {{"label", r.label}, {"defects", r.defects}, {"fixed", r.fixed}, {"percent", r.percent}});
    }
    tables.push_back({{"title", t.title}, {"rows", std::move(trs)}});
  }
  doc["fix_rates"] = std::move(tables);
  doc["notes"] = s.notes;
  return doc.dump(2) + "\n";
}

Summary ParseSummaryJson(std::string_view text) {
  try {
    json doc = json::parse(text);
    Summary s;
    s.dataset = doc.at("dataset").get<std::string>();
    s.version = doc.at("version").get<std::string>();
    s.defects = doc.at("defects").get<int>();
    for (Outcome o : kAllOutcomes) s.counts[o] = doc.at("counts").at(std::string(ToString(o))).get<int>();
    s.audit_errors = doc.at("audit_errors").get<int>();
    s.excluded = doc.at("excluded").get<int>();
    s.workable_percent = doc.at("workable_percent").get<double>();
    s.excluded_percent = doc.at("excluded_percent").get<double>();
    for (const auto& r : doc.at("exclusions")) {
      s.exclusions.push_back({r.at("ids").get<std::string>(), r.at("reason").get<std::string>()});
    }
    if (doc.contains("adequacy")) {
      const auto& a = doc["adequacy"];
      AdequacyTally t;
      t.population = a.at("population").get<int>();
      t.trivially_plausible = a.at("trivially_plausible").get<int>();
      t.deletion_only_patches = a.at("deletion_only_patches").get<int>();
      t.under_specified = a.at("under_specified").get<int>();
      t.truncated_sweeps = a.at("truncated_sweeps").get<int>();
      s.adequacy = t;
    }
    for (const auto& t : doc.at("fix_rates")) {
      FixRateTable table;
      table.title = t.at("title").get<std::string>();
      for (const auto& r : t.at("rows")) {
        table.rows.push_back({r.at("label").get<std::string>(), r.at("defects").get<int>(),
                              r.at("fixed").get<int>(), r.at("percent").get<double>()});
      }
      s.fix_rates.push_back(std::move(table));
    }
    s.notes = doc.at("notes").get<std::vector<std::string>>();
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed summary: ") + e.what());
  }
}

std::string EmitText(const Summary& s) {
  std::ostringstream out;
  const int classified = s.defects - s.audit_errors;
  out << "# Workability summary: " << s.dataset;
  if (!s.version.empty()) out << " " << s.version;
  out << "\n\n";
  out << "Defects: " << s.defects << "\n";
  out << "Workable: " << s.workable() << " of " << classified << " (" << Percent(s.workable_percent)
      << " %)\n";
  out << "Not workable: " << s.excluded << " (" << Percent(s.excluded_percent) << " %)\n";
  if (s.audit_errors > 0) out << "Audit errors (not counted): " << s.audit_errors << "\n";
  out << "\n| Outcome | Defects |\n|---|---|\n";
  for (Outcome o : kAllOutcomes) {
    auto it = s.counts.find(o);
    out << "| " << ToString(o) << " | " << (it == s.counts.end() ? 0 : it->second) << " |\n";
  }
  out << "\nExclusion reasons:";
  for (Outcome o : kAllOutcomes) {
    if (o == Outcome::kWorkable) continue;
    auto it = s.counts.find(o);
    out << " " << ReasonLabel(o) << " " << (it == s.counts.end() ? 0 : it->second) << ";";
  }
  out << " total " << s.excluded << "\n";

  out << "\n## Non-workable defects\n\n";
  if (s.exclusions.empty()) {
    out << "(none)\n";
  } else {
    out << "```\n" << FormatExclusionTable(s.exclusions) << "```\n";
  }

  if (s.adequacy) {
    const auto& a = *s.adequacy;
    out << "\n## Test-suite adequacy\n\n";
    out << "Trivially plausible (one deleted statement passes every test): " << a.trivially_plausible
        << " of " << a.population << " workable (" << Percent(PercentOf(a.trivially_plausible, a.population))
        << " %)\n";
    out << "Human patch only deletes code: " << a.deletion_only_patches << "\n";
    out << "Under-specified: " << a.under_specified << " (" << Percent(PercentOf(a.under_specified, a.population))
        << " % of workable, " << Percent(PercentOf(a.under_specified, s.defects)) << " % of all defects)\n";
    if (a.truncated_sweeps > 0) {
      out << "Sweeps cut short by the time budget: " << a.truncated_sweeps << "\n";
    }
  }

  for (const auto& t : s.fix_rates) {
    out << "\n## " << t.title << "\n\n| Subset | Defects | Fixed | Fix rate |\n|---|---|---|---|\n";
    for (const auto& r : t.rows) {
      out << "| " << r.label << " | " << r.defects << " | " << r.fixed << " | " << Percent(r.percent)
          << " % |\n";
    }
  }

  if (!s.notes.empty()) {
    out << "\n## Notes\n\n";
    for (const auto& n : s.notes) out << "- " << n << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Bundled data

namespace {

std::vector<WorkabilityVerdict> LoadVerdictTable(const fs::path& path, const Dataset& dataset) {
  std::istringstream in(ReadFile(path));
  std::map<std::string, Outcome> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected <id>\\t<outcome>");
    }
    std::string id = line.substr(0, tab);
    if (dataset.Find(id) == nullptr) {
      throw ValidationError(id, "verdicts", "not an entry of " + dataset.name);
    }
    if (!seen.emplace(id, OutcomeFromString(line.substr(tab + 1))).second) {
      throw ValidationError(id, "verdicts", "listed twice");
    }
  }
  std::vector<WorkabilityVerdict> out;
  for (const auto& e : dataset.entries) {
    auto it = seen.find(e.id);
    if (it == seen.end()) throw ValidationError(e.id, "verdicts", "no verdict");
    WorkabilityVerdict v;
    v.defect_id = e.id;
    v.outcome = it->second;
    out.push_back(std::move(v));
  }
  return out;
}

// "Chart/1-26" or "Lang/2".
std::vector<std::string> ExpandIds(const json& list) {
  std::vector<std::string> out;
  for (const auto& item : list) {
    std::string s = item.get<std::string>();
    auto slash = s.rfind('/');
    auto dash = s.find('-', slash == std::string::npos ? 0 : slash);
    if (slash == std::string::npos || dash == std::string::npos) {
      out.push_back(s);
      continue;
    }
    std::string project = s.substr(0, slash);
    int lo = std::stoi(s.substr(slash + 1, dash - slash - 1));
    int hi = std::stoi(s.substr(dash + 1));
    if (hi < lo) throw ParseError("empty id range '" + s + "'");
    for (int n = lo; n <= hi; ++n) out.push_back(project + "/" + std::to_string(n));
  }
  return out;
}

// The population is given as ids; each stage removes either the ids absent
// from the dataset, the ids judged non-workable, an explicit id list, or a
// bare count when only the published number is known.
FixRateTable LoadFixRates(const fs::path& path, const Dataset& dataset,
                          const std::vector<WorkabilityVerdict>& verdicts) {
  try {
    json doc = json::parse(ReadFile(path));
    FixRateTable table;
    table.title = doc.at("title").get<std::string>();
    auto population_ids = ExpandIds(doc.at("population").at("ids"));
    std::set<std::string> remaining(population_ids.begin(), population_ids.end());
    if (remaining.size() != population_ids.size()) {
      throw InconsistentSets("population lists an id twice");
    }
    const int total = static_cast<int>(remaining.size());
    const int fixed = doc.at("fixed").get<int>();
    std::set<std::string> non_workable;
    for (const auto& v : verdicts) {
      if (!v.audit_error && v.outcome != Outcome::kWorkable) non_workable.insert(v.defect_id);
    }
    std::vector<CountExclusion> stages;
    for (const auto& st : doc.at("stages")) {
      CountExclusion ex;
      ex.label = st.at("label").get<std::string>();
      ex.removed_fixed = st.at("removed_fixed").get<int>();
      std::set<std::string> drop;
      if (st.contains("remove")) {
        std::string rule = st["remove"].get<std::string>();
        for (const auto& id : remaining) {
          bool hit = rule == "not-in-dataset"  ? dataset.Find(id) == nullptr
                     : rule == "non-workable" ? non_workable.contains(id)
                                              : throw ParseError("unknown stage rule '" + rule + "'");
          if (hit) drop.insert(id);
        }
        ex.removed = static_cast<int>(drop.size());
      } else if (st.contains("remove_ids")) {
        for (const auto& id : ExpandIds(st["remove_ids"])) {
          if (!remaining.contains(id)) throw InconsistentSets(id + " is not in the remaining set");
          drop.insert(id);
        }
        ex.removed = static_cast<int>(drop.size());
      } else {
        ex.removed = st.at("removed").get<int>();
      }
      for (const auto& id : drop) remaining.erase(id);
      stages.push_back(std::move(ex));
    }
    table.rows = FixRateFromCounts(total, fixed, stages, doc.at("population").at("label").get<std::string>());
    return table;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace

PaperData LoadPaperData(const fs::path& dir) {
  PaperData d;
  d.dataset = LoadManifest(dir / "defects4j-2.0-summary.json");
  d.verdicts = LoadVerdictTable(dir / "verdicts.tsv", d.dataset);
  d.table = LoadFixRates(dir / "fix-rates.json", d.dataset, d.verdicts);
  try {
    json a = json::parse(ReadFile(dir / "adequacy.json"));
    int workable = 0;
    for (const auto& v : d.verdicts) workable += v.outcome == Outcome::kWorkable;
    d.adequacy.population = workable;
    d.adequacy.trivially_plausible = a.at("trivially_plausible").get<int>();
    d.adequacy.deletion_only_patches = a.at("deletion_only_patches").get<int>();
    d.adequacy.under_specified = d.adequacy.trivially_plausible - d.adequacy.deletion_only_patches;
    if (d.adequacy.deletion_only_patches > d.adequacy.trivially_plausible ||
        d.adequacy.trivially_plausible > workable) {
      throw InconsistentSets("adequacy counts exceed the workable population");
    }
    json f = json::parse(ReadFile(dir / "figures.json"));
    if (f.contains("workable_label")) d.figure_workable_label = f["workable_label"].get<int>();
  } catch (const json::exception& e) {
    throw ParseError(dir.string() + ": " + e.what());
  }
  return d;
}

Summary ReproducePaperTables(const PaperData& data) {
  Summary s = MakeSummary(data.dataset.name, data.dataset.version,
                          static_cast<int>(data.dataset.entries.size()), data.verdicts);
  s.adequacy = data.adequacy;
  s.fix_rates.push_back(data.table);
  if (data.figure_workable_label && *data.figure_workable_label != s.workable()) {
    s.notes.push_back("The overview chart labels " + std::to_string(*data.figure_workable_label) +
                      " workable defects, but " + std::to_string(s.defects) + " - " +
                      std::to_string(s.excluded) + " = " + std::to_string(s.workable()) +
                      "; the counts here use " + std::to_string(s.workable()) + ".");
  }
  return s;
}

}  // namespace apraudit::report

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "apraudit/adequacy.h"
#include "apraudit/dataset.h"
#include "apraudit/workability.h"

namespace apraudit::report {

// One exclusion-table row: "Chart/5–26" plus the reason wording.
struct ExclusionRow {
  std::string ids;
  std::string reason;

  bool operator==(const ExclusionRow&) const = default;
};

// Non-workable verdicts grouped by project then number. Ids of the same
// project and reason whose numbers are consecutive collapse into one range.
// Audit-error verdicts are left out.
std::vector<ExclusionRow> ExclusionTable(const std::vector<WorkabilityVerdict>& verdicts);

// One line per row, "<ids> | <reason>\n". Ranges use an en dash (U+2013).
std::string FormatExclusionTable(const std::vector<ExclusionRow>& rows);

struct FixRateTable {
  std::string title;
  std::vector<FixRateRow> rows;

  bool operator==(const FixRateTable&) const = default;
};

struct Summary {
  std::string dataset;
  std::string version;
  int defects = 0;  // dataset size
  std::map<Outcome, int> counts;
  int audit_errors = 0;
  int excluded = 0;
  double workable_percent = 0.0;  // of classified defects, one decimal
  double excluded_percent = 0.0;
  std::vector<ExclusionRow> exclusions;
  std::optional<AdequacyTally> adequacy;
  std::vector<FixRateTable> fix_rates;
  std::vector<std::string> notes;

  int workable() const;
  bool operator==(const Summary&) const = default;
};

// Throws InconsistentSets unless every dataset entry has exactly one
// verdict (the partition check).
Summary MakeSummary(const std::string& dataset, const std::string& version, int defects,
                    const std::vector<WorkabilityVerdict>& verdicts);

// Stable structured form: byte-identical output for equal summaries.
std::string EmitJson(const Summary& summary);
Summary ParseSummaryJson(std::string_view text);  // throws ParseError
std::string EmitText(const Summary& summary);     // Markdown

// Published aggregate data bundled with the tool.
struct PaperData {
  Dataset dataset;
  std::vector<WorkabilityVerdict> verdicts;
  FixRateTable table;
  AdequacyTally adequacy;
  std::optional<int> figure_workable_label;  // workable count as printed in the overview chart
};

// Reads <dir>/defects4j-2.0-summary.json, verdicts.tsv, fix-rates.json, adequacy.json
// and figures.json. Throws ParseError / ValidationError / InconsistentSets.
PaperData LoadPaperData(const std::filesystem::path& dir);

// Summary of the bundled data, including the fix-rate table and the
// adequacy counts, with a note for every published figure the data does
// not agree with.
Summary ReproducePaperTables(const PaperData& data);

}  // namespace apraudit::report

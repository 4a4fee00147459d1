#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "apraudit/adequacy.h"
#include "apraudit/dataset.h"
#include "apraudit/workability.h"

// Results-log record shapes. Every record carries a "type" field.
namespace apraudit::records {

using nlohmann::json;
using nlohmann::ordered_json;

inline constexpr const char* kHeader = "audit_header";
inline constexpr const char* kRound = "round";
inline constexpr const char* kAuditError = "audit_error";
inline constexpr const char* kVerdict = "verdict";
inline constexpr const char* kTrial = "trial";
inline constexpr const char* kAdequacy = "adequacy";

ordered_json Header(const Dataset& dataset, const RoundConfig& cfg);
// True if `record` is the header this dataset and config would write.
bool HeaderMatches(const json& record, const Dataset& dataset, const RoundConfig& cfg);

ordered_json Round(const RoundVerdict& v);
RoundVerdict RoundFrom(const json& record);  // throws ParseError

ordered_json AuditError(const std::string& defect_id, int round, const std::string& message);
ordered_json Verdict(const WorkabilityVerdict& v);

ordered_json Trial(const DeletionTrial& t);
DeletionTrial TrialFrom(const json& record);

ordered_json Adequacy(const AdequacyVerdict& v);
AdequacyVerdict AdequacyFrom(const json& record);

std::string TypeOf(const json& record);  // "" when absent

}  // namespace apraudit::records

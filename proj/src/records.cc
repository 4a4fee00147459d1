#include "apraudit/records.h"

#include "apraudit/error.h"

namespace apraudit::records {

namespace {

ordered_json IdArray(const TestIdSet& ids) {
  ordered_json a = ordered_json::array();
  for (const auto& id : ids) a.push_back(id);
  return a;
}

template <typename F>
auto Guard(const char* what, F f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed ") + what + " record: " + e.what());
  }
}

}  // namespace

ordered_json Header(const Dataset& dataset, const RoundConfig& cfg) {
  ordered_json ids = ordered_json::array();
  for (const auto& e : dataset.entries) ids.push_back(e.id);
  return {{"type", kHeader},
          {"dataset", dataset.name},
          {"version", dataset.version},
          {"entries", std::move(ids)},
          {"rounds", cfg.rounds},
          {"schedule", cfg.parallelism_schedule}};
}

bool HeaderMatches(const json& record, const Dataset& dataset, const RoundConfig& cfg) {
  return json::parse(Header(dataset, cfg).dump()) == record;
}

ordered_json Round(const RoundVerdict& v) {
  ordered_json dis = ordered_json::array();
  for (const auto& d : v.disagreements) {
    dis.push_back({{"test", d.test_id},
                   {"suite", std::string(ToString(d.in_suite))},
                   {"single", std::string(ToString(d.single))}});
  }
  return {{"type", kRound},
          {"defect", v.defect_id},
          {"round", v.round_index},
          {"parallelism", v.parallelism},
          {"outcome", std::string(ToString(v.outcome))},
          {"failing", IdArray(v.failing)},
          {"disagreements", std::move(dis)},
          {"diagnostics", v.diagnostics}};
}

RoundVerdict RoundFrom(const json& r) {
  return Guard("round", [&] {
    RoundVerdict v;
    v.defect_id = r.at("defect").get<std::string>();
    v.round_index = r.at("round").get<int>();
    v.parallelism = r.at("parallelism").get<int>();
    v.outcome = OutcomeFromString(r.at("outcome").get<std::string>());
    for (const auto& t : r.at("failing")) v.failing.insert(t.get<std::string>());
    for (const auto& d : r.at("disagreements")) {
      v.disagreements.push_back({d.at("test").get<std::string>(),
                                 TestStatusFromString(d.at("suite").get<std::string>()),
                                 TestStatusFromString(d.at("single").get<std::string>())});
    }
    v.diagnostics = r.at("diagnostics").get<std::vector<std::string>>();
    return v;
  });
}

ordered_json AuditError(const std::string& defect_id, int round, const std::string& message) {
  return {{"type", kAuditError}, {"defect", defect_id}, {"round", round}, {"message", message}};
}

ordered_json Verdict(const WorkabilityVerdict& v) {
  ordered_json r = {{"type", kVerdict}, {"defect", v.defect_id}};
  if (v.audit_error) {
    r["outcome"] = "audit-error";
    r["message"] = *v.audit_error;
  } else {
    r["outcome"] = std::string(ToString(v.outcome));
  }
  r["rounds"] = v.rounds.size();
  return r;
}

ordered_json Trial(const DeletionTrial& t) {
  return {{"type", kTrial},
          {"defect", t.defect_id},
          {"loc", t.loc.ToString()},
          {"evaluated", t.evaluated},
          {"compile_ok", t.compile_ok},
          {"suite_passed", t.suite_passed}};
}

DeletionTrial TrialFrom(const json& r) {
  return Guard("trial", [&] {
    DeletionTrial t;
    t.defect_id = r.at("defect").get<std::string>();
    t.loc = StatementLocation::Parse(r.at("loc").get<std::string>());
    t.evaluated = r.at("evaluated").get<bool>();
    t.compile_ok = r.at("compile_ok").get<bool>();
    t.suite_passed = r.at("suite_passed").get<bool>();
    return t;
  });
}

ordered_json Adequacy(const AdequacyVerdict& v) {
  ordered_json locs = ordered_json::array();
  for (const auto& l : v.plausible_locations) locs.push_back(l.ToString());
  return {{"type", kAdequacy},
          {"defect", v.defect_id},
          {"trivially_plausible", v.trivially_plausible},
          {"plausible", std::move(locs)},
          {"human_patch_deletion_only", v.human_patch_deletion_only},
          {"under_specified", v.under_specified},
          {"sweep_truncated", v.sweep_truncated}};
}

AdequacyVerdict AdequacyFrom(const json& r) {
  return Guard("adequacy", [&] {
    AdequacyVerdict v;
    v.defect_id = r.at("defect").get<std::string>();
    v.trivially_plausible = r.at("trivially_plausible").get<bool>();
    for (const auto& l : r.at("plausible")) {
      v.plausible_locations.push_back(StatementLocation::Parse(l.get<std::string>()));
    }
    v.human_patch_deletion_only = r.at("human_patch_deletion_only").get<bool>();
    v.under_specified = r.at("under_specified").get<bool>();
    v.sweep_truncated = r.at("sweep_truncated").get<bool>();
    return v;
  });
}

std::string TypeOf(const json& record) {
  if (!record.is_object()) return "";
  auto it = record.find("type");
  if (it == record.end() || !it->is_string()) return "";
  return it->get<std::string>();
}

}  // namespace apraudit::records

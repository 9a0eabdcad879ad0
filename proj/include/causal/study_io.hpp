#pragma once

// Study-file reader and writer. A study file is one UTF-8 JSON document:
//
//   {
//     "studies":     [{"id", "design": "cohort"|"case_control", "metadata"?,
//                      "strata": [{"profile": {name: level}, "table": {a,b,c,d}}]}],
//     "dose_series": [{"id", "units"?, "points": [{"dose", "table": {a,b,c,d}}]}],
//     "judgments":   [{"test": 1|2|3|10, "verdict", "rationale"?}],
//     "chain":       {"action", "compensable_exposure", "other_exposures",
//                     "outcome", "relation_class", "interaction_model"},
//     "confounders": [{"name", "rr_confounder_outcome", "prevalence_exposed",
//                      "prevalence_unexposed"}],
//     "misclassification":  {"sensitivity", "specificity", "differential",
//                            "noncase_sensitivity"?, "noncase_specificity"?},
//     "sensitivity_ranges": {"rr_confounder_outcome": [lo, hi],
//                            "prevalence_exposed": [lo, hi],
//                            "prevalence_unexposed": [lo, hi]}
//   }
//
// Only "studies" is required. Unknown keys are rejected at every level.

#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "causal/errors.hpp"
#include "causal/study_model.hpp"

namespace causal {

using Json = nlohmann::json;

namespace detail {

struct Reader {
  static void require_object(const Json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path + ": expected an object");
  }

  static void reject_unknown(const Json& j, const std::string& path,
                             std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : j.items()) {
      bool ok = false;
      for (auto a : allowed) ok = ok || key == a;
      if (!ok) throw SchemaError(path + "/" + key + ": unknown key");
    }
  }

  static const Json& field(const Json& j, const std::string& path, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(path + "/" + key + ": required field missing");
    return *it;
  }

  static std::string string_at(const Json& j, const std::string& path) {
    if (!j.is_string()) throw SchemaError(path + ": expected a string");
    return j.get<std::string>();
  }

  static std::int64_t integer_at(const Json& j, const std::string& path) {
    if (!j.is_number_integer()) throw SchemaError(path + ": expected an integer");
    if (j.is_number_unsigned()) {
      const auto v = j.get<std::uint64_t>();
      if (v > static_cast<std::uint64_t>(INT64_MAX)) throw SchemaError(path + ": integer out of range");
      return static_cast<std::int64_t>(v);
    }
    return j.get<std::int64_t>();
  }

  static double number_at(const Json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path + ": expected a number");
    return j.get<double>();
  }

  static bool bool_at(const Json& j, const std::string& path) {
    if (!j.is_boolean()) throw SchemaError(path + ": expected a boolean");
    return j.get<bool>();
  }

  static const Json& array_at(const Json& j, const std::string& path) {
    if (!j.is_array()) throw SchemaError(path + ": expected an array");
    return j;
  }
};

inline TwoByTwoTable parse_table(const Json& j, const std::string& path, Design design) {
  Reader::require_object(j, path);
  Reader::reject_unknown(j, path, {"a", "b", "c", "d"});
  TwoByTwoTable t;
  t.a = Reader::integer_at(Reader::field(j, path, "a"), path + "/a");
  t.b = Reader::integer_at(Reader::field(j, path, "b"), path + "/b");
  t.c = Reader::integer_at(Reader::field(j, path, "c"), path + "/c");
  t.d = Reader::integer_at(Reader::field(j, path, "d"), path + "/d");
  t.design = design;
  const auto report = validate_table(t);
  if (!report.ok()) throw ValidationError(path + ": " + report.violations.front());
  return t;
}

inline Design parse_design(const Json& j, const std::string& path) {
  const auto s = Reader::string_at(j, path);
  if (s == "cohort") return Design::Cohort;
  if (s == "case_control") return Design::CaseControl;
  throw SchemaError(path + ": design must be \"cohort\" or \"case_control\"");
}

inline Status parse_status(const Json& j, const std::string& path) {
  const auto s = Reader::string_at(j, path);
  if (s == "pass") return Status::Pass;
  if (s == "fail") return Status::Fail;
  if (s == "discounted") return Status::Discounted;
  if (s == "not_assessable") return Status::NotAssessable;
  throw SchemaError(path + ": verdict must be pass, fail, discounted or not_assessable");
}

inline StratifiedStudy parse_study(const Json& j, const std::string& path) {
  Reader::require_object(j, path);
  Reader::reject_unknown(j, path, {"id", "design", "metadata", "strata"});
  StratifiedStudy s;
  s.id = Reader::string_at(Reader::field(j, path, "id"), path + "/id");
  const Design design = parse_design(Reader::field(j, path, "design"), path + "/design");
  if (auto it = j.find("metadata"); it != j.end()) s.metadata = Reader::string_at(*it, path + "/metadata");
  const auto& strata = Reader::array_at(Reader::field(j, path, "strata"), path + "/strata");
  if (strata.empty()) throw SchemaError(path + "/strata: at least one stratum is required");
  for (std::size_t i = 0; i < strata.size(); ++i) {
    const std::string sp = path + "/strata/" + std::to_string(i);
    Reader::require_object(strata[i], sp);
    Reader::reject_unknown(strata[i], sp, {"profile", "table"});
    Stratum st;
    const auto& profile = Reader::field(strata[i], sp, "profile");
    Reader::require_object(profile, sp + "/profile");
    for (const auto& [k, v] : profile.items()) {
      st.profile[k] = Reader::string_at(v, sp + "/profile/" + k);
    }
    st.table = parse_table(Reader::field(strata[i], sp, "table"), sp + "/table", design);
    s.strata.push_back(std::move(st));
  }
  validate_study(s);
  return s;
}

inline DoseSeries parse_dose_series(const Json& j, const std::string& path) {
  Reader::require_object(j, path);
  Reader::reject_unknown(j, path, {"id", "units", "points"});
  DoseSeries s;
  s.id = Reader::string_at(Reader::field(j, path, "id"), path + "/id");
  if (auto it = j.find("units"); it != j.end()) s.units = Reader::string_at(*it, path + "/units");
  const auto& points = Reader::array_at(Reader::field(j, path, "points"), path + "/points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::string pp = path + "/points/" + std::to_string(i);
    Reader::require_object(points[i], pp);
    Reader::reject_unknown(points[i], pp, {"dose", "table"});
    DosePoint p;
    p.dose = Reader::number_at(Reader::field(points[i], pp, "dose"), pp + "/dose");
    p.table = parse_table(Reader::field(points[i], pp, "table"), pp + "/table", Design::Cohort);
    s.points.push_back(p);
  }
  validate_dose_series(s);
  return s;
}

inline RelationClass parse_relation(const Json& j, const std::string& path) {
  const auto s = Reader::string_at(j, path);
  if (s == "R0") return RelationClass::R0_NecessarySufficient;
  if (s == "R1") return RelationClass::R1_SingleIdentified;
  if (s == "R2") return RelationClass::R2_MultipleIdentified;
  throw SchemaError(path + ": relation_class must be R0, R1 or R2");
}

inline CausalChainSpec parse_chain(const Json& j, const std::string& path) {
  Reader::require_object(j, path);
  Reader::reject_unknown(j, path, {"action", "compensable_exposure", "other_exposures", "outcome",
                                   "relation_class", "interaction_model"});
  CausalChainSpec c;
  c.action = Reader::string_at(Reader::field(j, path, "action"), path + "/action");
  c.compensable_exposure = Reader::string_at(Reader::field(j, path, "compensable_exposure"),
                                             path + "/compensable_exposure");
  c.outcome = Reader::string_at(Reader::field(j, path, "outcome"), path + "/outcome");
  if (auto it = j.find("other_exposures"); it != j.end()) {
    const auto& arr = Reader::array_at(*it, path + "/other_exposures");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      c.other_exposures.push_back(
          Reader::string_at(arr[i], path + "/other_exposures/" + std::to_string(i)));
    }
  }
  c.relation_class = parse_relation(Reader::field(j, path, "relation_class"), path + "/relation_class");
  if (auto it = j.find("interaction_model"); it != j.end()) {
    const auto s = Reader::string_at(*it, path + "/interaction_model");
    if (s == "additive") {
      c.interaction_model = InteractionModel::Additive;
    } else if (s == "synergistic") {
      c.interaction_model = InteractionModel::Synergistic;
    } else {
      throw SchemaError(path + "/interaction_model: must be additive or synergistic");
    }
  }
  validate_chain(c);
  return c;
}

inline Interval parse_interval(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw SchemaError(path + ": expected [low, high]");
  return {Reader::number_at(j[0], path + "/0"), Reader::number_at(j[1], path + "/1")};
}

}  // namespace detail

/// Parse and fully validate a study file. Throws SchemaError for shape
/// problems (with a path) and ValidationError for content problems.
inline EvidenceBundle parse_study_json(const Json& root) {
  using detail::Reader;
  Reader::require_object(root, "");
  Reader::reject_unknown(root, "", {"studies", "dose_series", "judgments", "chain", "confounders",
                                    "misclassification", "sensitivity_ranges"});
  EvidenceBundle b;
  const auto& studies = Reader::array_at(Reader::field(root, "", "studies"), "/studies");
  if (studies.empty()) throw SchemaError("/studies: at least one study is required");
  for (std::size_t i = 0; i < studies.size(); ++i) {
    b.studies.push_back(detail::parse_study(studies[i], "/studies/" + std::to_string(i)));
  }
  if (auto it = root.find("dose_series"); it != root.end()) {
    const auto& arr = Reader::array_at(*it, "/dose_series");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      b.dose_series.push_back(detail::parse_dose_series(arr[i], "/dose_series/" + std::to_string(i)));
    }
  }
  if (auto it = root.find("judgments"); it != root.end()) {
    const auto& arr = Reader::array_at(*it, "/judgments");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = "/judgments/" + std::to_string(i);
      Reader::require_object(arr[i], p);
      Reader::reject_unknown(arr[i], p, {"test", "verdict", "rationale"});
      QualitativeJudgment q;
      q.test_id = static_cast<int>(Reader::integer_at(Reader::field(arr[i], p, "test"), p + "/test"));
      q.verdict = detail::parse_status(Reader::field(arr[i], p, "verdict"), p + "/verdict");
      if (auto r = arr[i].find("rationale"); r != arr[i].end()) {
        q.rationale = Reader::string_at(*r, p + "/rationale");
      }
      b.judgments.push_back(std::move(q));
    }
  }
  if (auto it = root.find("chain"); it != root.end()) b.chain = detail::parse_chain(*it, "/chain");
  if (auto it = root.find("confounders"); it != root.end()) {
    const auto& arr = Reader::array_at(*it, "/confounders");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = "/confounders/" + std::to_string(i);
      Reader::require_object(arr[i], p);
      Reader::reject_unknown(arr[i], p, {"name", "rr_confounder_outcome", "prevalence_exposed",
                                         "prevalence_unexposed"});
      DeclaredConfounder c;
      c.name = Reader::string_at(Reader::field(arr[i], p, "name"), p + "/name");
      c.spec.rr_confounder_outcome = Reader::number_at(
          Reader::field(arr[i], p, "rr_confounder_outcome"), p + "/rr_confounder_outcome");
      c.spec.prevalence_exposed = Reader::number_at(
          Reader::field(arr[i], p, "prevalence_exposed"), p + "/prevalence_exposed");
      c.spec.prevalence_unexposed = Reader::number_at(
          Reader::field(arr[i], p, "prevalence_unexposed"), p + "/prevalence_unexposed");
      b.confounders.push_back(std::move(c));
    }
  }
  if (auto it = root.find("misclassification"); it != root.end()) {
    const std::string p = "/misclassification";
    Reader::require_object(*it, p);
    Reader::reject_unknown(*it, p, {"sensitivity", "specificity", "differential",
                                    "noncase_sensitivity", "noncase_specificity"});
    MisclassificationSpec m;
    m.sensitivity = Reader::number_at(Reader::field(*it, p, "sensitivity"), p + "/sensitivity");
    m.specificity = Reader::number_at(Reader::field(*it, p, "specificity"), p + "/specificity");
    if (auto d = it->find("differential"); d != it->end()) m.differential = Reader::bool_at(*d, p + "/differential");
    if (m.differential) {
      m.noncase_sensitivity = Reader::number_at(Reader::field(*it, p, "noncase_sensitivity"),
                                                p + "/noncase_sensitivity");
      m.noncase_specificity = Reader::number_at(Reader::field(*it, p, "noncase_specificity"),
                                                p + "/noncase_specificity");
    } else if (it->contains("noncase_sensitivity") || it->contains("noncase_specificity")) {
      throw SchemaError(p + ": noncase_* values require \"differential\": true");
    }
    b.misclassification = m;
  }
  if (auto it = root.find("sensitivity_ranges"); it != root.end()) {
    const std::string p = "/sensitivity_ranges";
    Reader::require_object(*it, p);
    Reader::reject_unknown(*it, p, {"rr_confounder_outcome", "prevalence_exposed", "prevalence_unexposed"});
    SensitivityRange r;
    r.rr_confounder_outcome = detail::parse_interval(Reader::field(*it, p, "rr_confounder_outcome"),
                                                     p + "/rr_confounder_outcome");
    r.prevalence_exposed = detail::parse_interval(Reader::field(*it, p, "prevalence_exposed"),
                                                  p + "/prevalence_exposed");
    r.prevalence_unexposed = detail::parse_interval(Reader::field(*it, p, "prevalence_unexposed"),
                                                    p + "/prevalence_unexposed");
    b.sensitivity_ranges = r;
  }
  validate_bundle(b);
  return b;
}

inline EvidenceBundle parse_study_file(std::string_view bytes) {
  Json root;
  try {
    root = Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::parse_error& e) {
    throw SchemaError(std::string("malformed JSON: ") + e.what());
  }
  return parse_study_json(root);
}

// Writer. Emits every optional section that is present so that
// parse_study_json(to_json(b)) == b.

inline Json table_to_json(const TwoByTwoTable& t) {
  return Json{{"a", t.a}, {"b", t.b}, {"c", t.c}, {"d", t.d}};
}

inline Json to_json(const EvidenceBundle& b) {
  Json root = Json::object();
  Json studies = Json::array();
  for (const auto& s : b.studies) {
    Json strata = Json::array();
    for (const auto& st : s.strata) {
      strata.push_back({{"profile", st.profile}, {"table", table_to_json(st.table)}});
    }
    Json js{{"id", s.id},
            {"design", std::string(to_string(s.strata.front().table.design))},
            {"strata", strata}};
    if (!s.metadata.empty()) js["metadata"] = s.metadata;
    studies.push_back(std::move(js));
  }
  root["studies"] = std::move(studies);
  if (!b.dose_series.empty()) {
    Json arr = Json::array();
    for (const auto& d : b.dose_series) {
      Json points = Json::array();
      for (const auto& p : d.points) points.push_back({{"dose", p.dose}, {"table", table_to_json(p.table)}});
      Json jd{{"id", d.id}, {"points", points}};
      if (!d.units.empty()) jd["units"] = d.units;
      arr.push_back(std::move(jd));
    }
    root["dose_series"] = std::move(arr);
  }
  if (!b.judgments.empty()) {
    Json arr = Json::array();
    for (const auto& j : b.judgments) {
      Json jj{{"test", j.test_id}, {"verdict", std::string(to_string(j.verdict))}};
      if (!j.rationale.empty()) jj["rationale"] = j.rationale;
      arr.push_back(std::move(jj));
    }
    root["judgments"] = std::move(arr);
  }
  if (b.chain) {
    const auto& c = *b.chain;
    static constexpr const char* kRelation[] = {"R0", "R1", "R2"};
    root["chain"] = {{"action", c.action},
                     {"compensable_exposure", c.compensable_exposure},
                     {"other_exposures", c.other_exposures},
                     {"outcome", c.outcome},
                     {"relation_class", kRelation[static_cast<int>(c.relation_class)]},
                     {"interaction_model", c.interaction_model == InteractionModel::Additive
                                               ? "additive"
                                               : "synergistic"}};
  }
  if (!b.confounders.empty()) {
    Json arr = Json::array();
    for (const auto& c : b.confounders) {
      arr.push_back({{"name", c.name},
                     {"rr_confounder_outcome", c.spec.rr_confounder_outcome},
                     {"prevalence_exposed", c.spec.prevalence_exposed},
                     {"prevalence_unexposed", c.spec.prevalence_unexposed}});
    }
    root["confounders"] = std::move(arr);
  }
  if (b.misclassification) {
    const auto& m = *b.misclassification;
    Json jm{{"sensitivity", m.sensitivity}, {"specificity", m.specificity}, {"differential", m.differential}};
    if (m.differential) {
      jm["noncase_sensitivity"] = m.noncase_sensitivity;
      jm["noncase_specificity"] = m.noncase_specificity;
    }
    root["misclassification"] = std::move(jm);
  }
  if (b.sensitivity_ranges) {
    const auto& r = *b.sensitivity_ranges;
    auto iv = [](const Interval& i) { return Json::array({i.low, i.high}); };
    root["sensitivity_ranges"] = {{"rr_confounder_outcome", iv(r.rr_confounder_outcome)},
                                  {"prevalence_exposed", iv(r.prevalence_exposed)},
                                  {"prevalence_unexposed", iv(r.prevalence_unexposed)}};
  }
  return root;
}

}  // namespace causal

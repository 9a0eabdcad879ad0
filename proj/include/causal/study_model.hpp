#pragma once

// Causal-chain data model: 2x2 tables, stratified studies, dose series,
// human judgments and the evidence bundle that feeds the checklist.
//
// Relative risk is always the ratio of outcome rates (cases per exposed person
// over cases per unexposed person).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "causal/errors.hpp"
#include "causal/warnings.hpp"

namespace causal {

enum class Design { Cohort, CaseControl };

inline std::string_view to_string(Design d) {
  return d == Design::Cohort ? "cohort" : "case_control";
}

/// Exposed/unexposed by case/noncase counts.
///
///            case   noncase
///   exposed    a       b
/// unexposed    c       d
struct TwoByTwoTable {
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::int64_t c = 0;
  std::int64_t d = 0;
  Design design = Design::Cohort;

  std::int64_t exposed_margin() const { return a + b; }
  std::int64_t unexposed_margin() const { return c + d; }
  std::int64_t case_margin() const { return a + c; }
  std::int64_t noncase_margin() const { return b + d; }
  std::int64_t total() const { return a + b + c + d; }
  bool has_zero_cell() const { return a == 0 || b == 0 || c == 0 || d == 0; }

  TwoByTwoTable& operator+=(const TwoByTwoTable& o) {
    a += o.a;
    b += o.b;
    c += o.c;
    d += o.d;
    return *this;
  }

  bool operator==(const TwoByTwoTable&) const = default;
};

struct TableValidation {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;

  bool ok() const { return violations.empty(); }
};

/// Structural check of a table. Violations are returned, never thrown.
inline TableValidation validate_table(const TwoByTwoTable& t) {
  TableValidation out;
  const std::pair<const char*, std::int64_t> cells[] = {
      {"a", t.a}, {"b", t.b}, {"c", t.c}, {"d", t.d}};
  for (const auto& [name, value] : cells) {
    if (value < 0) {
      out.violations.push_back(std::string("negative count in cell '") + name +
                               "' (" + std::to_string(value) + ")");
    }
  }
  if (!out.ok()) return out;
  if (t.exposed_margin() == 0) out.violations.emplace_back("empty exposed margin (a+b = 0)");
  if (t.unexposed_margin() == 0) out.violations.emplace_back("empty unexposed margin (c+d = 0)");
  if (!out.ok()) return out;

  if (t.has_zero_cell()) out.warnings.emplace_back(warnings::kZeroCellCorrection);
  const double n = static_cast<double>(t.total());
  const double rows[] = {static_cast<double>(t.exposed_margin()),
                         static_cast<double>(t.unexposed_margin())};
  const double cols[] = {static_cast<double>(t.case_margin()),
                         static_cast<double>(t.noncase_margin())};
  bool small = false;
  for (double r : rows)
    for (double c : cols) small = small || (r * c / n < 5.0);
  if (small) out.warnings.emplace_back(warnings::kSmallStudy);
  return out;
}

using CovariateProfile = std::map<std::string, std::string>;

inline std::string describe(const CovariateProfile& p) {
  if (p.empty()) return "{}";
  std::string s = "{";
  for (const auto& [k, v] : p) {
    if (s.size() > 1) s += ", ";
    s += k + "=" + v;
  }
  return s + "}";
}

struct Stratum {
  CovariateProfile profile;
  TwoByTwoTable table;
  bool operator==(const Stratum&) const = default;
};

struct StratifiedStudy {
  std::string id;
  std::vector<Stratum> strata;
  std::string metadata;

  bool operator==(const StratifiedStudy&) const = default;

  TwoByTwoTable crude() const {
    TwoByTwoTable sum;
    if (!strata.empty()) sum.design = strata.front().table.design;
    for (const auto& s : strata) sum += s.table;
    return sum;
  }

  std::set<std::string> covariate_names() const {
    std::set<std::string> names;
    if (!strata.empty())
      for (const auto& [k, v] : strata.front().profile) names.insert(k);
    return names;
  }
};

/// Throws ValidationError when the stratum invariants are broken.
inline void validate_study(const StratifiedStudy& s) {
  if (s.strata.empty()) throw ValidationError("study '" + s.id + "' has no strata");
  const auto names = s.covariate_names();
  std::set<CovariateProfile> seen;
  for (std::size_t i = 0; i < s.strata.size(); ++i) {
    const auto& st = s.strata[i];
    std::set<std::string> these;
    for (const auto& [k, v] : st.profile) these.insert(k);
    if (these != names) {
      throw ValidationError("study '" + s.id + "' stratum " + std::to_string(i) +
                            " uses a different covariate name set");
    }
    if (!seen.insert(st.profile).second) {
      throw ValidationError("study '" + s.id + "' repeats covariate profile " +
                            describe(st.profile));
    }
    const auto report = validate_table(st.table);
    if (!report.ok()) {
      throw ValidationError("study '" + s.id + "' stratum " + std::to_string(i) +
                            ": " + report.violations.front());
    }
  }
}

struct NoMatch {
  std::vector<CovariateProfile> available;
};

/// Exact-profile lookup. No nearest-match fallback: an absent profile yields
/// NoMatch listing what the study does contain.
inline std::variant<TwoByTwoTable, NoMatch> select_relevant_stratum(
    const StratifiedStudy& s, const CovariateProfile& profile) {
  std::set<std::string> wanted;
  for (const auto& [k, v] : profile) wanted.insert(k);
  if (wanted != s.covariate_names()) {
    throw CovariateMismatch("profile " + describe(profile) +
                            " does not name the covariates of study '" + s.id + "'");
  }
  for (const auto& st : s.strata) {
    if (st.profile == profile) return st.table;
  }
  NoMatch none;
  for (const auto& st : s.strata) none.available.push_back(st.profile);
  std::sort(none.available.begin(), none.available.end());
  return none;
}

struct DosePoint {
  double dose = 0.0;
  TwoByTwoTable table;
  bool operator==(const DosePoint&) const = default;
};

/// Dosed groups against a shared zero-dose referent (cells c, d of every
/// point).
struct DoseSeries {
  std::string id;
  std::string units;
  std::vector<DosePoint> points;
  bool operator==(const DoseSeries&) const = default;
};

inline void validate_dose_series(const DoseSeries& s) {
  if (s.points.empty()) throw ValidationError("dose series '" + s.id + "' has no points");
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const auto& p = s.points[i];
    if (!(p.dose >= 0.0)) {
      throw ValidationError("dose series '" + s.id + "' point " + std::to_string(i) +
                            ": dose must be non-negative");
    }
    if (i > 0 && !(p.dose > s.points[i - 1].dose)) {
      throw ValidationError("dose series '" + s.id + "': doses must be strictly increasing");
    }
    if (p.table.c != s.points.front().table.c || p.table.d != s.points.front().table.d) {
      throw ValidationError("dose series '" + s.id +
                            "': every point must share the same referent (c, d)");
    }
    const auto report = validate_table(p.table);
    if (!report.ok()) {
      throw ValidationError("dose series '" + s.id + "' point " + std::to_string(i) +
                            ": " + report.violations.front());
    }
  }
}

enum class RelationClass { R0_NecessarySufficient, R1_SingleIdentified, R2_MultipleIdentified };
enum class InteractionModel { Additive, Synergistic };

/// Action -> exposure -> outcome, with the relationship class of the
/// exposure set.
struct CausalChainSpec {
  std::string action;
  std::string compensable_exposure;
  std::vector<std::string> other_exposures;
  std::string outcome;
  RelationClass relation_class = RelationClass::R1_SingleIdentified;
  InteractionModel interaction_model = InteractionModel::Additive;

  bool operator==(const CausalChainSpec&) const = default;
};

inline void validate_chain(const CausalChainSpec& c) {
  const bool needs_others = c.relation_class == RelationClass::R2_MultipleIdentified;
  if (needs_others && c.other_exposures.empty()) {
    throw ValidationError("chain: R2 requires at least one other identified exposure");
  }
  if (!needs_others && !c.other_exposures.empty()) {
    throw ValidationError("chain: R0 and R1 admit no other identified exposures");
  }
}

enum class Status { Pass, Fail, Discounted, NotAssessable };

inline std::string_view to_string(Status s) {
  switch (s) {
    case Status::Pass: return "pass";
    case Status::Fail: return "fail";
    case Status::Discounted: return "discounted";
    case Status::NotAssessable: return "not_assessable";
  }
  return "?";
}

/// Human verdict on one of the non-computed tests (1, 2, 3, 10).
struct QualitativeJudgment {
  int test_id = 1;
  Status verdict = Status::NotAssessable;
  std::string rationale;
  bool operator==(const QualitativeJudgment&) const = default;
};

inline bool is_judgment_test(int id) { return id == 1 || id == 2 || id == 3 || id == 10; }

inline void validate_judgment(const QualitativeJudgment& j) {
  if (!is_judgment_test(j.test_id)) {
    throw ValidationError("judgment for test " + std::to_string(j.test_id) +
                          ": only tests 1, 2, 3 and 10 are supplied as judgments");
  }
  if ((j.verdict == Status::Fail || j.verdict == Status::Discounted) && j.rationale.empty()) {
    throw ValidationError("judgment for test " + std::to_string(j.test_id) +
                          ": a fail or discounted verdict needs a rationale");
  }
}

// Sensitivity-analysis inputs. Declared here because bundles carry them; the
// arithmetic lives in confounding.hpp and effect_measures.hpp.

/// One binary omitted variable: its outcome relative risk and its prevalence
/// among exposed (p1) and unexposed (p0).
struct ConfounderSpec {
  double rr_confounder_outcome = 1.0;
  double prevalence_exposed = 0.0;
  double prevalence_unexposed = 0.0;
  bool operator==(const ConfounderSpec&) const = default;
};

inline void validate_confounder(const ConfounderSpec& c) {
  auto finite = [](double x) { return std::isfinite(x); };
  if (!finite(c.rr_confounder_outcome) || !(c.rr_confounder_outcome > 0.0)) {
    throw ValidationError("confounder: rr_confounder_outcome must be finite and > 0");
  }
  for (double p : {c.prevalence_exposed, c.prevalence_unexposed}) {
    if (!finite(p) || p < 0.0 || p > 1.0) {
      throw ValidationError("confounder: prevalences must lie in [0,1]");
    }
  }
}

struct DeclaredConfounder {
  std::string name;
  ConfounderSpec spec;
  bool operator==(const DeclaredConfounder&) const = default;
};

struct Interval {
  double low = 0.0;
  double high = 0.0;
  bool operator==(const Interval&) const = default;
};

struct SensitivityRange {
  Interval rr_confounder_outcome{1.0, 1.0};
  Interval prevalence_exposed{0.0, 0.0};
  Interval prevalence_unexposed{0.0, 0.0};
  bool operator==(const SensitivityRange&) const = default;
};

inline void validate_sensitivity_range(const SensitivityRange& r) {
  const std::pair<const char*, Interval> all[] = {
      {"rr_confounder_outcome", r.rr_confounder_outcome},
      {"prevalence_exposed", r.prevalence_exposed},
      {"prevalence_unexposed", r.prevalence_unexposed}};
  for (const auto& [name, iv] : all) {
    if (!std::isfinite(iv.low) || !std::isfinite(iv.high) || iv.low > iv.high) {
      throw ValidationError(std::string("sensitivity range '") + name +
                            "' must be finite with low <= high");
    }
  }
  if (!(r.rr_confounder_outcome.low > 0.0)) {
    throw ValidationError("sensitivity range 'rr_confounder_outcome' must be positive");
  }
  for (const auto& iv : {r.prevalence_exposed, r.prevalence_unexposed}) {
    if (iv.low < 0.0 || iv.high > 1.0) {
      throw ValidationError("sensitivity prevalence ranges must lie within [0,1]");
    }
  }
}

/// Exposure misclassification probabilities. With `differential`, the
/// (sensitivity, specificity) pair applies to cases and the noncase_* pair to
/// noncases; otherwise one pair applies to both rows.
struct MisclassificationSpec {
  double sensitivity = 1.0;
  double specificity = 1.0;
  bool differential = false;
  double noncase_sensitivity = 1.0;
  double noncase_specificity = 1.0;

  bool operator==(const MisclassificationSpec&) const = default;

  double case_se() const { return sensitivity; }
  double case_sp() const { return specificity; }
  double noncase_se() const { return differential ? noncase_sensitivity : sensitivity; }
  double noncase_sp() const { return differential ? noncase_specificity : specificity; }
};

inline void validate_misclassification(const MisclassificationSpec& m) {
  auto check_pair = [](double se, double sp, const char* row) {
    if (!(se > 0.0 && se <= 1.0) || !(sp > 0.0 && sp <= 1.0)) {
      throw ValidationError(std::string("misclassification (") + row +
                            "): sensitivity and specificity must lie in (0,1]");
    }
    if (!(se + sp > 1.0)) {
      throw ValidationError(std::string("misclassification (") + row +
                            "): sensitivity + specificity must exceed 1");
    }
  };
  check_pair(m.case_se(), m.case_sp(), "cases");
  check_pair(m.noncase_se(), m.noncase_sp(), "noncases");
}

/// Everything the checklist consumes.
struct EvidenceBundle {
  std::vector<StratifiedStudy> studies;
  std::vector<DoseSeries> dose_series;
  std::vector<QualitativeJudgment> judgments;
  std::optional<CausalChainSpec> chain;
  std::vector<DeclaredConfounder> confounders;
  std::optional<MisclassificationSpec> misclassification;
  std::optional<SensitivityRange> sensitivity_ranges;

  bool operator==(const EvidenceBundle&) const = default;
};

inline void validate_bundle(const EvidenceBundle& b) {
  if (b.studies.empty()) throw ValidationError("bundle has no studies");
  std::set<std::string> ids;
  for (const auto& s : b.studies) {
    if (!ids.insert(s.id).second) throw ValidationError("duplicate study id '" + s.id + "'");
    validate_study(s);
  }
  for (const auto& d : b.dose_series) validate_dose_series(d);
  std::set<int> judged;
  for (const auto& j : b.judgments) {
    validate_judgment(j);
    if (!judged.insert(j.test_id).second) {
      throw ValidationError("more than one judgment for test " + std::to_string(j.test_id));
    }
  }
  if (b.chain) validate_chain(*b.chain);
  for (const auto& c : b.confounders) validate_confounder(c.spec);
  if (b.misclassification) validate_misclassification(*b.misclassification);
  if (b.sensitivity_ranges) validate_sensitivity_range(*b.sensitivity_ranges);
}

}  // namespace causal

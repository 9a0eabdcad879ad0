#pragma once

// Ten-test causality checklist. Tests 1, 2, 3 and 10 are human judgments
// taken from the bundle; tests 4 to 9 are computed.
//
// Aggregation rule (this tool's construction, not a published standard):
// causation is supported only when no test fails, test 8 (significance)
// passes and test 5 (strength) passes or is discounted. NotAssessable does
// not block unless strict mode makes tests 6 and 7 mandatory.

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "causal/confounding.hpp"
#include "causal/effect_measures.hpp"
#include "causal/errors.hpp"
#include "causal/study_model.hpp"
#include "causal/synthesis.hpp"

namespace causal {

struct ChecklistConfig {
  double strength_threshold = 2.0;
  bool strict_lcl = false;
  double alpha = 0.05;
  double heterogeneity_alpha = 0.10;
  bool strict_mode = false;
  double confidence_level = kDefaultConfidence;
  /// Relevant population: when set, every study is reduced to the stratum
  /// with exactly this covariate profile.
  std::optional<CovariateProfile> profile;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    if (!(heterogeneity_alpha > 0.0 && heterogeneity_alpha < 1.0)) {
      throw ConfigError("heterogeneity_alpha must lie in (0,1)");
    }
    if (!(strength_threshold > 0.0) || !std::isfinite(strength_threshold)) {
      throw ConfigError("strength_threshold must be positive");
    }
    if (!(confidence_level > 0.0 && confidence_level < 1.0)) {
      throw ConfigError("confidence_level must lie in (0,1)");
    }
  }
};

inline constexpr std::array<const char*, 10> kTestNames = {
    "Existence of mechanism",   "Analogous relationships", "Temporality",
    "Validity of data",         "Strength of association", "Lack of confounders",
    "Consistency of association", "Statistical significance", "Dose-response relationship",
    "Validity of logic"};

struct TestOutcome {
  int test_id = 1;
  std::string name;
  Status status = Status::NotAssessable;
  std::map<std::string, double> metrics;
  std::string rationale;
};

enum class Overall { CausationSupported, CausationNotEstablished };

inline std::string_view to_string(Overall o) {
  return o == Overall::CausationSupported ? "causation_supported" : "causation_not_established";
}

/// The estimate tests 5, 6 and 8 are judged on.
struct PrimaryAnalysis {
  EffectEstimate estimate;
  double p_value = 1.0;
  std::string method;
  std::vector<StudyEstimate> study_estimates;
  std::vector<StratifiedStudy> studies;  ///< after relevant-population selection
};

struct ChecklistReport {
  std::vector<TestOutcome> outcomes;
  Overall overall = Overall::CausationNotEstablished;
  std::string narrative;
  PrimaryAnalysis primary;
};

struct VerdictResult {
  Overall overall = Overall::CausationNotEstablished;
  std::string narrative;
};

inline const TestOutcome& outcome_of(const std::vector<TestOutcome>& v, int id) { return v.at(id - 1); }

/// Aggregate ten outcomes. The narrative lists every test that did not pass
/// with its status and rationale.
inline VerdictResult overall_verdict(const std::vector<TestOutcome>& outcomes,
                                     const ChecklistConfig& cfg = {}) {
  if (outcomes.size() != 10) {
    throw ArityError("overall_verdict needs exactly 10 outcomes, got " + std::to_string(outcomes.size()));
  }
  for (int i = 0; i < 10; ++i) {
    const auto& o = outcomes[static_cast<std::size_t>(i)];
    if (o.test_id != i + 1) throw ArityError("outcomes must be ordered by test id 1..10");
    if (o.status == Status::Discounted && o.rationale.empty()) {
      throw ValidationError("test " + std::to_string(o.test_id) + " is discounted without a rationale");
    }
  }
  bool any_fail = false;
  for (const auto& o : outcomes) any_fail = any_fail || o.status == Status::Fail;
  const Status s5 = outcome_of(outcomes, 5).status;
  const Status s8 = outcome_of(outcomes, 8).status;
  bool supported = !any_fail && s8 == Status::Pass && (s5 == Status::Pass || s5 == Status::Discounted);
  if (cfg.strict_mode) {
    supported = supported && outcome_of(outcomes, 6).status != Status::NotAssessable &&
                outcome_of(outcomes, 7).status != Status::NotAssessable;
  }

  VerdictResult r;
  r.overall = supported ? Overall::CausationSupported : Overall::CausationNotEstablished;
  std::ostringstream n;
  n << (supported ? "Causation supported." : "Causation not established.");
  if (s8 != Status::Pass) {
    n << " Statistical significance (test 8) did not pass, so chance remains an explanation"
         " and the remaining tests cannot establish causation.";
  }
  for (const auto& o : outcomes) {
    if (o.status == Status::Pass) continue;
    n << " Test " << o.test_id << " (" << o.name << "): " << to_string(o.status);
    if (!o.rationale.empty()) n << "; " << o.rationale;
    n << ".";
  }
  n << " Rule applied: supported only if no test fails, test 8 passes and test 5 passes or is"
       " discounted"
    << (cfg.strict_mode ? ", with tests 6 and 7 mandatory (strict mode)" : "")
    << ". This aggregation rule is a construction of this tool.";
  r.narrative = n.str();
  return r;
}

namespace detail {

inline TestOutcome make_outcome(int id) {
  TestOutcome o;
  o.test_id = id;
  o.name = kTestNames[static_cast<std::size_t>(id - 1)];
  return o;
}

inline PrimaryAnalysis primary_analysis(const EvidenceBundle& b, const ChecklistConfig& cfg) {
  PrimaryAnalysis pa;
  for (const auto& s : b.studies) {
    if (!cfg.profile) {
      pa.studies.push_back(s);
      continue;
    }
    auto picked = select_relevant_stratum(s, *cfg.profile);
    if (auto* none = std::get_if<NoMatch>(&picked)) {
      std::string avail;
      for (const auto& p : none->available) avail += (avail.empty() ? "" : ", ") + describe(p);
      throw ValidationError("study '" + s.id + "' has no stratum matching " + describe(*cfg.profile) +
                            "; available: " + avail);
    }
    StratifiedStudy view = s;
    view.strata = {Stratum{*cfg.profile, std::get<TwoByTwoTable>(picked)}};
    pa.studies.push_back(std::move(view));
  }
  for (const auto& s : pa.studies) {
    pa.study_estimates.push_back(
        StudyEstimate::from(s.id, mantel_haenszel_pool(s, cfg.confidence_level)));
  }
  if (pa.studies.size() == 1) {
    const auto& s = pa.studies.front();
    pa.estimate = mantel_haenszel_pool(s, cfg.confidence_level);
    if (s.strata.size() == 1) {
      const auto test = association_test(s.strata.front().table);
      pa.p_value = test.p_value;
      pa.method = std::string(to_string(test.method));
    } else {
      pa.p_value = pa.estimate.p_value;
      pa.method = "mantel_haenszel_wald";
    }
  } else {
    const auto meta = meta_analyze(pa.study_estimates, cfg.confidence_level);
    pa.estimate = meta.pooled_fixed;
    pa.p_value = meta.pooled_fixed.p_value;
    pa.method = "fixed_effect_wald";
  }
  return pa;
}

inline std::string join_unique(const std::vector<std::string>& items) {
  std::set<std::string> seen;
  std::string out;
  for (const auto& s : items) {
    if (!seen.insert(s).second) continue;
    if (!out.empty()) out += "; ";
    out += s;
  }
  return out;
}

inline TestOutcome test_validity(const EvidenceBundle& b, const PrimaryAnalysis& pa) {
  auto o = make_outcome(4);
  std::vector<std::string> violations, warns;
  double tables = 0;
  auto check = [&](const TwoByTwoTable& t, const std::string& where) {
    ++tables;
    const auto r = validate_table(t);
    for (const auto& v : r.violations) violations.push_back(where + ": " + v);
    for (const auto& w : r.warnings) warns.push_back(w);
  };
  for (const auto& s : pa.studies)
    for (std::size_t i = 0; i < s.strata.size(); ++i) check(s.strata[i].table, s.id);
  for (const auto& d : b.dose_series)
    for (const auto& p : d.points) check(p.table, d.id);
  o.metrics["tables_checked"] = tables;
  o.metrics["violations"] = static_cast<double>(violations.size());
  o.metrics["warnings"] = static_cast<double>(warns.size());

  std::vector<std::string> misclass_notes;
  bool misclass_explains = false;
  if (b.misclassification) {
    for (const auto& s : pa.studies) {
      const auto crude = s.crude();
      const auto observed = design_estimate(crude);
      try {
        const auto adj = misclassification_adjust(crude, *b.misclassification);
        const auto corrected = crude.design == Design::Cohort ? adj.rr : adj.odds;
        if (corrected) {
          o.metrics["misclassification_corrected[" + s.id + "]"] = *corrected;
          if (observed.point > 1.0 && *corrected <= 1.0) {
            misclass_explains = true;
            misclass_notes.push_back("study '" + s.id +
                                     "': the stated misclassification could account for the whole"
                                     " raised risk (corrected " +
                                     std::string(to_string(observed.kind)) + " " +
                                     std::to_string(*corrected) + ")");
          }
        }
      } catch (const InfeasibleCorrection& e) {
        misclass_notes.push_back("study '" + s.id + "': misclassification what-if infeasible (" +
                                 e.what() + ")");
      }
    }
    o.metrics["misclassification_explains"] = misclass_explains ? 1.0 : 0.0;
  }

  if (!violations.empty()) {
    o.status = Status::Fail;
    o.rationale = join_unique(violations);
  } else if (misclass_explains) {
    o.status = Status::Fail;
    o.rationale = join_unique(misclass_notes);
  } else if (!warns.empty()) {
    o.status = Status::Discounted;
    o.rationale = join_unique(warns);
    if (!misclass_notes.empty()) o.rationale += "; " + join_unique(misclass_notes);
  } else {
    o.status = Status::Pass;
    o.rationale = join_unique(misclass_notes);
  }
  return o;
}

inline TestOutcome test_strength(const PrimaryAnalysis& pa, const ChecklistConfig& cfg) {
  auto o = make_outcome(5);
  const auto& e = pa.estimate;
  o.metrics["point"] = e.point;
  o.metrics["lcl"] = e.lcl;
  o.metrics["ucl"] = e.ucl;
  o.metrics["threshold"] = cfg.strength_threshold;
  const double judged = cfg.strict_lcl ? e.lcl : e.point;
  const char* which = cfg.strict_lcl ? "lower confidence limit" : "point estimate";
  std::ostringstream r;
  r << to_string(e.kind) << " " << which << " " << judged
    << (judged >= cfg.strength_threshold ? " >= " : " < ") << "threshold " << cfg.strength_threshold;
  o.status = judged >= cfg.strength_threshold ? Status::Pass : Status::Fail;
  o.rationale = r.str();
  return o;
}

inline TestOutcome test_confounders(const EvidenceBundle& b, const PrimaryAnalysis& pa) {
  auto o = make_outcome(6);
  const double rr = pa.estimate.point;
  if (b.confounders.empty()) {
    o.status = Status::NotAssessable;
    o.rationale = "no candidate confounders declared";
    return o;
  }
  if (!(rr > 1.0)) {
    o.status = Status::NotAssessable;
    o.rationale = "observed estimate does not exceed 1, so there is no association to explain away";
    return o;
  }
  const auto req = cornfield_requirements(rr);
  o.metrics["min_rr_confounder"] = req.min_rr_confounder;
  o.metrics["min_prevalence_ratio"] = req.min_prevalence_ratio;
  std::vector<std::string> explainers;
  for (const auto& c : b.confounders) {
    const auto adj = bias_adjust(rr, c.spec);
    o.metrics["bias_factor[" + c.name + "]"] = adj.bias_factor;
    o.metrics["rr_adjusted[" + c.name + "]"] = adj.rr_adjusted;
    if (cornfield_can_explain(rr, c.spec)) explainers.push_back(c.name);
  }
  if (explainers.empty()) {
    o.status = Status::Pass;
    o.rationale = "no declared confounder meets the Cornfield requirements (outcome RR and prevalence"
                  " ratio both above the observed estimate)";
  } else {
    o.status = Status::Fail;
    std::string names;
    for (const auto& n : explainers) names += (names.empty() ? "" : ", ") + n;
    o.rationale = "confounder(s) meeting the Cornfield requirements could fully explain the"
                  " association: " + names;
  }
  return o;
}

inline TestOutcome test_consistency(const PrimaryAnalysis& pa, const ChecklistConfig& cfg) {
  auto o = make_outcome(7);
  if (pa.study_estimates.size() < 2) {
    o.status = Status::NotAssessable;
    o.rationale = "only one study; an association observed once cannot show repeatability";
    return o;
  }
  const auto ev = consistency_verdict(pa.study_estimates, {cfg.heterogeneity_alpha, cfg.confidence_level});
  o.metrics["q"] = ev.meta.q;
  o.metrics["q_df"] = ev.meta.q_df;
  o.metrics["q_p"] = ev.q_p;
  o.metrics["i_squared"] = ev.meta.i_squared;
  o.metrics["tau_squared"] = ev.meta.tau_squared;
  o.metrics["overlap_fraction"] = ev.overlap_fraction;
  o.metrics["heterogeneity_alpha"] = cfg.heterogeneity_alpha;
  switch (ev.status) {
    case ConsistencyStatus::Pass:
      o.status = Status::Pass;
      o.rationale = "no significant heterogeneity and the pooled interval lies above 1";
      break;
    case ConsistencyStatus::Fail:
      o.status = Status::Fail;
      o.rationale = "significant heterogeneity with study estimates on both sides of 1";
      break;
    case ConsistencyStatus::Indeterminate:
      o.status = Status::Discounted;
      o.rationale = "consistency unresolved: heterogeneity without contradictory directions, or a"
                    " pooled interval that reaches 1";
      break;
  }
  return o;
}

inline TestOutcome test_significance(const PrimaryAnalysis& pa, const ChecklistConfig& cfg) {
  auto o = make_outcome(8);
  o.metrics["p"] = pa.p_value;
  o.metrics["alpha"] = cfg.alpha;
  o.status = pa.p_value < cfg.alpha ? Status::Pass : Status::Fail;
  std::ostringstream r;
  r << pa.method << " p = " << pa.p_value << (pa.p_value < cfg.alpha ? " < " : " >= ") << "alpha "
    << cfg.alpha;
  if (o.status == Status::Fail) r << "; the association could be due to chance fluctuation";
  o.rationale = r.str();
  return o;
}

inline TestOutcome test_dose_response(const EvidenceBundle& b, const ChecklistConfig& cfg) {
  auto o = make_outcome(9);
  if (b.dose_series.empty()) {
    o.status = Status::NotAssessable;
    o.rationale = "no dose series supplied";
    return o;
  }
  std::vector<std::string> problems;
  for (const auto& s : b.dose_series) {
    if (s.points.size() < 2) {
      problems.push_back("series '" + s.id + "' has fewer than 2 dose points");
      continue;
    }
    try {
      const auto trend = dose_trend(s);
      o.metrics["trend_p[" + s.id + "]"] = trend.trend_p;
      o.metrics["monotone[" + s.id + "]"] = trend.monotone_nondecreasing ? 1.0 : 0.0;
      const auto fit = fit_doll_peto(s);
      o.metrics["doll_peto_z[" + s.id + "]"] = fit.z;
      if (!(trend.trend_p < cfg.alpha)) {
        problems.push_back("series '" + s.id + "' shows no significant increasing trend");
      }
      if (!trend.monotone_nondecreasing) {
        problems.push_back("series '" + s.id + "' risks are not non-decreasing in dose");
      }
    } catch (const DegenerateError& e) {
      problems.push_back("series '" + s.id + "': " + e.what());
    }
  }
  if (problems.empty()) {
    o.status = Status::Pass;
    o.rationale = "significant monotone increase in risk with dose";
  } else {
    o.status = Status::Discounted;
    o.rationale = join_unique(problems) +
                  "; a threshold effect or an unmodelled duration gradient may explain the pattern";
  }
  return o;
}

}  // namespace detail

inline ChecklistReport run_checklist(const EvidenceBundle& bundle, const ChecklistConfig& cfg = {}) {
  cfg.validate();
  validate_bundle(bundle);
  ChecklistReport rep;
  rep.primary = detail::primary_analysis(bundle, cfg);
  rep.outcomes.reserve(10);
  for (int id = 1; id <= 10; ++id) rep.outcomes.push_back(detail::make_outcome(id));
  for (const auto& j : bundle.judgments) {
    auto& o = rep.outcomes[static_cast<std::size_t>(j.test_id - 1)];
    o.status = j.verdict;
    o.rationale = j.rationale;
  }
  for (int id : {1, 2, 3, 10}) {
    auto& o = rep.outcomes[static_cast<std::size_t>(id - 1)];
    if (o.status == Status::NotAssessable && o.rationale.empty()) o.rationale = "no judgment supplied";
  }
  rep.outcomes[3] = detail::test_validity(bundle, rep.primary);
  rep.outcomes[4] = detail::test_strength(rep.primary, cfg);
  rep.outcomes[5] = detail::test_confounders(bundle, rep.primary);
  rep.outcomes[6] = detail::test_consistency(rep.primary, cfg);
  rep.outcomes[7] = detail::test_significance(rep.primary, cfg);
  rep.outcomes[8] = detail::test_dose_response(bundle, cfg);
  const auto verdict = overall_verdict(rep.outcomes, cfg);
  rep.overall = verdict.overall;
  rep.narrative = verdict.narrative;
  return rep;
}

}  // namespace causal

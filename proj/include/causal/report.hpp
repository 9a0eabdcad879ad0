#pragma once

// Report assembly and rendering. The JSON report (schema "cl-report/1") is
// the single source of truth: keys are sorted, every verdict carries the rule
// and configured thresholds that produced it, and the human rendering is
// derived from the JSON rather than recomputed.

#include <cstdint>
#include <cstdio>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "causal/checklist.hpp"
#include "causal/confounding.hpp"
#include "causal/effect_measures.hpp"
#include "causal/legal.hpp"
#include "causal/sim_oracle.hpp"
#include "causal/study_io.hpp"
#include "causal/synthesis.hpp"
#include "causal/warnings.hpp"

namespace causal::report {

inline constexpr std::string_view kSchemaVersion = "cl-report/1";

/// FNV-1a 64-bit digest of raw input bytes, as "fnv1a64:<16 hex digits>".
inline std::string digest(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + buf;
}

/// Checklist, legal and sensitivity settings in one file.
struct EngineConfig {
  ChecklistConfig checklist;
  LegalConfig legal;
  double sensitivity_threshold = 2.0;

  void validate() const {
    checklist.validate();
    legal.validate();
    if (!(sensitivity_threshold > 0.0)) throw ConfigError("sensitivity_threshold must be positive");
  }
};

/// Config file keys: confidence_level, strength_threshold, strict_lcl, alpha,
/// heterogeneity_alpha, strict_mode, profile, rr_threshold, use_lcl,
/// material_fraction_floor, evidentiary_gap, sensitivity_threshold. All
/// optional; alpha is shared by the checklist and the legal rules.
inline EngineConfig parse_config(const Json& j) {
  using detail::Reader;
  Reader::require_object(j, "config");
  Reader::reject_unknown(j, "config",
                         {"confidence_level", "strength_threshold", "strict_lcl", "alpha",
                          "heterogeneity_alpha", "strict_mode", "profile", "rr_threshold", "use_lcl",
                          "material_fraction_floor", "evidentiary_gap", "sensitivity_threshold"});
  EngineConfig c;
  auto num = [&](const char* key, double& out) {
    if (auto it = j.find(key); it != j.end()) out = Reader::number_at(*it, std::string("config/") + key);
  };
  auto flag = [&](const char* key, bool& out) {
    if (auto it = j.find(key); it != j.end()) out = Reader::bool_at(*it, std::string("config/") + key);
  };
  num("confidence_level", c.checklist.confidence_level);
  num("strength_threshold", c.checklist.strength_threshold);
  flag("strict_lcl", c.checklist.strict_lcl);
  num("alpha", c.checklist.alpha);
  c.legal.alpha = c.checklist.alpha;
  num("heterogeneity_alpha", c.checklist.heterogeneity_alpha);
  flag("strict_mode", c.checklist.strict_mode);
  num("rr_threshold", c.legal.rr_threshold);
  flag("use_lcl", c.legal.use_lcl);
  num("material_fraction_floor", c.legal.material_fraction_floor);
  flag("evidentiary_gap", c.legal.evidentiary_gap);
  num("sensitivity_threshold", c.sensitivity_threshold);
  if (auto it = j.find("profile"); it != j.end()) {
    Reader::require_object(*it, "config/profile");
    CovariateProfile p;
    for (const auto& [k, v] : it->items()) p[k] = Reader::string_at(v, "config/profile/" + k);
    c.checklist.profile = p;
  }
  c.validate();
  return c;
}

inline Json config_json(const EngineConfig& c) {
  Json j{{"confidence_level", c.checklist.confidence_level},
         {"strength_threshold", c.checklist.strength_threshold},
         {"strict_lcl", c.checklist.strict_lcl},
         {"alpha", c.checklist.alpha},
         {"heterogeneity_alpha", c.checklist.heterogeneity_alpha},
         {"strict_mode", c.checklist.strict_mode},
         {"rr_threshold", c.legal.rr_threshold},
         {"use_lcl", c.legal.use_lcl},
         {"material_fraction_floor", c.legal.material_fraction_floor},
         {"evidentiary_gap", c.legal.evidentiary_gap},
         {"sensitivity_threshold", c.sensitivity_threshold}};
  j["profile"] = c.checklist.profile ? Json(*c.checklist.profile) : Json(nullptr);
  return j;
}

/// Accumulates the report body and its warnings.
class Builder {
 public:
  Builder(std::string command, std::string inputs_digest, const EngineConfig& cfg)
      : cfg_(cfg) {
    root_["schema_version"] = std::string(kSchemaVersion);
    root_["command"] = std::move(command);
    root_["inputs_digest"] = std::move(inputs_digest);
    root_["config"] = config_json(cfg);
    root_["summary"] = Json::array();
  }

  Json& section(const char* name) {
    if (!root_.contains(name)) root_[name] = Json::object();
    return root_[name];
  }

  void warn(std::string_view w) {
    if (seen_.insert(std::string(w)).second) warnings_.emplace_back(w);
  }
  void summary(std::string line) { root_["summary"].push_back(std::move(line)); }
  const EngineConfig& config() const { return cfg_; }

  Json finish() {
    root_["warnings"] = warnings_;
    return root_;
  }

 private:
  Json root_ = Json::object();
  EngineConfig cfg_;
  std::vector<std::string> warnings_;
  std::set<std::string> seen_;
};

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

inline Json estimate_json(const EffectEstimate& e, std::string rule) {
  return Json{{"kind", std::string(to_string(e.kind))},
              {"point", e.point},
              {"lcl", e.lcl},
              {"ucl", e.ucl},
              {"se", e.se},
              {"confidence_level", e.confidence_level},
              {"p_value", e.p_value},
              {"corrected", e.corrected},
              {"rule", std::move(rule)}};
}

inline std::string ratio_rule(const EffectEstimate& e) {
  std::string r = e.kind == Measure::RR ? "risk ratio a(c+d)/(c(a+b)), Wald CI on log scale"
                                        : "cross-product ratio ad/(bc), Wald CI on log scale";
  if (e.corrected) r += ", 0.5 added to every cell";
  return r;
}

inline Json table_json(const TwoByTwoTable& t) { return table_to_json(t); }

inline Json outcome_json(const TestOutcome& o) {
  return Json{{"test", o.test_id},
              {"name", o.name},
              {"status", std::string(to_string(o.status))},
              {"metrics", o.metrics},
              {"rationale", o.rationale}};
}

inline void note_table_warnings(Builder& b, const TwoByTwoTable& t) {
  for (const auto& w : validate_table(t).warnings) b.warn(w);
}

inline Json pde_json(Builder& b, const EffectEstimate& e) {
  b.warn(warnings::kPdeAcceleration);
  if (e.kind == Measure::OR) b.warn(warnings::kRareOutcomeOddsRatio);
  return Json{{"value", pde(e.point)},
              {"rule", "(RR-1)/RR of the " + std::string(to_string(e.kind)) + " point estimate"}};
}

// measure ------------------------------------------------------------------

inline void add_measure(Builder& b, const EvidenceBundle& bundle) {
  const double level = b.config().checklist.confidence_level;
  Json studies = Json::array();
  Json confounding = Json::array();
  for (const auto& s : bundle.studies) {
    Json strata = Json::array();
    for (const auto& st : s.strata) {
      const auto& t = st.table;
      note_table_warnings(b, t);
      const auto v = validate_table(t);
      const auto est = design_estimate(t, level);
      const auto test = association_test(t);
      Json js{{"profile", st.profile},
              {"table", table_json(t)},
              {"validation", {{"violations", v.violations}, {"warnings", v.warnings}}},
              {"estimate", estimate_json(est, ratio_rule(est))},
              {"association_test",
               {{"method", std::string(to_string(test.method))},
                {"statistic", test.statistic},
                {"p_value", test.p_value},
                {"rule", "Pearson chi-square (1 df, no Yates) when every expected count >= 5,"
                         " otherwise two-sided Fisher exact (tables no more probable than observed)"}}},
              {"pde", pde_json(b, est)}};
      if (t.design == Design::Cohort) {
        const auto orr = odds_ratio(t, level);
        js["odds_ratio"] = estimate_json(orr, ratio_rule(orr));
        js["excess_risk"] = estimate_json(excess_risk(t, level),
                                          "a/(a+b) - c/(c+d), Wald CI from binomial variances");
      }
      if (est.corrected) b.warn(warnings::kZeroCellCorrection);
      strata.push_back(std::move(js));
    }
    studies.push_back({{"id", s.id}, {"design", std::string(to_string(s.strata.front().table.design))},
                       {"strata", std::move(strata)}});

    const auto pooled = mantel_haenszel_pool(s, level);
    Json jc{{"id", s.id},
            {"mantel_haenszel",
             estimate_json(pooled, s.strata.size() == 1
                                       ? "single stratum: crude estimate"
                                       : "Mantel-Haenszel pooled, Greenland-Robins / RBG log variance")}};
    if (s.strata.size() >= 2) {
      const auto sim = detect_simpson(s, level);
      Json per = Json::array();
      for (const auto& e : sim.per_stratum) per.push_back(e.point);
      jc["simpson"] = {{"crude", estimate_json(sim.crude, ratio_rule(sim.crude))},
                       {"per_stratum_points", per},
                       {"reversal", sim.reversal},
                       {"rule", "reversal iff crude is off 1 and every stratum lies strictly on the"
                                " other side of 1"}};
      if (sim.reversal) b.summary("study " + s.id + ": Simpson reversal detected");
    }
    b.summary("study " + s.id + ": " + std::string(to_string(pooled.kind)) + " " + fmt(pooled.point) +
              " (" + fmt(pooled.confidence_level * 100) + "% CI " + fmt(pooled.lcl) + " to " +
              fmt(pooled.ucl) + "), PDE " + fmt(pde(pooled.point)));
    confounding.push_back(std::move(jc));
  }
  b.section("effect")["studies"] = std::move(studies);
  b.section("confounding")["studies"] = std::move(confounding);
}

// meta ---------------------------------------------------------------------

inline Json meta_json(const MetaResult& m) {
  return Json{{"fixed", estimate_json(m.pooled_fixed, "inverse-variance fixed effect on log scale")},
              {"random", estimate_json(m.pooled_random, "DerSimonian-Laird random effects, tau^2 clipped at 0")},
              {"q", m.q},
              {"q_df", m.q_df},
              {"q_p", m.q_p},
              {"i_squared", m.i_squared},
              {"tau_squared", m.tau_squared}};
}

inline std::vector<StudyEstimate> study_estimates(const EvidenceBundle& bundle, double level) {
  std::vector<StudyEstimate> out;
  for (const auto& s : bundle.studies) {
    out.push_back(StudyEstimate::from(s.id, mantel_haenszel_pool(s, level)));
  }
  return out;
}

inline void add_meta(Builder& b, const EvidenceBundle& bundle) {
  const auto& cc = b.config().checklist;
  const auto ests = study_estimates(bundle, cc.confidence_level);
  Json js = Json::array();
  for (const auto& e : ests) js.push_back({{"id", e.study_id}, {"log_rr", e.log_rr}, {"se", e.se}});
  const auto ev = consistency_verdict(ests, {cc.heterogeneity_alpha, cc.confidence_level});
  auto& syn = b.section("synthesis");
  syn["studies"] = std::move(js);
  syn["meta"] = meta_json(ev.meta);
  syn["consistency"] = {{"status", std::string(to_string(ev.status))},
                        {"q_p", ev.q_p},
                        {"overlap_fraction", ev.overlap_fraction},
                        {"heterogeneity_alpha", cc.heterogeneity_alpha},
                        {"rule", "pass iff Q-test p >= heterogeneity_alpha and the fixed-effect CI lies"
                                 " above 1; fail iff Q-test p < heterogeneity_alpha with estimates on"
                                 " both sides of 1; otherwise indeterminate"}};
  b.summary("fixed-effect pooled RR " + fmt(ev.meta.pooled_fixed.point) + ", random-effects " +
            fmt(ev.meta.pooled_random.point) + ", Q " + fmt(ev.meta.q) + " (p " + fmt(ev.q_p) +
            "), I^2 " + fmt(ev.meta.i_squared) + ", consistency " + std::string(to_string(ev.status)) +
            " at heterogeneity alpha " + fmt(cc.heterogeneity_alpha));
}

// dose ---------------------------------------------------------------------

inline void add_dose(Builder& b, const EvidenceBundle& bundle) {
  if (bundle.dose_series.empty()) throw ValidationError("study file has no dose_series");
  b.warn(warnings::kDoseIntensityOnly);
  Json arr = Json::array();
  for (const auto& s : bundle.dose_series) {
    const auto trend = dose_trend(s);
    const auto fit = fit_doll_peto(s);
    Json points = Json::array();
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      const auto& p = s.points[i];
      note_table_warnings(b, p.table);
      const auto rr = relative_risk(p.table, b.config().checklist.confidence_level);
      points.push_back({{"dose", p.dose},
                        {"table", table_json(p.table)},
                        {"rr", estimate_json(rr, ratio_rule(rr))},
                        {"fitted_rr", fit.fitted_rr[i]}});
    }
    arr.push_back({{"id", s.id},
                   {"units", s.units},
                   {"points", std::move(points)},
                   {"trend",
                    {{"u", trend.statistic.u},
                     {"variance", trend.statistic.variance},
                     {"z", trend.statistic.z},
                     {"p_value", trend.trend_p},
                     {"monotone_nondecreasing", trend.monotone_nondecreasing},
                     {"rule", "Cochran-Armitage score test, raw doses as scores, referent scored 0,"
                              " one-sided increasing alternative"}}},
                   {"doll_peto",
                    {{"z", fit.z},
                     {"residual_sse", fit.residual_sse},
                     {"rule", "RR(x) = (1+x)^z by inverse-variance weighted least squares of log RR"
                              " on log(1+x) through the origin"}}}});
    b.summary("dose series " + s.id + ": trend p " + fmt(trend.trend_p) +
              (trend.monotone_nondecreasing ? ", monotone" : ", not monotone") + ", Doll-Peto z " +
              fmt(fit.z));
  }
  b.section("synthesis")["dose_series"] = std::move(arr);
}

// checklist / legal --------------------------------------------------------

inline ChecklistReport add_checklist(Builder& b, const EvidenceBundle& bundle) {
  const auto rep = run_checklist(bundle, b.config().checklist);
  for (const auto& s : rep.primary.studies)
    for (const auto& st : s.strata) note_table_warnings(b, st.table);
  if (rep.primary.estimate.corrected) b.warn(warnings::kZeroCellCorrection);
  Json outcomes = Json::array();
  for (const auto& o : rep.outcomes) outcomes.push_back(outcome_json(o));
  const auto& e = rep.primary.estimate;
  b.section("checklist") = {
      {"outcomes", std::move(outcomes)},
      {"overall", std::string(to_string(rep.overall))},
      {"narrative", rep.narrative},
      {"primary",
       {{"estimate", estimate_json(e, rep.primary.studies.size() == 1
                                          ? "single study: crude or Mantel-Haenszel estimate"
                                          : "fixed-effect pooled estimate across studies")},
        {"p_value", rep.primary.p_value},
        {"method", rep.primary.method}}}};
  b.summary("checklist: " + std::string(to_string(rep.overall)) + " (strength threshold " +
            fmt(b.config().checklist.strength_threshold) + ", alpha " + fmt(b.config().checklist.alpha) +
            ")");
  for (const auto& o : rep.outcomes) {
    b.summary("  test " + std::to_string(o.test_id) + " " + o.name + ": " + std::string(to_string(o.status)) +
              (o.rationale.empty() ? "" : " - " + o.rationale));
  }
  return rep;
}

inline void add_legal(Builder& b, const EvidenceBundle& bundle) {
  const auto rep = add_checklist(b, bundle);
  const auto& lc = b.config().legal;
  const auto& e = rep.primary.estimate;
  const auto gc = general_causation(rep, e);
  const auto bf = but_for_verdict(e, lc);
  const double fraction = e.point > 1.0 ? assigned_share(e.point) : 0.0;
  auto judged = e;
  judged.p_value = rep.primary.p_value;  // same test the checklist's significance step used
  const auto mc = material_contribution_verdict(judged, fraction, lc);
  for (const auto& n : bf.notes) b.warn(n);
  b.warn(warnings::kForeseeabilityOutOfScope);
  if (lc.evidentiary_gap) b.warn(warnings::kEvidentiaryGapApportionment);

  auto& legal = b.section("legal");
  legal["general_causation"] = {{"verdict", std::string(to_string(gc.verdict))},
                                {"basis", gc.basis},
                                {"rule", "established iff the checklist supports causation"}};
  legal["but_for"] = {{"verdict", std::string(to_string(bf.verdict))},
                      {"judged_value", bf.judged_value},
                      {"pde", bf.pde},
                      {"threshold", lc.rr_threshold},
                      {"use_lcl", lc.use_lcl},
                      {"rule", bf.rule}};
  legal["material_contribution"] = {{"verdict", std::string(to_string(mc.verdict))},
                                    {"fraction", fraction},
                                    {"fraction_rule", "assigned share (RR-1)/RR of the primary estimate, 0 when RR <= 1"},
                                    {"floor", lc.material_fraction_floor},
                                    {"alpha", lc.alpha},
                                    {"evidentiary_gap", lc.evidentiary_gap},
                                    {"rule", mc.rule}};
  if (bundle.chain) legal["chain"] = to_json(bundle)["chain"];
  b.summary("general causation: " + std::string(to_string(gc.verdict)));
  b.summary("but-for: " + std::string(to_string(bf.verdict)) + " (" + bf.rule + ")");
  b.summary("material contribution: " + std::string(to_string(mc.verdict)) + " (" + mc.rule + ")");
}

inline void add_apportionment(Builder& b, const ApportionmentResult& r) {
  b.section("legal")["apportionment"] = {
      {"scheme", std::string(to_string(r.scheme))},
      {"units", r.units},
      {"total_units", r.total_units},
      {"involved_fraction", r.involved_fraction},
      {"rule", r.scheme == ApportionScheme::PaperExcessUnits
                   ? "units RRa-1, RRs-1, RRas-1; each exposure involved in its own unit plus the"
                     " interaction unit, over the sum of all units"
                   : "units RRa-1, RRs-1, RRas-RRa-RRs+1 summing to RRas-1; each exposure involved in"
                     " its own unit plus the interaction unit"}};
  std::string units, fractions;
  for (const auto& [k, v] : r.units) units += (units.empty() ? "" : ", ") + k + " " + fmt(v);
  for (const auto& [k, v] : r.involved_fraction) {
    fractions += (fractions.empty() ? "" : ", ") + k + " " + fmt(v);
    const double num = v * r.total_units;
    if (std::floor(r.total_units) == r.total_units && std::fabs(num - std::round(num)) < 1e-9) {
      fractions += " (" + fmt(std::round(num)) + "/" + fmt(r.total_units) + ")";
    }
  }
  b.summary("apportionment [" + std::string(to_string(r.scheme)) + "]: units " + units + "; total " +
            fmt(r.total_units) + "; involved fractions " + fractions);
}

inline TaxiScenario parse_taxi(const Json& j) {
  using detail::Reader;
  Reader::require_object(j, "");
  Reader::reject_unknown(j, "", {"companies"});
  const auto& arr = Reader::array_at(Reader::field(j, "", "companies"), "/companies");
  TaxiScenario s;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = "/companies/" + std::to_string(i);
    Reader::require_object(arr[i], p);
    Reader::reject_unknown(arr[i], p, {"label", "fleet_size", "negligence_rate", "exposure_rate"});
    TaxiCompany c;
    c.label = Reader::string_at(Reader::field(arr[i], p, "label"), p + "/label");
    c.fleet_size = Reader::integer_at(Reader::field(arr[i], p, "fleet_size"), p + "/fleet_size");
    if (auto it = arr[i].find("negligence_rate"); it != arr[i].end()) {
      c.negligence_rate = Reader::number_at(*it, p + "/negligence_rate");
    }
    if (auto it = arr[i].find("exposure_rate"); it != arr[i].end()) {
      c.exposure_rate = Reader::number_at(*it, p + "/exposure_rate");
    }
    s.companies.push_back(std::move(c));
  }
  return s;
}

inline void add_taxi(Builder& b, const TaxiScenario& s) {
  const auto r = taxi_posterior(s);
  if (r.bare_statistics) b.warn(warnings::kBareStatistics);
  Json assumptions = Json::array();
  if (r.equal_negligence) assumptions.push_back("(a) equal probability of negligent action per vehicle");
  if (r.equal_exposure) assumptions.push_back("(b) equal probability of exposure per vehicle");
  b.section("legal")["taxi"] = {
      {"posterior", r.posterior},
      {"balance_verdict", r.balance_verdict ? Json(*r.balance_verdict) : Json(nullptr)},
      {"assumptions_encoded", assumptions},
      {"bare_statistics", r.bare_statistics},
      {"rule", "posterior proportional to fleet size x negligence rate x exposure rate; balance of"
               " probabilities requires posterior > 0.5"}};
  std::string line = "taxi posterior:";
  for (const auto& [k, v] : r.posterior) line += " " + k + " " + fmt(v);
  line += r.balance_verdict ? "; more probable than not: " + *r.balance_verdict
                            : "; no company exceeds 0.5";
  b.summary(line);
}

// sensitivity --------------------------------------------------------------

inline void add_sensitivity(Builder& b, const EvidenceBundle& bundle, std::uint64_t seed,
                            std::uint64_t draws, unsigned threads) {
  if (!bundle.sensitivity_ranges) throw ValidationError("study file has no sensitivity_ranges");
  const auto pa = detail::primary_analysis(bundle, b.config().checklist);
  const double rr = pa.estimate.point;
  SensitivityOptions opt{draws, seed, b.config().sensitivity_threshold, threads};
  const auto sum = mc_sensitivity(rr, *bundle.sensitivity_ranges, opt);
  const auto& rg = *bundle.sensitivity_ranges;
  auto iv = [](const Interval& i) { return Json::array({i.low, i.high}); };
  Json quantiles = Json::object();
  static constexpr const char* kNames[] = {"q025", "q250", "q500", "q750", "q975"};
  for (std::size_t i = 0; i < sum.quantiles.size(); ++i) quantiles[kNames[i]] = sum.quantiles[i];
  Json declared = Json::array();
  for (const auto& c : bundle.confounders) {
    const auto adj = bias_adjust(rr, c.spec);
    Json jd{{"name", c.name},
            {"bias_factor", adj.bias_factor},
            {"rr_adjusted", adj.rr_adjusted},
            {"direction", std::string(to_string(adj.direction))}};
    if (rr > 1.0) jd["meets_cornfield_requirements"] = cornfield_can_explain(rr, c.spec);
    declared.push_back(std::move(jd));
  }
  b.section("confounding")["sensitivity"] = {
      {"rr_observed", rr},
      {"ranges",
       {{"rr_confounder_outcome", iv(rg.rr_confounder_outcome)},
        {"prevalence_exposed", iv(rg.prevalence_exposed)},
        {"prevalence_unexposed", iv(rg.prevalence_unexposed)}}},
      {"draws", sum.draws},
      {"seed", sum.seed},
      {"threshold", sum.threshold},
      {"quantiles", quantiles},
      {"fraction_above_threshold", sum.fraction_above_threshold},
      {"declared_confounders", declared},
      {"rule", "independent uniform draws per parameter, substream per (seed, draw); adjusted RR ="
               " observed / ((p1(RRc-1)+1)/(p0(RRc-1)+1)); type-7 quantiles"}};
  b.summary("sensitivity: observed " + fmt(rr) + ", adjusted median " + fmt(sum.quantiles[2]) +
            " (95% range " + fmt(sum.quantiles[0]) + " to " + fmt(sum.quantiles[4]) + "), " +
            fmt(sum.fraction_above_threshold * 100) + "% of draws above " + fmt(sum.threshold));
}

// simulate -----------------------------------------------------------------

struct SimulationRequest {
  sim::ConfoundedTruth truth;
  sim::Mode mode = sim::Mode::Random;
};

inline SimulationRequest parse_truth(const Json& j) {
  using detail::Reader;
  Reader::require_object(j, "");
  Reader::reject_unknown(j, "", {"n_exposed", "n_unexposed", "baseline_risk", "true_rr", "confounder",
                                 "interaction_rr", "misclassification", "mode"});
  SimulationRequest r;
  auto& c = r.truth.cohort;
  c.n_exposed = Reader::integer_at(Reader::field(j, "", "n_exposed"), "/n_exposed");
  c.n_unexposed = Reader::integer_at(Reader::field(j, "", "n_unexposed"), "/n_unexposed");
  c.baseline_risk = Reader::number_at(Reader::field(j, "", "baseline_risk"), "/baseline_risk");
  c.true_rr = Reader::number_at(Reader::field(j, "", "true_rr"), "/true_rr");
  if (auto it = j.find("confounder"); it != j.end()) {
    Reader::require_object(*it, "/confounder");
    Reader::reject_unknown(*it, "/confounder",
                           {"rr_confounder_outcome", "prevalence_exposed", "prevalence_unexposed"});
    ConfounderSpec s;
    s.rr_confounder_outcome = Reader::number_at(Reader::field(*it, "/confounder", "rr_confounder_outcome"),
                                                "/confounder/rr_confounder_outcome");
    s.prevalence_exposed = Reader::number_at(Reader::field(*it, "/confounder", "prevalence_exposed"),
                                             "/confounder/prevalence_exposed");
    s.prevalence_unexposed = Reader::number_at(Reader::field(*it, "/confounder", "prevalence_unexposed"),
                                               "/confounder/prevalence_unexposed");
    validate_confounder(s);
    r.truth.confounder = s;
  }
  if (auto it = j.find("interaction_rr"); it != j.end()) {
    r.truth.interaction_rr = Reader::number_at(*it, "/interaction_rr");
  }
  if (auto it = j.find("misclassification"); it != j.end()) {
    // Same shape as the study-file block.
    const Json wrapper = {{"studies", Json::array({{{"id", "x"},
                                                    {"design", "cohort"},
                                                    {"strata", Json::array({{{"profile", Json::object()},
                                                                             {"table", {{"a", 1}, {"b", 1}, {"c", 1}, {"d", 1}}}}})}}})},
                          {"misclassification", *it}};
    r.truth.misclassification = parse_study_json(wrapper).misclassification;
  }
  if (auto it = j.find("mode"); it != j.end()) {
    const auto m = Reader::string_at(*it, "/mode");
    if (m == "random") {
      r.mode = sim::Mode::Random;
    } else if (m == "expected") {
      r.mode = sim::Mode::Expected;
    } else {
      throw SchemaError("/mode: must be random or expected");
    }
  }
  return r;
}

inline Json add_simulation(Builder& b, SimulationRequest req, std::uint64_t seed) {
  req.truth.cohort.seed = seed;
  const auto sample = sim::simulate_confounded_cohort(req.truth, req.mode);
  EvidenceBundle bundle;
  bundle.studies.push_back(sample.study);
  const Json study_file = to_json(bundle);
  const auto& t = req.truth.cohort;
  Json truth{{"n_exposed", t.n_exposed},
             {"n_unexposed", t.n_unexposed},
             {"baseline_risk", t.baseline_risk},
             {"true_rr", t.true_rr},
             {"seed", seed},
             {"mode", req.mode == sim::Mode::Random ? "random" : "expected"}};
  if (req.truth.confounder) {
    truth["confounder"] = {{"rr_confounder_outcome", req.truth.confounder->rr_confounder_outcome},
                           {"prevalence_exposed", req.truth.confounder->prevalence_exposed},
                           {"prevalence_unexposed", req.truth.confounder->prevalence_unexposed}};
  }
  if (req.truth.interaction_rr) truth["interaction_rr"] = *req.truth.interaction_rr;
  const auto crude = design_estimate(sample.crude);
  b.section("simulation") = {
      {"truth", truth},
      {"crude_table", table_json(sample.crude)},
      {"crude_rr", crude.point},
      {"study_file", study_file},
      {"rule", "binomial draws from substreams of the seed (random) or expected counts rounded half to"
               " even (expected)"}};
  b.summary("simulated crude table a=" + std::to_string(sample.crude.a) + " b=" +
            std::to_string(sample.crude.b) + " c=" + std::to_string(sample.crude.c) + " d=" +
            std::to_string(sample.crude.d) + ", crude RR " + fmt(crude.point));
  return study_file;
}

// rendering ----------------------------------------------------------------

enum class Format { Human, Json };

namespace detail_render {

inline void render_value(std::ostringstream& out, const Json& j, int indent);

inline std::string scalar(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  return j.dump();
}

inline bool is_scalar_array(const Json& j) {
  if (!j.is_array()) return false;
  for (const auto& v : j)
    if (v.is_structured()) return false;
  return true;
}

inline void render_value(std::ostringstream& out, const Json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      if (v.is_structured() && !is_scalar_array(v) && !v.empty()) {
        out << pad << k << ":\n";
        render_value(out, v, indent + 1);
      } else if (is_scalar_array(v)) {
        out << pad << k << ": [";
        for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << scalar(v[i]);
        out << "]\n";
      } else {
        out << pad << k << ": " << (v.is_structured() ? v.dump() : scalar(v)) << "\n";
      }
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      out << pad << "- [" << i << "]\n";
      render_value(out, j[i], indent + 1);
    }
  } else {
    out << pad << scalar(j) << "\n";
  }
}

}  // namespace detail_render

/// JSON: key-sorted, two-space indented, trailing newline. Human: summary
/// lines, warnings, then every section as an indented outline.
inline std::string render_report(const Json& r, Format format) {
  if (format == Format::Json) return r.dump(2) + "\n";
  std::ostringstream out;
  out << "causation report (" << r.value("schema_version", "") << ") - " << r.value("command", "") << "\n";
  out << "inputs digest: " << r.value("inputs_digest", "") << "\n\n";
  if (r.contains("summary")) {
    for (const auto& line : r["summary"]) out << line.get<std::string>() << "\n";
  }
  if (r.contains("warnings") && !r["warnings"].empty()) {
    out << "\nwarnings:\n";
    for (const auto& w : r["warnings"]) out << "  ! " << w.get<std::string>() << "\n";
  }
  for (const char* name : {"effect", "confounding", "synthesis", "checklist", "legal", "simulation", "config"}) {
    if (!r.contains(name)) continue;
    out << "\n[" << name << "]\n";
    detail_render::render_value(out, r[name], 1);
  }
  return out.str();
}

}  // namespace causal::report

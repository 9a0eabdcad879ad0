#pragma once

// Legal decision layer: general causation from the checklist, the but-for
// and material-contribution rules, joint-exposure apportionment, assigned
// share, liability allocation and the taxi-company posterior.
//
// Threshold comparisons are strict: an RR exactly at the threshold does not
// satisfy but-for.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "causal/checklist.hpp"
#include "causal/effect_measures.hpp"
#include "causal/errors.hpp"

namespace causal {

struct LegalConfig {
  double rr_threshold = 2.0;
  bool use_lcl = false;
  /// De minimis floor for material contribution. 1% is this tool's default;
  /// no published figure exists.
  double material_fraction_floor = 0.01;
  bool evidentiary_gap = false;
  double alpha = 0.05;

  void validate() const {
    if (!(rr_threshold > 0.0) || !std::isfinite(rr_threshold)) throw ConfigError("rr_threshold must be positive");
    if (!(material_fraction_floor > 0.0 && material_fraction_floor < 1.0)) {
      throw ConfigError("material_fraction_floor must lie in (0,1)");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  }
};

enum class GeneralCausation { Established, NotEstablished };

inline std::string_view to_string(GeneralCausation g) {
  return g == GeneralCausation::Established ? "established" : "not_established";
}

struct GeneralCausationResult {
  GeneralCausation verdict = GeneralCausation::NotEstablished;
  std::string basis;
};

/// First limb: is the exposure capable of causing the outcome in the
/// population? Follows the checklist's overall verdict.
inline GeneralCausationResult general_causation(const ChecklistReport& report,
                                                const EffectEstimate& pooled) {
  GeneralCausationResult r;
  r.verdict = report.overall == Overall::CausationSupported ? GeneralCausation::Established
                                                            : GeneralCausation::NotEstablished;
  std::ostringstream b;
  b << "population-level " << to_string(pooled.kind) << " " << pooled.point << " ("
    << pooled.confidence_level * 100 << "% CI " << pooled.lcl << " to " << pooled.ucl << ")";
  for (const auto& o : report.outcomes) {
    b << "; test " << o.test_id << " " << to_string(o.status);
    if (!o.metrics.empty()) {
      b << " [";
      bool first = true;
      for (const auto& [k, v] : o.metrics) {
        b << (first ? "" : ", ") << k << "=" << v;
        first = false;
      }
      b << "]";
    }
    if (o.status == Status::Discounted) b << " (discounted: " << o.rationale << ")";
  }
  r.basis = b.str();
  return r;
}

enum class ButFor { Satisfied, NotSatisfied };

inline std::string_view to_string(ButFor v) {
  return v == ButFor::Satisfied ? "satisfied" : "not_satisfied";
}

struct ButForResult {
  ButFor verdict = ButFor::NotSatisfied;
  double judged_value = 1.0;  ///< point or LCL, per config
  double pde = 0.0;           ///< PDE of the judged value
  std::string rule;
  std::vector<std::string> notes;
};

/// But-for on the balance of probabilities: judged RR > threshold, which at
/// the default threshold of 2 is the same as PDE > 0.5.
inline ButForResult but_for_verdict(const EffectEstimate& e, const LegalConfig& cfg = {}) {
  cfg.validate();
  if (!e.is_ratio()) throw DomainError("but_for_verdict needs a relative risk (or odds ratio)");
  ButForResult r;
  r.judged_value = cfg.use_lcl ? e.lcl : e.point;
  r.pde = pde(r.judged_value);
  r.verdict = r.judged_value > cfg.rr_threshold ? ButFor::Satisfied : ButFor::NotSatisfied;
  std::ostringstream rule;
  rule << (cfg.use_lcl ? "lower confidence limit" : "point") << " " << to_string(e.kind) << " "
       << r.judged_value << (r.judged_value > cfg.rr_threshold ? " > " : " <= ") << "threshold "
       << cfg.rr_threshold << " (equivalently PDE " << r.pde
       << (r.pde > pde(cfg.rr_threshold) ? " > " : " <= ") << pde(cfg.rr_threshold) << ")";
  r.rule = rule.str();
  if (e.kind == Measure::OR) r.notes.emplace_back(warnings::kRareOutcomeOddsRatio);
  r.notes.emplace_back(warnings::kPdeAcceleration);
  return r;
}

enum class Materiality { Material, NotMaterial, MaterialRiskIncrease };

inline std::string_view to_string(Materiality m) {
  switch (m) {
    case Materiality::Material: return "material";
    case Materiality::NotMaterial: return "not_material";
    case Materiality::MaterialRiskIncrease: return "material_risk_increase";
  }
  return "?";
}

struct MaterialityResult {
  Materiality verdict = Materiality::NotMaterial;
  std::string rule;
};

/// Material contribution. Without an evidentiary gap the estimate must be
/// significant and the exposure's fraction above the de minimis floor; with
/// a gap, a significant increase in risk (point > 1) suffices.
inline MaterialityResult material_contribution_verdict(const EffectEstimate& e, double fraction,
                                                       const LegalConfig& cfg = {}) {
  cfg.validate();
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw DomainError("fraction must lie in [0,1]");
  const bool significant = e.p_value < cfg.alpha;
  MaterialityResult r;
  std::ostringstream rule;
  rule << "p " << e.p_value << (significant ? " < " : " >= ") << "alpha " << cfg.alpha;
  if (cfg.evidentiary_gap) {
    const bool raised = e.point > 1.0;
    r.verdict = significant && raised ? Materiality::MaterialRiskIncrease : Materiality::NotMaterial;
    rule << "; evidentiary gap: point " << e.point << (raised ? " > 1" : " <= 1");
  } else {
    const bool above = fraction > cfg.material_fraction_floor;
    r.verdict = significant && above ? Materiality::Material : Materiality::NotMaterial;
    rule << "; fraction " << fraction << (above ? " > " : " <= ") << "floor "
         << cfg.material_fraction_floor;
  }
  r.rule = rule.str();
  return r;
}

enum class ApportionScheme { PaperExcessUnits, SynergyPartition };

inline std::string_view to_string(ApportionScheme s) {
  return s == ApportionScheme::PaperExcessUnits ? "paper_excess_units" : "synergy_partition";
}

inline constexpr const char* kInteractionLabel = "interaction";

struct ApportionmentResult {
  ApportionScheme scheme = ApportionScheme::PaperExcessUnits;
  std::map<std::string, double> units;
  double total_units = 0.0;
  std::map<std::string, double> involved_fraction;
};

/// Split the joint excess risk of two exposures.
///
/// PaperExcessUnits: units (RRa-1, RRs-1, RRas-1); each exposure is involved
/// in its own unit plus the interaction unit, over the sum of all three.
/// SynergyPartition: units (RRa-1, RRs-1, RRas-RRa-RRs+1) summing to RRas-1.
inline ApportionmentResult apportion_joint_exposures(double rr_a, double rr_s, double rr_as,
                                                     ApportionScheme scheme,
                                                     const std::string& label_a = "a",
                                                     const std::string& label_s = "s") {
  for (double v : {rr_a, rr_s, rr_as}) {
    if (!std::isfinite(v) || v < 1.0) throw DomainError("apportionment needs every RR >= 1");
  }
  if (label_a == label_s || label_a == kInteractionLabel || label_s == kInteractionLabel) {
    throw DomainError("apportionment labels must be distinct and not 'interaction'");
  }
  ApportionmentResult r;
  r.scheme = scheme;
  const double ua = rr_a - 1.0;
  const double us = rr_s - 1.0;
  double ui;
  if (scheme == ApportionScheme::PaperExcessUnits) {
    ui = rr_as - 1.0;
    r.total_units = ua + us + ui;
  } else {
    if (rr_as < rr_a + rr_s - 1.0) {
      throw NegativeInteraction("joint RR " + std::to_string(rr_as) +
                                " is below the additive expectation RRa + RRs - 1 = " +
                                std::to_string(rr_a + rr_s - 1.0) + " (sub-additive interaction)");
    }
    ui = rr_as - rr_a - rr_s + 1.0;
    r.total_units = rr_as - 1.0;
  }
  r.units = {{label_a, ua}, {label_s, us}, {kInteractionLabel, ui}};
  const double total = r.total_units;
  r.involved_fraction[label_a] = total > 0.0 ? (ua + ui) / total : 0.0;
  r.involved_fraction[label_s] = total > 0.0 ? (us + ui) / total : 0.0;
  return r;
}

/// Excess cases over all cases among the exposed of a subgroup,
/// (RR - 1)/RR. Identical to pde() on RR >= 1.
inline double assigned_share(double rr_subgroup) {
  if (!std::isfinite(rr_subgroup) || rr_subgroup < 1.0) {
    throw DomainError("assigned_share: subgroup RR must be >= 1");
  }
  return (rr_subgroup - 1.0) / rr_subgroup;
}

enum class AllocationMode { MarketShare, WeightedTortfeasor, Equal };

inline std::string_view to_string(AllocationMode m) {
  switch (m) {
    case AllocationMode::MarketShare: return "market_share";
    case AllocationMode::WeightedTortfeasor: return "weighted_tortfeasor";
    case AllocationMode::Equal: return "equal";
  }
  return "?";
}

/// Split damages, given in integral minor units (cents, or whole units),
/// proportionally to the weights by largest remainder. The result sums to
/// `damages_units` exactly. Remainder ties go to the label that sorts first.
inline std::map<std::string, std::int64_t> allocate_liability(
    const std::map<std::string, double>& weights, std::int64_t damages_units, AllocationMode mode) {
  if (damages_units < 0) throw DomainError("damages must be non-negative");
  if (weights.empty()) throw DegenerateWeights("no parties to allocate to");
  std::map<std::string, double> w;
  for (const auto& [label, v] : weights) {
    if (!std::isfinite(v) || v < 0.0) throw DegenerateWeights("weight for '" + label + "' must be finite and >= 0");
    w[label] = mode == AllocationMode::Equal ? 1.0 : v;
  }
  double total = 0.0;
  for (const auto& [label, v] : w) total += v;
  if (!(total > 0.0)) throw DegenerateWeights("all weights are zero");

  struct Share {
    std::string label;
    std::int64_t whole;
    double remainder;
  };
  std::vector<Share> shares;
  std::int64_t assigned = 0;
  for (const auto& [label, v] : w) {
    const double quota = static_cast<double>(damages_units) * (v / total);
    auto whole = static_cast<std::int64_t>(std::floor(quota));
    whole = std::clamp<std::int64_t>(whole, 0, damages_units);
    shares.push_back({label, whole, quota - static_cast<double>(whole)});
    assigned += whole;
  }
  std::int64_t left = damages_units - assigned;
  std::vector<std::size_t> order(shares.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return shares[x].remainder > shares[y].remainder;
  });
  // Float rounding can make floor() overshoot, leaving `left` negative.
  for (std::size_t i = 0; left != 0; i = (i + 1) % order.size()) {
    auto& s = shares[order[i]];
    if (left > 0) {
      ++s.whole;
      --left;
    } else if (s.whole > 0) {
      --s.whole;
      ++left;
    }
  }
  std::map<std::string, std::int64_t> out;
  for (const auto& s : shares) out[s.label] = s.whole;
  return out;
}

struct TaxiCompany {
  std::string label;
  std::int64_t fleet_size = 1;
  double negligence_rate = 1.0;
  double exposure_rate = 1.0;
};

struct TaxiScenario {
  std::vector<TaxiCompany> companies;
};

struct TaxiPosterior {
  std::map<std::string, double> posterior;
  std::optional<std::string> balance_verdict;  ///< company with posterior > 0.5
  bool equal_negligence = false;               ///< assumption (a) encoded
  bool equal_exposure = false;                 ///< assumption (b) encoded
  bool bare_statistics = false;
};

/// Posterior that the responsible vehicle belongs to each company,
/// proportional to fleet size x negligence rate x exposure rate.
inline TaxiPosterior taxi_posterior(const TaxiScenario& s) {
  if (s.companies.empty()) throw AllZeroMass("no companies");
  double total = 0.0;
  std::set<std::string> labels;
  for (const auto& c : s.companies) {
    if (!labels.insert(c.label).second) throw DomainError("duplicate company '" + c.label + "'");
    if (c.fleet_size <= 0) throw DomainError("company '" + c.label + "': fleet size must be positive");
    if (!(c.negligence_rate >= 0.0) || !(c.exposure_rate >= 0.0) || !std::isfinite(c.negligence_rate) ||
        !std::isfinite(c.exposure_rate)) {
      throw DomainError("company '" + c.label + "': rates must be finite and non-negative");
    }
    total += static_cast<double>(c.fleet_size) * c.negligence_rate * c.exposure_rate;
  }
  if (!(total > 0.0)) throw AllZeroMass("every company has zero fleet x negligence x exposure mass");
  TaxiPosterior r;
  for (const auto& c : s.companies) {
    const double mass = static_cast<double>(c.fleet_size) * c.negligence_rate * c.exposure_rate;
    r.posterior[c.label] = mass / total;
    if (mass / total > 0.5) r.balance_verdict = c.label;
  }
  const auto& first = s.companies.front();
  r.equal_negligence = std::all_of(s.companies.begin(), s.companies.end(), [&](const auto& c) {
    return c.negligence_rate == first.negligence_rate;
  });
  r.equal_exposure = std::all_of(s.companies.begin(), s.companies.end(), [&](const auto& c) {
    return c.exposure_rate == first.exposure_rate;
  });
  r.bare_statistics = r.equal_negligence && r.equal_exposure;
  return r;
}

}  // namespace causal

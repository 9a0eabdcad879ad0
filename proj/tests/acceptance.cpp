// Acceptance runner: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <string>
#include <vector>

#include "cli_corpus.hpp"
#include "support.hpp"

using namespace causal;
using causal::testing::tab;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void check(Outcome& o, bool ok, const std::string& what) {
  if (!ok && o.pass) {
    o.pass = false;
    o.detail = what;
  }
}

Outcome ac1() {
  Outcome o;
  const auto t = causal::testing::worked_table();
  const auto start = std::chrono::steady_clock::now();
  const auto e = relative_risk(t);
  const double share = pde(e.point);
  const auto us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start).count();
  check(o, e.point == 5.0, "RR != 5");
  check(o, share == 0.8, "PDE != 0.8");
  check(o, us < 1000.0, "runtime " + std::to_string(us) + " us");
  if (o.pass) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "RR 5, PDE 0.8 in %.1f us", us);
    o.detail = buf;
  }
  return o;
}

Outcome ac2() {
  Outcome o;
  int violations = 0;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    rng::Stream s(2002, i);
    const double rr = std::exp(s.uniform(-4.0, 4.0));
    if ((rr > 2.0) != (pde(rr) > 0.5)) ++violations;
  }
  for (double rr : {2.0, std::nextafter(2.0, 3.0), std::nextafter(2.0, 1.0)}) {
    if ((rr > 2.0) != (pde(rr) > 0.5)) ++violations;
  }
  check(o, violations == 0, std::to_string(violations) + " violations");
  if (o.pass) o.detail = "10^4 draws plus boundary, zero violations";
  return o;
}

Outcome ac3() {
  Outcome o;
  const auto p = apportion_joint_exposures(6, 11, 51, ApportionScheme::PaperExcessUnits, "a", "s");
  check(o, p.units.at("a") == 5 && p.units.at("s") == 10 && p.units.at(kInteractionLabel) == 50, "units");
  check(o, p.total_units == 65, "total");
  check(o, p.involved_fraction.at("a") == 55.0 / 65.0 && p.involved_fraction.at("s") == 60.0 / 65.0, "fractions");
  const auto y = apportion_joint_exposures(6, 11, 51, ApportionScheme::SynergyPartition);
  check(o, y.units.at(kInteractionLabel) == 35, "synergy interaction");

  sim::ConfoundedTruth t;
  t.cohort = {1000000, 1000000, 0.001, 6.0, 0};
  t.confounder = ConfounderSpec{11.0, 0.5, 0.5};
  t.interaction_rr = 51.0 / 66.0;
  const auto st = sim::simulate_confounded_cohort(t, sim::Mode::Expected).study;
  const double base = static_cast<double>(st.strata[0].table.c);
  const auto q = apportion_joint_exposures(static_cast<double>(st.strata[0].table.a) / base,
                                           static_cast<double>(st.strata[1].table.c) / base,
                                           static_cast<double>(st.strata[1].table.a) / base,
                                           ApportionScheme::PaperExcessUnits, "a", "s");
  check(o, std::fabs(q.units.at("a") - 5) < 1e-9 && std::fabs(q.units.at("s") - 10) < 1e-9 &&
               std::fabs(q.units.at(kInteractionLabel) - 50) < 1e-9,
        "expected-count construction");
  if (o.pass) o.detail = "units 5/10/50, total 65, 55/65 and 60/65, synergy 35, expected counts agree";
  return o;
}

Outcome ac4() {
  Outcome o;
  const auto r = taxi_posterior({{{"blue", 3}, {"yellow", 1}}});
  check(o, r.posterior.at("blue") == 0.75, "blue != 0.75");
  double worst = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    rng::Stream s(4004, i);
    TaxiScenario sc;
    const auto k = 1 + s.below(6);
    for (std::uint64_t j = 0; j < k; ++j) {
      sc.companies.push_back({"c" + std::to_string(j), 1 + static_cast<std::int64_t>(s.below(100)), s.uniform(0.01, 1),
                              s.uniform(0.01, 1)});
    }
    auto scaled = sc;
    const double m1 = std::exp(s.uniform(-6, 6)), m2 = std::exp(s.uniform(-6, 6));
    for (auto& c : scaled.companies) {
      c.negligence_rate *= m1;
      c.exposure_rate *= m2;
    }
    const auto a = taxi_posterior(sc), b = taxi_posterior(scaled);
    for (const auto& [label, v] : a.posterior) worst = std::max(worst, std::fabs(v - b.posterior.at(label)));
  }
  check(o, worst < 1e-12, "max deviation " + std::to_string(worst));
  if (o.pass) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "blue 0.75; max scale deviation %.3g over 10^3 scenarios", worst);
    o.detail = buf;
  }
  return o;
}

Outcome ac5() {
  Outcome o;
  double worst = 0;
  long tables = 0, exact_path = 0;
  for (int n = 0; n <= 40; ++n)
    for (int a = 0; a <= n; ++a)
      for (int b = 0; a + b <= n; ++b)
        for (int c = 0; a + b + c <= n; ++c) {
          const int d = n - a - b - c;
          if (a + b == 0 || c + d == 0) continue;
          const auto t = tab(a, b, c, d);
          const double oracle = sim::exact_fisher_oracle(t);
          worst = std::max(worst, std::fabs(fisher_exact_two_sided(t) - oracle));
          ++tables;
          if (a + c > 0 && b + d > 0) {
            const auto at = association_test(t);
            if (at.method == TestMethod::FisherExact) {
              ++exact_path;
              worst = std::max(worst, std::fabs(at.p_value - oracle));
            }
          }
        }
  check(o, worst < 1e-12, "max |diff| " + std::to_string(worst));
  if (o.pass) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%ld tables (%ld via association_test), max |diff| %.3g", tables, exact_path, worst);
    o.detail = buf;
  }
  return o;
}

// Integer population, arms of 10^8, baseline risk 1/100, exposure RR 1.
double population_crude_rr(int rc, int p1, int p0) {
  const std::int64_t arm = 100000000;
  auto cases = [&](std::int64_t n_present, std::int64_t n_absent) {
    return n_present / 100 / 100 * rc + n_absent / 100;
  };
  const std::int64_t n1p = arm / 100 * p1, n0p = arm / 100 * p0;
  const double r1 = static_cast<double>(cases(n1p, arm - n1p)) / static_cast<double>(arm);
  const double r0 = static_cast<double>(cases(n0p, arm - n0p)) / static_cast<double>(arm);
  return r1 / r0;
}

Outcome ac6() {
  Outcome o;
  long points = 0;
  for (int rc = 100; rc <= 1000; ++rc)
    for (int i = 0; i <= 100; ++i)
      for (int j = 0; j <= 100; ++j) {
        const double r = rc / 100.0;
        const ConfounderSpec c{r, i / 100.0, j / 100.0};
        for (double x : {0.5, 1.0, 2.0, 5.0}) {
          const auto adj = bias_adjust(x, c);
          if (adj.bias_factor > r || adj.rr_adjusted < x / r) {
            check(o, false, "bound broken at rc " + std::to_string(r) + " p1 " + std::to_string(c.prevalence_exposed) +
                                " p0 " + std::to_string(c.prevalence_unexposed));
          }
        }
        ++points;
      }
  double worst = 0;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    rng::Stream s(6006, k);
    const int rc = 100 + static_cast<int>(s.below(901));
    const int p1 = static_cast<int>(s.below(101)), p0 = static_cast<int>(s.below(101));
    const double closed = bias_adjust(1.0, ConfounderSpec{rc / 100.0, p1 / 100.0, p0 / 100.0}).bias_factor;
    worst = std::max(worst, std::fabs(population_crude_rr(rc, p1, p0) - closed));
  }
  check(o, worst < 1e-9, "population oracle |diff| " + std::to_string(worst));
  if (o.pass) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%ld grid points, population oracle max |diff| %.3g", points, worst);
    o.detail = buf;
  }
  return o;
}

Outcome ac7() {
  Outcome o;
  const std::vector<StudyEstimate> same{{"a", std::log(3.0), 0.2}, {"b", std::log(3.0), 0.2}, {"c", std::log(3.0), 0.2}};
  const auto m = meta_analyze(same);
  check(o, std::fabs(m.q) <= 1e-12 && std::fabs(m.i_squared) <= 1e-12, "Q or I2 not zero");
  check(o, std::fabs(m.pooled_random.point - m.pooled_fixed.point) <= 1e-12, "random != fixed");
  const int reps = 500;
  const double tau = 0.3;
  std::vector<double> est;
  for (int r = 0; r < reps; ++r) {
    est.push_back(meta_analyze(sim::simulate_meta_estimates(10, std::log(2.0), tau, 0.05, 0.15,
                                                            static_cast<std::uint64_t>(r)))
                      .tau_squared);
  }
  const double mean = std::accumulate(est.begin(), est.end(), 0.0) / reps;
  double ss = 0;
  for (double v : est) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / (reps - 1) / reps);
  check(o, std::fabs(mean - tau * tau) < 3 * se, "tau2 mean " + std::to_string(mean) + " se " + std::to_string(se));
  if (o.pass) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "Q = I2 = 0; tau2 mean %.4f vs %.4f (rep se %.4f)", mean, tau * tau, se);
    o.detail = buf;
  }
  return o;
}

Outcome ac8() {
  Outcome o;
  double worst = 0, worst_sse = 0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    rng::Stream s(8008, i);
    const double z = s.uniform(-3.0, 5.0);
    std::vector<DoseLogPoint> pts;
    for (double dose : {0.5, 2.0, 5.0, 10.0, 25.0}) pts.push_back({dose, z * std::log1p(dose), s.uniform(0.5, 5.0)});
    const auto fit = fit_doll_peto(pts);
    worst = std::max(worst, std::fabs(fit.z - z));
    worst_sse = std::max(worst_sse, fit.residual_sse);
  }
  check(o, worst < 1e-9, "|z error| " + std::to_string(worst));
  check(o, worst_sse < 1e-20, "residual " + std::to_string(worst_sse));
  if (o.pass) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "50 exponents, max |z error| %.3g, max residual %.3g", worst, worst_sse);
    o.detail = buf;
  }
  return o;
}

Outcome ac9() {
  Outcome o;
  long bad = 0, supported = 0;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    rng::Stream s(9009, i);
    std::vector<TestOutcome> v;
    bool any_fail = false;
    for (int id = 1; id <= 10; ++id) {
      const auto st = static_cast<Status>(s.below(4));
      any_fail = any_fail || st == Status::Fail;
      v.push_back({id, kTestNames[static_cast<std::size_t>(id - 1)], st, {}, "given"});
    }
    ChecklistConfig cfg;
    cfg.strict_mode = s.bernoulli(0.5);
    const bool sup = overall_verdict(v, cfg).overall == Overall::CausationSupported;
    supported += sup;
    if (sup && (any_fail || v[7].status != Status::Pass)) ++bad;
  }
  check(o, bad == 0, std::to_string(bad) + " supported verdicts with a failure");
  check(o, supported > 0, "no vector was supported; fuzzing is vacuous");
  if (o.pass) o.detail = "10^5 vectors, " + std::to_string(supported) + " supported, none with a Fail";
  return o;
}

Outcome ac10() {
  Outcome o;
  StratifiedStudy s;
  s.id = "reversal";
  s.strata.push_back({{{"z", "0"}}, tab(1, 1, 5, 10)});
  s.strata.push_back({{{"z", "1"}}, tab(1, 10, 1, 20)});
  check(o, detect_simpson(s).reversal, "reversal instance not detected");
  sim::ConfoundedTruth truth;
  truth.cohort = {5000, 5000, 0.02, 2.0, 0};
  truth.confounder = ConfounderSpec{3.0, 0.4, 0.4};
  truth.interaction_rr = 1.0;
  int reversals = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    truth.cohort.seed = seed;
    reversals += detect_simpson(sim::simulate_confounded_cohort(truth).study).reversal;
  }
  check(o, reversals == 0, std::to_string(reversals) + " false reversals");
  if (o.pass) o.detail = "instance detected; 0 false reversals in 10^3 studies";
  return o;
}

Outcome ac11() {
  Outcome o;
  int reports = 0;
  for (const auto& c : causal::testing::golden_corpus()) {
    const auto x = causal::testing::run_json(c.args), y = causal::testing::run_json(c.args);
    check(o, x.code == 0, c.name + " exited " + std::to_string(x.code));
    check(o, x.out == y.out, c.name + " differs between runs");
    std::ifstream in(causal::testing::source_path("tests/golden/" + c.name + ".json"), std::ios::binary);
    const std::string golden{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    check(o, x.out == golden, c.name + " differs from its golden file");
    ++reports;
    if (c.args.front() == "sensitivity") {
      for (const char* t : {"2", "4", "8"}) {
        auto args = c.args;
        args.insert(args.end(), {"--threads", t});
        check(o, causal::testing::run_json(args).out == x.out, c.name + " differs at " + t + " threads");
      }
    }
  }
  if (o.pass) o.detail = std::to_string(reports) + " reports byte-identical across runs, threads and golden files";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"AC1 worked table RR and PDE", ac1},       {"AC2 RR > 2 iff PDE > 0.5", ac2},
      {"AC3 joint-exposure apportionment", ac3}, {"AC4 taxi posterior", ac4},
      {"AC5 Fisher exact vs oracle", ac5},        {"AC6 Cornfield bound", ac6},
      {"AC7 meta-analysis", ac7},                 {"AC8 Doll-Peto round trip", ac8},
      {"AC9 checklist gate", ac9},                {"AC10 Simpson detection", ac10},
      {"AC11 end-to-end determinism", ac11},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  %-36s %9.1f ms  %s\n", o.pass ? "PASS" : "FAIL", name, ms, o.detail.c_str());
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}

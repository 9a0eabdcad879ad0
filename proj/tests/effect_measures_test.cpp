#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace causal;
using causal::testing::tab;
using causal::testing::worked_table;

TEST(RelativeRisk, WorkedTableIsExactlyFive) {
  const auto e = relative_risk(worked_table());
  EXPECT_EQ(e.point, 5.0);
  EXPECT_EQ(e.kind, Measure::RR);
  EXPECT_FALSE(e.corrected);
}

TEST(RelativeRisk, SymmetricArmsGiveOne) { EXPECT_EQ(relative_risk(tab(10, 90, 10, 90)).point, 1.0); }

TEST(RelativeRisk, WaldIntervalMatchesHandFormula) {
  const double se = std::sqrt(1.0 / 25 - 1.0 / 1000 + 1.0 / 5 - 1.0 / 1000);
  const auto e = relative_risk(worked_table(), 0.95);
  EXPECT_NEAR(e.se, se, 1e-15);
  EXPECT_NEAR(e.lcl, 5.0 * std::exp(-1.959963984540054 * se), 1e-9);
  EXPECT_NEAR(e.ucl, 5.0 * std::exp(1.959963984540054 * se), 1e-9);
  EXPECT_NEAR(e.lcl, 1.92, 0.005);
  EXPECT_NEAR(e.ucl, 13.0, 0.05);
}

TEST(RelativeRisk, LowerConfidenceNarrowsInterval) {
  const auto wide = relative_risk(worked_table(), 0.95);
  const auto narrow = relative_risk(worked_table(), 0.80);
  EXPECT_GT(narrow.lcl, wide.lcl);
  EXPECT_LT(narrow.ucl, wide.ucl);
}

// Parametric bootstrap: tables drawn at the observed arm risks; the nominal
// 95% interval should cover the generating RR about 95% of the time.
TEST(RelativeRisk, IntervalCoverageUnderParametricBootstrap) {
  const int reps = 100000;
  int covered = 0;
  for (int i = 0; i < reps; ++i) {
    rng::Stream s(20240601, static_cast<std::uint64_t>(i));
    const auto a = static_cast<std::int64_t>(s.binomial(1000, 0.025));
    const auto c = static_cast<std::int64_t>(s.binomial(1000, 0.005));
    const auto e = relative_risk(tab(a, 1000 - a, c, 1000 - c));
    if (e.lcl <= 5.0 && 5.0 <= e.ucl) ++covered;
  }
  const double coverage = static_cast<double>(covered) / reps;
  EXPECT_NEAR(coverage, 0.95, 0.02) << coverage;
}

TEST(RelativeRisk, CaseControlIsRejected) {
  EXPECT_THROW(relative_risk(tab(25, 975, 5, 995, Design::CaseControl)), DesignError);
}

TEST(RelativeRisk, EmptyMarginIsDegenerate) {
  EXPECT_THROW(relative_risk(tab(0, 0, 5, 5)), DegenerateError);
  EXPECT_THROW(relative_risk(tab(5, 5, 0, 0)), DegenerateError);
}

TEST(OddsRatio, SymmetricTableGivesOne) { EXPECT_EQ(odds_ratio(tab(10, 10, 10, 10)).point, 1.0); }

TEST(OddsRatio, WorkedTableByCrossProduct) {
  const auto e = odds_ratio(worked_table());
  EXPECT_NEAR(e.point, (25.0 * 995.0) / (975.0 * 5.0), 1e-12);
  EXPECT_NEAR(e.point, 5.10, 0.005);
  EXPECT_LT(std::fabs(std::log(e.point) - std::log(5.0)), 0.05);
}

TEST(OddsRatio, ZeroCellIsCorrected) {
  const auto e = odds_ratio(tab(0, 10, 5, 5));
  EXPECT_TRUE(e.corrected);
  EXPECT_NEAR(e.point, (0.5 * 5.5) / (10.5 * 5.5), 1e-12);
  EXPECT_LE(e.lcl, e.point);
  EXPECT_LE(e.point, e.ucl);
}

TEST(OddsRatio, CaseControlTablesAccepted) {
  const auto e = design_estimate(tab(90, 60, 110, 240, Design::CaseControl));
  EXPECT_EQ(e.kind, Measure::OR);
  EXPECT_NEAR(e.point, 90.0 * 240.0 / (60.0 * 110.0), 1e-12);
}

TEST(Pde, PaperValues) {
  EXPECT_EQ(pde(5.0), 0.8);
  EXPECT_EQ(pde(1.0), 0.0);
  EXPECT_EQ(pde(2.0), 0.5);
  EXPECT_EQ(pde(relative_risk(worked_table()).point), 0.8);
}

TEST(Pde, RuleEquivalenceOnGrid) {
  int violations = 0;
  for (int i = 1; i <= 200000; ++i) {
    const double rr = i * 1e-4;
    if ((pde(rr) > 0.5) != (rr > 2.0)) ++violations;
  }
  EXPECT_EQ(violations, 0);
  EXPECT_FALSE(pde(std::nextafter(2.0, 0.0)) > 0.5);
  EXPECT_TRUE(pde(std::nextafter(2.0, 3.0)) > 0.5);
}

TEST(ExcessRisk, WorkedTable) {
  const auto e = excess_risk(worked_table());
  EXPECT_NEAR(e.point, 25.0 / 1000 - 5.0 / 1000, 1e-15);
  EXPECT_LE(e.lcl, e.point);
  EXPECT_GE(e.ucl, e.point);
}

TEST(ExcessRisk, EqualRatesGiveZero) { EXPECT_EQ(excess_risk(tab(7, 93, 14, 186)).point, 0.0); }

TEST(ExcessRisk, EmptyExposedMargin) { EXPECT_THROW(excess_risk(tab(0, 0, 5, 5)), DegenerateError); }

TEST(AssociationTest, NullTable) {
  const auto t = association_test(tab(10, 10, 10, 10));
  EXPECT_EQ(t.method, TestMethod::ChiSquare);
  EXPECT_EQ(t.statistic, 0.0);
  EXPECT_EQ(t.p_value, 1.0);
}

TEST(AssociationTest, SmallTableUsesFisherAndMatchesOracle) {
  const auto t = association_test(tab(3, 1, 1, 3));
  EXPECT_EQ(t.method, TestMethod::FisherExact);
  EXPECT_NEAR(t.p_value, sim::exact_fisher_oracle(tab(3, 1, 1, 3)), 1e-12);
  // Hypergeometric probabilities 1,16,36,16,1 over 70: tables as or less likely than 16/70.
  EXPECT_NEAR(t.p_value, 34.0 / 70.0, 1e-12);
}

TEST(AssociationTest, WorkedTableChiSquarePath) {
  const auto t = association_test(worked_table());
  EXPECT_EQ(t.method, TestMethod::ChiSquare);
  EXPECT_LT(t.p_value, 0.05);
  // Pearson statistic by hand: n(ad-bc)^2 / (r1 r2 c1 c2).
  const double cross = 25.0 * 995 - 975.0 * 5;
  EXPECT_NEAR(t.statistic, 2000.0 * cross * cross / (1000.0 * 1000 * 30 * 1970), 1e-9);
  EXPECT_NEAR(t.p_value, 2.0 * (1.0 - stats::normal_cdf(std::sqrt(t.statistic))), 1e-12);
}

// Permutation oracle: shuffle the 30 cases over the 2000 subjects and count
// tables at least as extreme (in chi-square order) as the observed one.
// The Monte Carlo estimate targets the exact permutation p, which the
// asymptotic chi-square tail underestimates by about 20% here.
TEST(AssociationTest, WorkedTablePermutationOracle) {
  const std::int64_t exposed = 1000, total = 2000, cases = 30, observed = 25;
  const int draws = 4000000;
  std::int64_t extreme = 0;
  for (int i = 0; i < draws; ++i) {
    rng::Stream s(77, static_cast<std::uint64_t>(i));
    std::int64_t remaining_exposed = exposed, remaining = total, x = 0;
    for (std::int64_t k = 0; k < cases; ++k) {
      if (static_cast<std::int64_t>(s.below(static_cast<std::uint64_t>(remaining))) < remaining_exposed) {
        ++x;
        --remaining_exposed;
      }
      --remaining;
    }
    if (std::llabs(2 * x - cases) >= std::llabs(2 * observed - cases)) ++extreme;
  }
  const double p_mc = static_cast<double>(extreme) / draws;
  const double exact = sim::exact_fisher_oracle(worked_table());
  const double mcse = std::sqrt(exact * (1.0 - exact) / draws);
  EXPECT_LT(std::fabs(p_mc - exact), 3.0 * mcse) << p_mc << " vs " << exact;
  const double chi = association_test(worked_table()).p_value;
  EXPECT_LT(chi, 0.05);
  EXPECT_LT(p_mc, 0.05);
  EXPECT_NEAR(chi / exact, 1.0, 0.3);
}

TEST(AssociationTest, FisherAgreesWithOracleOnSweep) {
  double worst = 0.0;
  for (int a = 0; a <= 12; ++a)
    for (int b = 0; b <= 12; ++b)
      for (int c = 0; c <= 12; ++c)
        for (int d = 0; d <= 12; ++d) {
          if (a + b == 0 || c + d == 0) continue;
          const auto t = tab(a, b, c, d);
          worst = std::max(worst, std::fabs(fisher_exact_two_sided(t) - sim::exact_fisher_oracle(t)));
        }
  EXPECT_LT(worst, 1e-12);
}

// Under the null, chi-square-path rejection rates match the nominal level.
// The p-values are discrete (a = c gives p = 1 with mass near 0.02), so the
// check is on rejection rates rather than a KS distance.
TEST(AssociationTest, NullRejectionRatesAreNominal) {
  const int n = 10000;
  std::vector<double> ps;
  ps.reserve(n);
  for (int i = 0; i < n; ++i) {
    sim::CohortTruth truth{1000, 1000, 0.3, 1.0, static_cast<std::uint64_t>(5000 + i)};
    const auto t = association_test(sim::simulate_cohort(truth));
    ASSERT_EQ(t.method, TestMethod::ChiSquare);
    ps.push_back(t.p_value);
  }
  for (double alpha : {0.01, 0.05, 0.1, 0.25, 0.5}) {
    const double rate =
        static_cast<double>(std::count_if(ps.begin(), ps.end(), [&](double p) { return p <= alpha; })) / n;
    EXPECT_LT(std::fabs(rate - alpha), 4.0 * std::sqrt(alpha * (1 - alpha) / n)) << alpha << " " << rate;
  }
}

TEST(EffectProperties, IntervalOrderingOnRandomTables) {
  for (std::uint64_t i = 0; i < 20000; ++i) {
    rng::Stream s(31, i);
    const auto t = tab(static_cast<std::int64_t>(s.below(60)), static_cast<std::int64_t>(s.below(60)) + 1,
                       static_cast<std::int64_t>(s.below(60)), static_cast<std::int64_t>(s.below(60)) + 1);
    for (double level : {0.8, 0.9, 0.95, 0.99}) {
      const auto rr = relative_risk(t, level);
      const auto orr = odds_ratio(t, level);
      const auto er = excess_risk(t, level);
      for (const auto* e : {&rr, &orr, &er}) {
        ASSERT_LE(e->lcl, e->point);
        ASSERT_LE(e->point, e->ucl);
        ASSERT_TRUE(std::isfinite(e->lcl) && std::isfinite(e->ucl));
      }
      ASSERT_GT(rr.lcl, 0.0);
      ASSERT_GT(orr.lcl, 0.0);
    }
  }
}

TEST(EffectProperties, RareOutcomeOddsRatioApproximatesRiskRatio) {
  for (std::uint64_t i = 0; i < 5000; ++i) {
    rng::Stream s(41, i);
    const std::int64_t n1 = 1000 + static_cast<std::int64_t>(s.below(9000));
    const std::int64_t n0 = 1000 + static_cast<std::int64_t>(s.below(9000));
    const std::int64_t a = 1 + static_cast<std::int64_t>(s.below(static_cast<std::uint64_t>(n1 / 100 - 1)));
    const std::int64_t c = 1 + static_cast<std::int64_t>(s.below(static_cast<std::uint64_t>(n0 / 100 - 1)));
    const auto t = tab(a, n1 - a, c, n0 - c);
    ASSERT_LT(std::fabs(std::log(odds_ratio(t).point) - std::log(relative_risk(t).point)), 0.05);
  }
}

TEST(EffectProperties, ValidTablesNeverYieldNaN) {
  for (std::uint64_t i = 0; i < 20000; ++i) {
    rng::Stream s(51, i);
    const auto t = tab(static_cast<std::int64_t>(s.below(6)), static_cast<std::int64_t>(s.below(6)),
                       static_cast<std::int64_t>(s.below(6)), static_cast<std::int64_t>(s.below(6)));
    if (!validate_table(t).ok()) continue;
    auto finite = [](const EffectEstimate& e) {
      return std::isfinite(e.point) && std::isfinite(e.lcl) && std::isfinite(e.ucl) && std::isfinite(e.p_value);
    };
    try {
      ASSERT_TRUE(finite(relative_risk(t)));
    } catch (const DegenerateError&) {
    }
    try {
      ASSERT_TRUE(finite(odds_ratio(t)));
    } catch (const DegenerateError&) {
    }
    ASSERT_TRUE(finite(excess_risk(t)));
    const auto at = association_test(t);
    ASSERT_TRUE(at.p_value >= 0.0 && at.p_value <= 1.0);
  }
}

TEST(Misclassification, PerfectClassificationIsIdentity) {
  const auto r = misclassification_adjust(worked_table(), MisclassificationSpec{1.0, 1.0});
  EXPECT_EQ(r.corrected, RealTable::from(worked_table()));
  ASSERT_TRUE(r.rr.has_value());
  EXPECT_NEAR(*r.rr, 5.0, 1e-12);
}

TEST(Misclassification, InverseOfForwardModel) {
  for (std::uint64_t i = 0; i < 2000; ++i) {
    rng::Stream s(61, i);
    MisclassificationSpec m;
    m.sensitivity = s.uniform(0.7, 1.0);
    m.specificity = s.uniform(0.7, 1.0);
    m.differential = s.bernoulli(0.5);
    m.noncase_sensitivity = s.uniform(0.7, 1.0);
    m.noncase_specificity = s.uniform(0.7, 1.0);
    const RealTable truth{s.uniform(1, 500), s.uniform(1, 5000), s.uniform(1, 500), s.uniform(1, 5000)};
    const auto observed = apply_misclassification(truth, m);
    // Back-correction works from observed real counts, so route via the
    // closed form directly rather than rounding to integers.
    const double cases = observed.a + observed.c, noncases = observed.b + observed.d;
    const double a = (observed.a - (1 - m.case_sp()) * cases) / (m.case_se() + m.case_sp() - 1);
    const double b = (observed.b - (1 - m.noncase_sp()) * noncases) / (m.noncase_se() + m.noncase_sp() - 1);
    ASSERT_NEAR(a, truth.a, 1e-9);
    ASSERT_NEAR(b, truth.b, 1e-9);
  }
}

TEST(Misclassification, RoundTripOnIntegerExpectedCounts) {
  const MisclassificationSpec m{0.9, 0.8};
  const RealTable truth{200, 800, 100, 900};
  const auto obs = apply_misclassification(truth, m);
  // obs = (0.9*200+0.2*100, 0.9*800+0.2*900, ...) = (200, 900, 100, 800): integral.
  const auto t = tab(std::llround(obs.a), std::llround(obs.b), std::llround(obs.c), std::llround(obs.d));
  const auto r = misclassification_adjust(t, m);
  EXPECT_NEAR(r.corrected.a, truth.a, 1e-9);
  EXPECT_NEAR(r.corrected.b, truth.b, 1e-9);
  EXPECT_NEAR(r.corrected.c, truth.c, 1e-9);
  EXPECT_NEAR(r.corrected.d, truth.d, 1e-9);
}

TEST(Misclassification, NondifferentialCorrectionMovesTowardTruth) {
  sim::ConfoundedTruth truth;
  truth.cohort = {20000, 20000, 0.02, 3.0, 0};
  truth.misclassification = MisclassificationSpec{0.9, 0.9};
  const auto expected = sim::simulate_confounded_cohort(truth, sim::Mode::Expected).crude;
  const double observed_rr = relative_risk(expected).point;
  const auto r = misclassification_adjust(expected, *truth.misclassification);
  ASSERT_TRUE(r.rr.has_value());
  EXPECT_LT(std::fabs(*r.rr - 3.0), std::fabs(observed_rr - 3.0));
  EXPECT_NEAR(*r.rr, 3.0, 0.01);

  int closer = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    truth.cohort.seed = seed;
    const auto t = sim::simulate_confounded_cohort(truth).crude;
    const auto adj = misclassification_adjust(t, *truth.misclassification);
    if (adj.rr && std::fabs(*adj.rr - 3.0) < std::fabs(relative_risk(t).point - 3.0)) ++closer;
  }
  EXPECT_GE(closer, 45);
}

TEST(Misclassification, InfeasibleSpecNamesCell) {
  // Specificity 0.6 implies at least 40% of each row recorded exposed; a=1 of 100 cases is impossible.
  try {
    misclassification_adjust(tab(1, 500, 99, 500), MisclassificationSpec{0.9, 0.6});
    FAIL() << "expected InfeasibleCorrection";
  } catch (const InfeasibleCorrection& e) {
    EXPECT_EQ(e.cell(), "a");
    EXPECT_LT(e.value(), 0.0);
  }
}

TEST(Misclassification, RejectsUninformativeSpec) {
  EXPECT_THROW(misclassification_adjust(worked_table(), MisclassificationSpec{0.5, 0.5}), ValidationError);
}

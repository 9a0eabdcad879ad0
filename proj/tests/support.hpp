#pragma once

#include <cstdint>
#include <string>

#include "causal/causal.hpp"

namespace causal::testing {

inline TwoByTwoTable tab(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d,
                         Design design = Design::Cohort) {
  TwoByTwoTable t;
  t.a = a;
  t.b = b;
  t.c = c;
  t.d = d;
  t.design = design;
  return t;
}

inline StratifiedStudy single_study(std::string id, const TwoByTwoTable& t) {
  StratifiedStudy s;
  s.id = std::move(id);
  s.strata.push_back({CovariateProfile{}, t});
  return s;
}

inline TwoByTwoTable worked_table() { return tab(25, 975, 5, 995); }

}  // namespace causal::testing

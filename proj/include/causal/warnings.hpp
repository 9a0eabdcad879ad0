#pragma once

#include <array>
#include <string_view>

// Fixed caution strings. Reports quote these verbatim so they can be matched
// by golden tests.
namespace causal::warnings {

inline constexpr std::string_view kZeroCellCorrection =
    "zero-cell correction: a table cell is zero, so 0.5 was added to all four "
    "cells (Haldane-Anscombe) before computing ratio measures";

inline constexpr std::string_view kSmallStudy =
    "small-study caution: an expected cell count is below 5, so the exact "
    "(Fisher) test is used and large-sample intervals may be unreliable";

inline constexpr std::string_view kPdeAcceleration =
    "PDE caveat: if the exposure accelerates outcomes that would have occurred "
    "anyway, (RR-1)/RR understates the probability of causation and is biased "
    "in favour of the defendant; no correction is attempted";

inline constexpr std::string_view kBareStatistics =
    "bare statistics: without population estimates of negligent action and "
    "of exposure rates, this posterior rests on fleet counts alone";

inline constexpr std::string_view kRareOutcomeOddsRatio =
    "odds ratio used in place of a relative risk; the approximation holds only "
    "for rare outcomes";

inline constexpr std::string_view kDoseIntensityOnly =
    "dose-response assessed on exposure intensity only; duration and time "
    "since first exposure are not modelled";

inline constexpr std::string_view kForeseeabilityOutOfScope =
    "the 'not insignificant' foreseeability test for negligence, and the "
    "action-to-exposure link generally, are outside this engine's scope";

inline constexpr std::string_view kEvidentiaryGapApportionment =
    "under the evidentiary-gap rule, apportionment figures are reported for "
    "information and never applied automatically";

inline constexpr std::array kAll = {
    kZeroCellCorrection,       kSmallStudy,
    kPdeAcceleration,          kBareStatistics,
    kRareOutcomeOddsRatio,     kDoseIntensityOnly,
    kForeseeabilityOutOfScope, kEvidentiaryGapApportionment,
};

}  // namespace causal::warnings

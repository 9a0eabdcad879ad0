#pragma once

#include "causal/errors.hpp"
#include "causal/rng.hpp"
#include "causal/stats.hpp"
#include "causal/warnings.hpp"
#include "causal/study_model.hpp"
#include "causal/study_io.hpp"
#include "causal/effect_measures.hpp"
#include "causal/confounding.hpp"
#include "causal/synthesis.hpp"
#include "causal/checklist.hpp"
#include "causal/legal.hpp"
#include "causal/sim_oracle.hpp"
#include "causal/report.hpp"

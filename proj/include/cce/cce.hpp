#pragma once

// Umbrella header.

#include "cce/ape.hpp"
#include "cce/bias_correction.hpp"
#include "cce/csv.hpp"
#include "cce/dgp.hpp"
#include "cce/error.hpp"
#include "cce/estimate.hpp"
#include "cce/factor_stage.hpp"
#include "cce/hac.hpp"
#include "cce/inference.hpp"
#include "cce/jackknife.hpp"
#include "cce/likelihood.hpp"
#include "cce/mle_stage.hpp"
#include "cce/montecarlo.hpp"
#include "cce/panel.hpp"
#include "cce/parallel.hpp"

#pragma once

#include "stovol/bases.hpp"
#include "stovol/config.hpp"
#include "stovol/diffusion_models.hpp"
#include "stovol/domain.hpp"
#include "stovol/error.hpp"
#include "stovol/io.hpp"
#include "stovol/lsq_estimator.hpp"
#include "stovol/mc_harness.hpp"
#include "stovol/model_selection.hpp"
#include "stovol/pipeline.hpp"
#include "stovol/quadvar.hpp"
#include "stovol/rng.hpp"
#include "stovol/sampling.hpp"

#pragma once

#include "kuq/config_text.hpp"
#include "kuq/coverage.hpp"
#include "kuq/data.hpp"
#include "kuq/errors.hpp"
#include "kuq/estimators.hpp"
#include "kuq/explore.hpp"
#include "kuq/kernels.hpp"
#include "kuq/perturbation.hpp"
#include "kuq/rank_region.hpp"
#include "kuq/rng.hpp"
#include "kuq/sps.hpp"

#ifndef SVRHMC_SVRHMC_HPP
#define SVRHMC_SVRHMC_HPP

#include "svrhmc/accounting.hpp"
#include "svrhmc/data.hpp"
#include "svrhmc/errors.hpp"
#include "svrhmc/harness.hpp"
#include "svrhmc/metrics.hpp"
#include "svrhmc/model.hpp"
#include "svrhmc/noise.hpp"
#include "svrhmc/random.hpp"
#include "svrhmc/samplers.hpp"
#include "svrhmc/theory.hpp"

#endif  // SVRHMC_SVRHMC_HPP

#ifndef SRSCOMB_SRSCOMB_HPP
#define SRSCOMB_SRSCOMB_HPP

#include "app.hpp"
#include "bessel.hpp"
#include "checks.hpp"
#include "config.hpp"
#include "core.hpp"
#include "ensemble.hpp"
#include "interferometry.hpp"
#include "moments.hpp"
#include "oracles.hpp"
#include "propagator.hpp"
#include "rng.hpp"
#include "serialize.hpp"
#include "statistics.hpp"
#include "svg.hpp"

#endif  // SRSCOMB_SRSCOMB_HPP

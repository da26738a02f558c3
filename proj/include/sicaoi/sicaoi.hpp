#ifndef SICAOI_SICAOI_HPP
#define SICAOI_SICAOI_HPP

#include "sicaoi/error.hpp"
#include "sicaoi/config.hpp"
#include "sicaoi/parallel.hpp"
#include "sicaoi/numeric.hpp"
#include "sicaoi/sic.hpp"
#include "sicaoi/policy.hpp"
#include "sicaoi/artifact.hpp"
#include "sicaoi/analytic.hpp"
#include "sicaoi/simulator.hpp"
#include "sicaoi/harness.hpp"
#include "sicaoi/acceptance.hpp"

#endif  // SICAOI_SICAOI_HPP

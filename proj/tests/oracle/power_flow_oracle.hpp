#pragma once

#include <vector>

#include "lmpf/network.hpp"

namespace oracle {

/// Line flows (MW) for bus injections (MW) balanced at the reference bus,
/// computed by solving the bus-angle equations with plain Gaussian elimination.
std::vector<double> dc_power_flow(const lmpf::GridCase& grid, const std::vector<double>& injection);

}  // namespace oracle

#pragma once

#include <cstdint>

#include "lmpf/network.hpp"

namespace oracle {

/// Connected random case with 2..max_buses buses, distinct generator costs
/// and one or two stochastic loads.
lmpf::GridCase random_small_case(std::uint64_t seed, int max_buses = 5, bool quadratic = false);

}  // namespace oracle

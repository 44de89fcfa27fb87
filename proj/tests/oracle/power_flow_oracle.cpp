#include "oracle/power_flow_oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace oracle {

std::vector<double> dc_power_flow(const lmpf::GridCase& grid, const std::vector<double>& injection) {
  const int n = grid.bus_count;
  const int ref = grid.reference_bus - 1;
  std::vector<std::vector<double>> b(n, std::vector<double>(n, 0.0));
  for (const auto& l : grid.lines) {
    if (!l.in_service) continue;
    const double y = 1.0 / l.reactance;
    const int f = l.from - 1, t = l.to - 1;
    b[f][f] += y;
    b[t][t] += y;
    b[f][t] -= y;
    b[t][f] -= y;
  }
  // Reduced system without the reference bus; angles in radians * base.
  std::vector<int> idx;
  for (int i = 0; i < n; ++i)
    if (i != ref) idx.push_back(i);
  const int m = static_cast<int>(idx.size());
  std::vector<std::vector<double>> aug(m, std::vector<double>(m + 1, 0.0));
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) aug[r][c] = b[idx[r]][idx[c]];
    aug[r][m] = injection[idx[r]];
  }
  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int r = col + 1; r < m; ++r)
      if (std::abs(aug[r][col]) > std::abs(aug[piv][col])) piv = r;
    if (std::abs(aug[piv][col]) < 1e-14) throw std::runtime_error("singular bus matrix");
    std::swap(aug[piv], aug[col]);
    for (int r = 0; r < m; ++r) {
      if (r == col) continue;
      const double f = aug[r][col] / aug[col][col];
      for (int c = col; c <= m; ++c) aug[r][c] -= f * aug[col][c];
    }
  }
  std::vector<double> angle(n, 0.0);
  for (int r = 0; r < m; ++r) angle[idx[r]] = aug[r][m] / aug[r][r];
  std::vector<double> flows;
  for (const auto& l : grid.lines)
    flows.push_back(l.in_service ? (angle[l.from - 1] - angle[l.to - 1]) / l.reactance : 0.0);
  return flows;
}

}  // namespace oracle

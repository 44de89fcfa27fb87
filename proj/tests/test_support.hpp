#pragma once

#include <string>

#include "lmpf/case_io.hpp"

inline std::string data_path(const std::string& rel) { return std::string(LMPF_DATA_DIR) + "/" + rel; }

inline lmpf::CaseDocument three_bus_document() { return lmpf::read_case_file(data_path("cases/three_bus.json")); }

inline Eigen::VectorXd vec1(double v) {
  Eigen::VectorXd x(1);
  x << v;
  return x;
}

#include "lmpf/errors.hpp"

namespace lmpf {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const Infeasible*>(&e) || dynamic_cast<const EmptyRegion*>(&e)) return 2;
  if (dynamic_cast<const InvalidInput*>(&e)) return 1;
  if (dynamic_cast<const Degenerate*>(&e) || dynamic_cast<const NumericalFailure*>(&e) ||
      dynamic_cast<const Unbounded*>(&e) || dynamic_cast<const BudgetExceeded*>(&e))
    return 3;
  return 3;
}

}  // namespace lmpf

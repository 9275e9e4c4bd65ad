#include "htev/errors.hpp"

namespace htev {

SolverError::SolverError(const std::string& what, double residual, int iters)
    : NumericError(what + " (residual " + std::to_string(residual) + " after " +
                   std::to_string(iters) + " iterations)"),
      last_residual(residual),
      iterations(iters) {}

}  // namespace htev

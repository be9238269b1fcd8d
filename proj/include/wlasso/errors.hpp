#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace wlasso {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct NotPositiveDefinite : Error {
  using Error::Error;
};

struct RankDeficient : Error {
  using Error::Error;
};

struct SingularSystem : Error {
  using Error::Error;
};

struct DegenerateResiduals : Error {
  using Error::Error;
};

struct NonStationaryFit : Error {
  using Error::Error;
};

struct SingularSubGram : Error {
  using Error::Error;
};

struct NotDiagonallyDominant : Error {
  using Error::Error;
};

struct InvalidExponents : Error {
  using Error::Error;
};

struct IncompatibleSize : Error {
  using Error::Error;
};

struct PlacementInfeasible : Error {
  using Error::Error;
};

/// Solver ran out of sweeps; carries the last iterate for inspection.
struct NotConverged : Error {
  NotConverged(const std::string& what, std::vector<double> beta, double kkt)
      : Error(what), last_beta(std::move(beta)), kkt_residual(kkt) {}

  std::vector<double> last_beta;
  double kkt_residual = std::numeric_limits<double>::quiet_NaN();
  std::size_t lambda_index = static_cast<std::size_t>(-1);
};

}  // namespace wlasso

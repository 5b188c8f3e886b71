#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "flowemu/dynsys.hpp"
#include "flowemu/errors.hpp"

namespace flowemu {

/// Axis-aligned box of admissible initial conditions.
struct BoundingBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dim() const { return static_cast<int>(lower.size()); }
  Eigen::VectorXd width() const { return upper - lower; }
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
  void validate() const;  // lower[i] < upper[i] for all i
};

/// Latin hypercube design: n rows, one point per stratum per dimension,
/// jittered uniformly within strata. Deterministic in the seed.
Eigen::MatrixXd latin_hypercube(int n, const BoundingBox& box,
                                std::uint64_t seed);

/// Integrates one trajectory from probe_initial over [0, horizon], samples
/// it every sample_dt, and returns the coordinate-wise extremes inflated by
/// `margin` per side (degenerate dimensions get an absolute 1e-3 pad).
BoundingBox estimate_bounds(const DynamicalSystem& system,
                            const Eigen::VectorXd& probe_initial,
                            double horizon, double margin = 0.05,
                            double sample_dt = 0.01,
                            IntegratorTolerances tol = {});

}  // namespace flowemu

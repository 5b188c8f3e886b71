#include "flowemu/design.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "flowemu/rng.hpp"

namespace flowemu {

bool BoundingBox::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != lower.size()) {
    throw UsageError("BoundingBox::contains: dimension mismatch");
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) {
      return false;
    }
  }
  return true;
}

void BoundingBox::validate() const {
  if (lower.size() == 0 || lower.size() != upper.size()) {
    throw UsageError("bounding box bounds must be non-empty and same size");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) ||
        !(lower[i] < upper[i])) {
      throw UsageError("bounding box requires lower < upper in coordinate " +
                       std::to_string(i));
    }
  }
}

Eigen::MatrixXd latin_hypercube(int n, const BoundingBox& box,
                                std::uint64_t seed) {
  if (n < 1) {
    throw UsageError("latin_hypercube: need n >= 1");
  }
  box.validate();
  const int d = box.dim();
  Rng rng(seed);
  Eigen::MatrixXd design(n, d);
  std::vector<int> strata(static_cast<std::size_t>(n));
  for (int j = 0; j < d; ++j) {
    std::iota(strata.begin(), strata.end(), 0);
    rng.shuffle(strata);
    const double width = (box.upper[j] - box.lower[j]) / n;
    for (int i = 0; i < n; ++i) {
      design(i, j) = box.lower[j] + (strata[i] + rng.uniform()) * width;
    }
  }
  return design;
}

BoundingBox estimate_bounds(const DynamicalSystem& system,
                            const Eigen::VectorXd& probe_initial,
                            double horizon, double margin, double sample_dt,
                            IntegratorTolerances tol) {
  if (!(horizon > 0.0)) {
    throw UsageError("estimate_bounds: horizon must be positive");
  }
  if (!(sample_dt > 0.0)) {
    throw UsageError("estimate_bounds: sample_dt must be positive");
  }
  if (!(margin >= 0.0)) {
    throw UsageError("estimate_bounds: margin must be non-negative");
  }

  Eigen::VectorXd lower = probe_initial;
  Eigen::VectorXd upper = probe_initial;
  Eigen::VectorXd x = probe_initial;
  const long steps = static_cast<long>(std::ceil(horizon / sample_dt));
  for (long k = 0; k < steps; ++k) {
    try {
      x = integrate_step(system, x, sample_dt, tol);
    } catch (const NumericalError& e) {
      std::vector<double> plo(lower.data(), lower.data() + lower.size());
      std::vector<double> pup(upper.data(), upper.data() + upper.size());
      throw DivergenceError(
          "estimate_bounds: trajectory diverged near t=" +
              std::to_string(k * sample_dt) + " (" + e.what() + ")",
          std::move(plo), std::move(pup));
    }
    lower = lower.cwiseMin(x);
    upper = upper.cwiseMax(x);
  }

  BoundingBox box;
  box.lower = lower;
  box.upper = upper;
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    const double width = box.upper[i] - box.lower[i];
    if (width < 1e-12) {
      box.lower[i] -= 1e-3;
      box.upper[i] += 1e-3;
    } else {
      box.lower[i] -= margin * width;
      box.upper[i] += margin * width;
    }
  }
  box.validate();
  return box;
}

}  // namespace flowemu

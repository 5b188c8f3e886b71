#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "flowemu/errors.hpp"
#include "flowemu/kernel.hpp"

namespace flowemu {

/// First-order polynomial prior mean beta0 + beta1 . x.
struct PriorMean {
  double intercept = 0.0;
  Eigen::VectorXd slopes;

  double value_at(const Eigen::VectorXd& x) const {
    return intercept + slopes.dot(x);
  }
  Eigen::VectorXd values_at(const Eigen::MatrixXd& X) const {
    return Eigen::VectorXd::Constant(X.rows(), intercept) + X * slopes;
  }
};

/// One fitted scalar-output emulator. Immutable after construction and
/// safe to share across concurrent readers.
struct GPModel {
  Eigen::MatrixXd design;      // n x d training inputs
  Eigen::VectorXd outputs;     // n training outputs
  KernelSpec kernel;
  PriorMean mean;
  Eigen::MatrixXd cov_factor;  // lower Cholesky factor of K + jitter*I
  Eigen::VectorXd alpha;       // (K + jitter*I)^{-1} (y - mu(X))
  double jitter = 0.0;

  int input_dim() const { return static_cast<int>(design.cols()); }
  int sample_count() const { return static_cast<int>(design.rows()); }
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

struct FitOptions {
  int restarts = 8;              // multi-start local searches (>= 5)
  int max_evals = 600;           // likelihood evaluations per restart
  double step_tol = 1e-5;        // compass-search stop, log length-scale
  double jitter_rel_initial = 1e-10;  // relative to process variance
  double jitter_rel_max = 1e-6;
};

/// Conditions a GP on (design, outputs) with fixed hyperparameters. The
/// Gram diagonal is inflated starting at jitter, escalating x10 up to
/// jitter_rel_max * variance if the factorization fails.
GPModel make_gp_model(const Eigen::MatrixXd& design,
                      const Eigen::VectorXd& outputs, const KernelSpec& kernel,
                      const PriorMean& mean, double jitter);

/// Maximum-likelihood fit: the regression coefficients and process variance
/// are profiled out in closed form; length-scales are found by a seeded
/// multi-start bounded compass search over log scale.
GPModel fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& outputs,
            KernelFamily family, std::uint64_t seed,
            const FitOptions& options = {});

Prediction predict(const GPModel& model, const Eigen::VectorXd& x);

/// Posterior mean and variance at every row of X. Same math as predict(),
/// batched so rollouts avoid per-sample factor solves.
void predict_batch(const GPModel& model, const Eigen::MatrixXd& X,
                   Eigen::VectorXd& means, Eigen::VectorXd& variances);

/// Gaussian log-density of the outputs under the GP prior with the given
/// hyperparameters (nothing profiled). jitter_rel escalates x10 up to 1e-6
/// on factorization failure.
double log_marginal_likelihood(const Eigen::MatrixXd& design,
                               const Eigen::VectorXd& outputs,
                               const PriorMean& mean, const KernelSpec& kernel,
                               double jitter_rel = 1e-10);

/// Leave-one-out mean squared error, hyperparameters held fixed at the
/// fitted values; only the conditioning set changes per fold.
double loo_mse(const GPModel& model);

}  // namespace flowemu

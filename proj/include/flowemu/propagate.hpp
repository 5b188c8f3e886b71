#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>

#include "flowemu/errors.hpp"
#include "flowemu/gp.hpp"
#include "flowemu/rng.hpp"

namespace flowemu {

/// Gaussian approximation of the state at one time index. The covariance is
/// symmetrized and eigenvalue-clipped on construction.
struct StateDistribution {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  int time_index = 0;

  StateDistribution() = default;
  StateDistribution(Eigen::VectorXd mean_in, const Eigen::MatrixXd& cov_in,
                    int time_index_in);

  static StateDistribution deterministic(const Eigen::VectorXd& x,
                                         int time_index = 0);
  int dim() const { return static_cast<int>(mean.size()); }
};

/// Symmetrize, then clip negative eigenvalues to zero. Matrices that are
/// already PSD pass through unchanged apart from exact symmetrization.
Eigen::MatrixXd repair_covariance(const Eigen::MatrixXd& cov);

enum class PropagationMode { PlugIn, UncorrelatedMC, CorrelatedMC };

const char* mode_name(PropagationMode mode);
PropagationMode mode_from_name(const std::string& name);

struct PropagationConfig {
  PropagationMode mode = PropagationMode::CorrelatedMC;
  int n_mc = 1000;
  std::uint64_t seed = 0;

  void validate() const;  // n_mc >= 2 for the MC modes
};

/// Output moments of one scalar emulator under an uncertain input: the
/// predictive mean averaged over the samples, and the variance split into
/// its mean-posterior-variance and variance-of-posterior-mean terms.
struct ScalarMoments {
  double mean = 0.0;
  double variance = 0.0;           // = mean_posterior_var + var_posterior_mean
  double mean_posterior_var = 0.0;
  double var_posterior_mean = 0.0;
};

/// Moment-matched push of input through one emulator using the supplied
/// sample matrix (rows drawn from N(input.mean, input.cov)). A zero input
/// covariance short-circuits to the exact plug-in values.
ScalarMoments propagate_moments_scalar(const GPModel& model,
                                       const StateDistribution& input,
                                       const Eigen::MatrixXd& samples);

/// Monte Carlo cross-covariance between two emulators' posterior means over
/// a shared sample matrix (common random numbers); independent GPs become
/// correlated only through the random input.
double cross_covariance(const GPModel& model_a, const GPModel& model_b,
                        const Eigen::MatrixXd& samples);

/// count x d matrix of draws from the distribution, using the symmetric
/// factorization of the (repaired) covariance.
Eigen::MatrixXd sample_gaussian(const StateDistribution& input, int count,
                                Rng& rng);

/// One time step of the state distribution through the d coordinate
/// emulators. The per-step sample seed is derived from config.seed and the
/// input's time index, so rollouts are reproducible step by step.
StateDistribution step_distribution(std::span<const GPModel> models,
                                    const StateDistribution& input,
                                    const PropagationConfig& config);

}  // namespace flowemu

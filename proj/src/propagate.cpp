#include "flowemu/propagate.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <utility>

namespace flowemu {

namespace {

// Biased (1/n) covariance of two equal-length value vectors, computed from
// centered values. Both the Eq.-(9) variance term and the cross-covariance
// go through here so that Cov(Z, Z) reproduces Var(Z) bit for bit.
double mc_covariance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const auto n = static_cast<double>(a.size());
  const double mean_a = a.mean();
  const double mean_b = b.mean();
  return (a.array() - mean_a).matrix().dot((b.array() - mean_b).matrix()) / n;
}

ScalarMoments moments_from(const Eigen::VectorXd& means,
                           const Eigen::VectorXd& variances) {
  ScalarMoments m;
  m.mean = means.mean();
  m.mean_posterior_var = variances.mean();
  m.var_posterior_mean = mc_covariance(means, means);
  m.variance = m.mean_posterior_var + m.var_posterior_mean;
  return m;
}

}  // namespace

StateDistribution::StateDistribution(Eigen::VectorXd mean_in,
                                     const Eigen::MatrixXd& cov_in,
                                     int time_index_in)
    : mean(std::move(mean_in)), time_index(time_index_in) {
  if (!mean.allFinite()) {
    throw UsageError("StateDistribution: non-finite mean");
  }
  if (cov_in.rows() != mean.size() || cov_in.cols() != mean.size()) {
    throw UsageError("StateDistribution: covariance shape mismatch");
  }
  if (!cov_in.allFinite()) {
    throw UsageError("StateDistribution: non-finite covariance");
  }
  if (time_index < 0) {
    throw UsageError("StateDistribution: negative time index");
  }
  cov = repair_covariance(cov_in);
}

StateDistribution StateDistribution::deterministic(const Eigen::VectorXd& x,
                                                   int time_index) {
  return {x, Eigen::MatrixXd::Zero(x.size(), x.size()), time_index};
}

Eigen::MatrixXd repair_covariance(const Eigen::MatrixXd& cov) {
  Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("repair_covariance: eigendecomposition failed");
  }
  if (solver.eigenvalues().minCoeff() >= 0.0) {
    return sym;  // keep the original values when no clipping is needed
  }
  const Eigen::VectorXd clipped = solver.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd repaired = solver.eigenvectors() * clipped.asDiagonal() *
                             solver.eigenvectors().transpose();
  return 0.5 * (repaired + repaired.transpose());
}

const char* mode_name(PropagationMode mode) {
  switch (mode) {
    case PropagationMode::PlugIn:
      return "plugin";
    case PropagationMode::UncorrelatedMC:
      return "uncorrelated";
    case PropagationMode::CorrelatedMC:
      return "correlated";
  }
  return "unknown";
}

PropagationMode mode_from_name(const std::string& name) {
  if (name == "plugin") return PropagationMode::PlugIn;
  if (name == "uncorrelated") return PropagationMode::UncorrelatedMC;
  if (name == "correlated") return PropagationMode::CorrelatedMC;
  throw ConfigError("unknown propagation mode '" + name +
                    "' (expected plugin, uncorrelated or correlated)");
}

void PropagationConfig::validate() const {
  if (mode != PropagationMode::PlugIn && n_mc < 2) {
    throw UsageError("PropagationConfig: Monte Carlo modes need n_mc >= 2");
  }
}

ScalarMoments propagate_moments_scalar(const GPModel& model,
                                       const StateDistribution& input,
                                       const Eigen::MatrixXd& samples) {
  if (input.cov.isZero(0.0)) {
    const Prediction p = predict(model, input.mean);
    return {p.mean, p.variance, p.variance, 0.0};
  }
  Eigen::VectorXd means, variances;
  predict_batch(model, samples, means, variances);
  return moments_from(means, variances);
}

double cross_covariance(const GPModel& model_a, const GPModel& model_b,
                        const Eigen::MatrixXd& samples) {
  Eigen::VectorXd means_a, means_b, unused;
  predict_batch(model_a, samples, means_a, unused);
  predict_batch(model_b, samples, means_b, unused);
  return mc_covariance(means_a, means_b);
}

Eigen::MatrixXd sample_gaussian(const StateDistribution& input, int count,
                                Rng& rng) {
  if (count < 1) {
    throw UsageError("sample_gaussian: need count >= 1");
  }
  const int d = input.dim();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(input.cov);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("sample_gaussian: covariance factorization failed");
  }
  const Eigen::MatrixXd transform =
      solver.eigenvectors() *
      solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  Eigen::MatrixXd samples(count, d);
  Eigen::VectorXd z(d);
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < d; ++j) {
      z[j] = rng.normal();
    }
    samples.row(i) = (input.mean + transform * z).transpose();
  }
  if (!samples.allFinite()) {
    throw NumericalError("sample_gaussian: non-finite draw");
  }
  return samples;
}

StateDistribution step_distribution(std::span<const GPModel> models,
                                    const StateDistribution& input,
                                    const PropagationConfig& config) {
  config.validate();
  const int d = static_cast<int>(models.size());
  if (d < 1) {
    throw UsageError("step_distribution: no models");
  }
  if (input.dim() != d) {
    throw UsageError("step_distribution: input dimension mismatch");
  }
  for (const GPModel& model : models) {
    if (model.input_dim() != d) {
      throw UsageError("step_distribution: model input dimension mismatch");
    }
  }

  // A deterministic input collapses every mode to the plug-in step, with
  // exactly zero cross terms (the coordinate emulators are independent).
  if (config.mode == PropagationMode::PlugIn || input.cov.isZero(0.0)) {
    Eigen::VectorXd mean(d);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (int l = 0; l < d; ++l) {
      const Prediction p = predict(models[l], input.mean);
      mean[l] = p.mean;
      cov(l, l) = p.variance;
    }
    return {std::move(mean), cov, input.time_index + 1};
  }

  Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(input.time_index)));
  const Eigen::MatrixXd samples = sample_gaussian(input, config.n_mc, rng);

  Eigen::MatrixXd posterior_means(config.n_mc, d);
  Eigen::MatrixXd posterior_vars(config.n_mc, d);
  Eigen::VectorXd means_l, vars_l;
  for (int l = 0; l < d; ++l) {
    predict_batch(models[l], samples, means_l, vars_l);
    posterior_means.col(l) = means_l;
    posterior_vars.col(l) = vars_l;
  }

  Eigen::VectorXd mean(d);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (int l = 0; l < d; ++l) {
    const ScalarMoments m =
        moments_from(posterior_means.col(l), posterior_vars.col(l));
    mean[l] = m.mean;
    cov(l, l) = m.variance;
  }
  if (config.mode == PropagationMode::CorrelatedMC) {
    for (int l = 0; l < d; ++l) {
      for (int j = l + 1; j < d; ++j) {
        const double c =
            mc_covariance(posterior_means.col(l), posterior_means.col(j));
        cov(l, j) = c;
        cov(j, l) = c;
      }
    }
  }
  return {std::move(mean), cov, input.time_index + 1};
}

}  // namespace flowemu

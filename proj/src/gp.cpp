#include "flowemu/gp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "flowemu/rng.hpp"

namespace flowemu {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // ln(2*pi)

struct CholResult {
  Eigen::MatrixXd factor;  // lower triangular
  double jitter_rel = 0.0;
  bool ok = false;
};

// Factorizes R + eps*I, escalating eps x10 from eps_init up to eps_max.
CholResult factor_correlation(const Eigen::MatrixXd& R, double eps_init,
                              double eps_max) {
  CholResult result;
  double eps = eps_init;
  while (true) {
    Eigen::MatrixXd M = R;
    M.diagonal().array() += eps;
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() == Eigen::Success) {
      result.factor = llt.matrixL();
      result.jitter_rel = eps;
      result.ok = true;
      return result;
    }
    if (eps >= eps_max) {
      return result;
    }
    eps = (eps <= 0.0) ? 1e-10 : eps * 10.0;
  }
}

Eigen::MatrixXd regression_matrix(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd F(X.rows(), X.cols() + 1);
  F.col(0).setOnes();
  F.rightCols(X.cols()) = X;
  return F;
}

struct ProfileResult {
  bool ok = false;
  double lml = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd beta;
  double sigma2 = 0.0;
  double jitter_rel = 0.0;
};

// Concentrated log-likelihood at fixed length-scales: beta by generalized
// least squares on the whitened regressors, sigma^2 by its closed form.
ProfileResult profile_likelihood(const Eigen::MatrixXd& X,
                                 const Eigen::VectorXd& y, KernelFamily family,
                                 const Eigen::VectorXd& theta, double eps_init,
                                 double eps_max) {
  ProfileResult result;
  const auto n = static_cast<double>(X.rows());

  const Eigen::MatrixXd R = correlation_matrix(family, theta, X);
  const CholResult chol = factor_correlation(R, eps_init, eps_max);
  if (!chol.ok) {
    return result;
  }
  const auto L = chol.factor.triangularView<Eigen::Lower>();

  const Eigen::MatrixXd Fw = L.solve(regression_matrix(X));
  const Eigen::VectorXd yw = L.solve(y);
  result.beta = Fw.colPivHouseholderQr().solve(yw);
  const Eigen::VectorXd resid = yw - Fw * result.beta;
  result.sigma2 = std::max(resid.squaredNorm() / n, 1e-300);
  result.jitter_rel = chol.jitter_rel;

  const double log_det_corr = 2.0 * chol.factor.diagonal().array().log().sum();
  result.lml = -0.5 * n * kLog2Pi - 0.5 * n * std::log(result.sigma2) -
               0.5 * log_det_corr - 0.5 * n;
  result.ok = std::isfinite(result.lml);
  return result;
}

template <typename Objective>
std::pair<Eigen::VectorXd, double> compass_maximize(
    Objective&& objective, Eigen::VectorXd z, const Eigen::VectorXd& zlo,
    const Eigen::VectorXd& zhi, int max_evals, double step_tol) {
  const auto d = z.size();
  for (Eigen::Index j = 0; j < d; ++j) {
    z[j] = std::clamp(z[j], zlo[j], zhi[j]);
  }
  Eigen::VectorXd step = 0.25 * (zhi - zlo);
  double best = objective(z);
  int evals = 1;
  while (evals < max_evals && (step.array() > step_tol).any()) {
    bool improved = false;
    for (Eigen::Index j = 0; j < d && evals < max_evals; ++j) {
      for (const double sign : {1.0, -1.0}) {
        const double moved = std::clamp(z[j] + sign * step[j], zlo[j], zhi[j]);
        if (moved == z[j]) {
          continue;
        }
        Eigen::VectorXd candidate = z;
        candidate[j] = moved;
        const double value = objective(candidate);
        ++evals;
        if (value > best) {
          best = value;
          z = std::move(candidate);
          improved = true;
        }
        if (evals >= max_evals) {
          break;
        }
      }
    }
    if (!improved) {
      step *= 0.5;
    }
  }
  return {z, best};
}

void check_training_data(const Eigen::MatrixXd& design,
                         const Eigen::VectorXd& outputs) {
  const auto n = design.rows();
  const auto d = design.cols();
  if (outputs.size() != n) {
    throw UsageError("fit: outputs length does not match design rows");
  }
  if (d < 1) {
    throw UsageError("fit: design needs at least one column");
  }
  if (n < d + 2) {
    throw UsageError("fit: need at least d+2 samples to identify the linear "
                     "prior mean (n=" +
                     std::to_string(n) + ", d=" + std::to_string(d) + ")");
  }
  if (!design.allFinite() || !outputs.allFinite()) {
    throw UsageError("fit: training data must be finite");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if ((design.row(i).array() == design.row(j).array()).all()) {
        throw NumericalError("fit: duplicate design rows " +
                             std::to_string(i) + " and " + std::to_string(j) +
                             " make the covariance singular");
      }
    }
  }
}

Eigen::VectorXd column_ranges(const Eigen::MatrixXd& design) {
  Eigen::VectorXd ranges =
      design.colwise().maxCoeff() - design.colwise().minCoeff();
  for (Eigen::Index j = 0; j < ranges.size(); ++j) {
    if (!(ranges[j] > 0.0)) {
      ranges[j] = 1.0;
    }
  }
  return ranges;
}

}  // namespace

GPModel make_gp_model(const Eigen::MatrixXd& design,
                      const Eigen::VectorXd& outputs, const KernelSpec& kernel,
                      const PriorMean& mean, double jitter) {
  kernel.validate();
  if (design.cols() != kernel.dim()) {
    throw UsageError("make_gp_model: design/kernel dimension mismatch");
  }
  if (outputs.size() != design.rows()) {
    throw UsageError("make_gp_model: outputs length mismatch");
  }
  if (mean.slopes.size() != design.cols()) {
    throw UsageError("make_gp_model: prior-mean dimension mismatch");
  }
  if (!(jitter >= 0.0) || !std::isfinite(jitter)) {
    throw UsageError("make_gp_model: jitter must be non-negative");
  }

  const Eigen::MatrixXd R =
      correlation_matrix(kernel.family, kernel.lengthscales, design);
  const double jitter_max = kernel.variance * 1e-6;
  double j = jitter;
  Eigen::LLT<Eigen::MatrixXd> llt;
  while (true) {
    Eigen::MatrixXd M = kernel.variance * R;
    M.diagonal().array() += j;
    llt.compute(M);
    if (llt.info() == Eigen::Success) {
      break;
    }
    if (j >= jitter_max) {
      throw NumericalError(
          "make_gp_model: covariance not positive definite after jitter "
          "escalation to " +
          std::to_string(j));
    }
    j = (j <= 0.0) ? kernel.variance * 1e-10 : j * 10.0;
  }

  GPModel model;
  model.design = design;
  model.outputs = outputs;
  model.kernel = kernel;
  model.mean = mean;
  model.jitter = j;
  model.cov_factor = llt.matrixL();
  const Eigen::VectorXd resid = outputs - mean.values_at(design);
  const auto L = model.cov_factor.triangularView<Eigen::Lower>();
  model.alpha = L.transpose().solve(L.solve(resid));
  return model;
}

GPModel fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& outputs,
            KernelFamily family, std::uint64_t seed,
            const FitOptions& options) {
  check_training_data(design, outputs);
  const auto d = design.cols();

  const Eigen::VectorXd ranges = column_ranges(design);

  // Degenerate outputs: nothing for the covariance to explain.
  if (outputs.maxCoeff() == outputs.minCoeff()) {
    KernelSpec kernel{family, 1e-12, ranges};
    PriorMean mean{outputs[0], Eigen::VectorXd::Zero(d)};
    return make_gp_model(design, outputs, kernel, mean,
                         kernel.variance * options.jitter_rel_initial);
  }

  const Eigen::VectorXd zlo = (1e-2 * ranges.array()).log().matrix();
  const Eigen::VectorXd zhi = (1e2 * ranges.array()).log().matrix();

  const auto objective = [&](const Eigen::VectorXd& z) {
    const Eigen::VectorXd theta = z.array().exp().matrix();
    return profile_likelihood(design, outputs, family, theta,
                              options.jitter_rel_initial,
                              options.jitter_rel_max)
        .lml;
  };

  Eigen::VectorXd best_z;
  double best_value = -std::numeric_limits<double>::infinity();
  bool any_ok = false;
  for (int restart = 0; restart < std::max(options.restarts, 1); ++restart) {
    Eigen::VectorXd z0(d);
    if (restart == 0) {
      z0 = ranges.array().log().matrix();
    } else {
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(restart)));
      for (Eigen::Index j = 0; j < d; ++j) {
        z0[j] = rng.uniform(zlo[j], zhi[j]);
      }
    }
    auto [z, value] = compass_maximize(objective, z0, zlo, zhi,
                                       options.max_evals, options.step_tol);
    if (std::isfinite(value) && value > best_value) {
      best_value = value;
      best_z = z;
      any_ok = true;
    }
  }
  if (!any_ok) {
    throw NumericalError(
        "fit: likelihood could not be evaluated on any restart (best value " +
        std::to_string(best_value) + "); check the design conditioning");
  }

  const Eigen::VectorXd theta = best_z.array().exp().matrix();
  const ProfileResult profile =
      profile_likelihood(design, outputs, family, theta,
                         options.jitter_rel_initial, options.jitter_rel_max);
  if (!profile.ok) {
    throw NumericalError("fit: final profile evaluation failed");
  }

  KernelSpec kernel{family, profile.sigma2, theta};
  PriorMean mean{profile.beta[0], profile.beta.tail(d)};
  return make_gp_model(design, outputs, kernel, mean,
                       profile.sigma2 * profile.jitter_rel);
}

Prediction predict(const GPModel& model, const Eigen::VectorXd& x) {
  if (!x.allFinite()) {
    throw UsageError("predict: non-finite input");
  }
  if (x.size() != model.design.cols()) {
    throw UsageError("predict: input dimension mismatch");
  }
  const Eigen::Index n = model.design.rows();
  Eigen::VectorXd kx(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    kx[i] = model.kernel.variance *
            correlation(model.kernel.family, model.kernel.lengthscales,
                        model.design.row(i).transpose(), x);
  }
  Prediction out;
  out.mean = model.mean.value_at(x) + kx.dot(model.alpha);
  const Eigen::VectorXd v =
      model.cov_factor.triangularView<Eigen::Lower>().solve(kx);
  const double kxx = model.kernel.variance;  // stationary: k(x, x) = sigma^2
  out.variance = std::clamp(kxx - v.squaredNorm(), 0.0, kxx);
  return out;
}

void predict_batch(const GPModel& model, const Eigen::MatrixXd& X,
                   Eigen::VectorXd& means, Eigen::VectorXd& variances) {
  if (!X.allFinite()) {
    throw UsageError("predict_batch: non-finite input");
  }
  if (X.cols() != model.design.cols()) {
    throw UsageError("predict_batch: input dimension mismatch");
  }
  const Eigen::MatrixXd Kx =
      model.kernel.variance *
      cross_correlation(model.kernel.family, model.kernel.lengthscales, X,
                        model.design);
  means = model.mean.values_at(X) + Kx * model.alpha;
  const Eigen::MatrixXd V =
      model.cov_factor.triangularView<Eigen::Lower>().solve(Kx.transpose());
  const double kxx = model.kernel.variance;
  const Eigen::VectorXd explained = V.colwise().squaredNorm().transpose();
  variances = (kxx - explained.array()).max(0.0).min(kxx).matrix();
}

double log_marginal_likelihood(const Eigen::MatrixXd& design,
                               const Eigen::VectorXd& outputs,
                               const PriorMean& mean, const KernelSpec& kernel,
                               double jitter_rel) {
  kernel.validate();
  if (design.cols() != kernel.dim() || outputs.size() != design.rows() ||
      mean.slopes.size() != design.cols()) {
    throw UsageError("log_marginal_likelihood: dimension mismatch");
  }
  const auto n = static_cast<double>(design.rows());

  const Eigen::MatrixXd R =
      correlation_matrix(kernel.family, kernel.lengthscales, design);
  const CholResult chol =
      factor_correlation(R, jitter_rel, std::max(jitter_rel, 1e-6));
  if (!chol.ok) {
    throw NumericalError(
        "log_marginal_likelihood: correlation matrix not positive definite "
        "after jitter escalation");
  }
  const Eigen::VectorXd resid = outputs - mean.values_at(design);
  const Eigen::VectorXd white =
      chol.factor.triangularView<Eigen::Lower>().solve(resid);
  const double quad = white.squaredNorm() / kernel.variance;
  const double log_det =
      n * std::log(kernel.variance) +
      2.0 * chol.factor.diagonal().array().log().sum();
  return -0.5 * (quad + log_det + n * kLog2Pi);
}

double loo_mse(const GPModel& model) {
  const Eigen::Index n = model.design.rows();
  const Eigen::Index d = model.design.cols();
  if (n < d + 3) {
    throw UsageError("loo_mse: need at least d+3 samples, have " +
                     std::to_string(n));
  }
  // Fixed hyperparameters: the fold-i predictor error is alpha_i / Minv_ii
  // with M = K + jitter*I (classical kriging cross-validation identity).
  const auto L = model.cov_factor.triangularView<Eigen::Lower>();
  Eigen::MatrixXd Minv = Eigen::MatrixXd::Identity(n, n);
  L.solveInPlace(Minv);
  L.transpose().solveInPlace(Minv);
  double mse = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double residual = model.alpha[i] / Minv(i, i);
    mse += residual * residual;
  }
  return mse / static_cast<double>(n);
}

}  // namespace flowemu

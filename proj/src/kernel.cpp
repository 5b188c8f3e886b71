#include "flowemu/kernel.hpp"

#include <cmath>

namespace flowemu {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

// Unit-variance correlation between rows a and b of two matrices. Scalar
// accumulation keeps the batch routines bitwise-consistent with the
// single-point path and free of temporaries.
template <typename RowA, typename RowB>
double row_correlation(KernelFamily family, const Eigen::VectorXd& theta,
                       const RowA& a, const RowB& b) {
  const Eigen::Index d = theta.size();
  switch (family) {
    case KernelFamily::SquaredExponential: {
      double q = 0.0;
      for (Eigen::Index l = 0; l < d; ++l) {
        const double u = (a[l] - b[l]) / theta[l];
        q += u * u;
      }
      return std::exp(-0.5 * q);
    }
    case KernelFamily::Matern32: {
      double s = 0.0;
      double p = 1.0;
      for (Eigen::Index l = 0; l < d; ++l) {
        const double v = kSqrt3 * std::abs(a[l] - b[l]) / theta[l];
        s += v;
        p *= 1.0 + v;
      }
      return p * std::exp(-s);
    }
    case KernelFamily::Exponential: {
      double s = 0.0;
      for (Eigen::Index l = 0; l < d; ++l) {
        s += std::abs(a[l] - b[l]) / theta[l];
      }
      return std::exp(-s);
    }
  }
  throw UsageError("unknown kernel family");
}

}  // namespace

const char* family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::SquaredExponential:
      return "squared_exponential";
    case KernelFamily::Matern32:
      return "matern32";
    case KernelFamily::Exponential:
      return "exponential";
  }
  return "unknown";
}

KernelFamily family_from_name(const std::string& name) {
  if (name == "squared_exponential") return KernelFamily::SquaredExponential;
  if (name == "matern32") return KernelFamily::Matern32;
  if (name == "exponential") return KernelFamily::Exponential;
  throw ConfigError("unknown kernel family '" + name +
                    "' (expected squared_exponential, matern32 or exponential)");
}

void KernelSpec::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw UsageError("kernel variance must be positive and finite");
  }
  if (lengthscales.size() == 0) {
    throw UsageError("kernel needs at least one length-scale");
  }
  for (Eigen::Index l = 0; l < lengthscales.size(); ++l) {
    if (!(lengthscales[l] > 0.0) || !std::isfinite(lengthscales[l])) {
      throw UsageError("kernel length-scales must be positive and finite");
    }
  }
}

double correlation(KernelFamily family, const Eigen::VectorXd& lengthscales,
                   const Eigen::VectorXd& x, const Eigen::VectorXd& x2) {
  if (x.size() != lengthscales.size() || x2.size() != lengthscales.size()) {
    throw UsageError("kernel input dimension does not match length-scales");
  }
  return row_correlation(family, lengthscales, x, x2);
}

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& x2) {
  spec.validate();
  return spec.variance * correlation(spec.family, spec.lengthscales, x, x2);
}

Eigen::MatrixXd correlation_matrix(KernelFamily family,
                                   const Eigen::VectorXd& lengthscales,
                                   const Eigen::MatrixXd& X) {
  if (X.cols() != lengthscales.size()) {
    throw UsageError("kernel input dimension does not match length-scales");
  }
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd R(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    R(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double r =
          row_correlation(family, lengthscales, X.row(i), X.row(j));
      R(i, j) = r;
      R(j, i) = r;
    }
  }
  return R;
}

Eigen::MatrixXd cross_correlation(KernelFamily family,
                                  const Eigen::VectorXd& lengthscales,
                                  const Eigen::MatrixXd& A,
                                  const Eigen::MatrixXd& B) {
  if (A.cols() != lengthscales.size() || B.cols() != lengthscales.size()) {
    throw UsageError("kernel input dimension does not match length-scales");
  }
  Eigen::MatrixXd K(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
      K(i, j) = row_correlation(family, lengthscales, A.row(i), B.row(j));
    }
  }
  return K;
}

}  // namespace flowemu

#pragma once

#include <Eigen/Dense>
#include <string>

#include "flowemu/errors.hpp"

namespace flowemu {

enum class KernelFamily { SquaredExponential, Matern32, Exponential };

const char* family_name(KernelFamily family);
KernelFamily family_from_name(const std::string& name);

/// Stationary covariance kernel in per-dimension product form with
/// anisotropic length-scales: the squared-exponential product template,
/// with Matern 3/2 and exponential factors as alternatives.
struct KernelSpec {
  KernelFamily family = KernelFamily::SquaredExponential;
  double variance = 1.0;           // process variance sigma^2
  Eigen::VectorXd lengthscales;    // one per input dimension, all > 0

  int dim() const { return static_cast<int>(lengthscales.size()); }
  void validate() const;
};

/// Covariance between two points. Always in (0, variance].
double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& x2);

/// Unit-variance correlation between two points.
double correlation(KernelFamily family, const Eigen::VectorXd& lengthscales,
                   const Eigen::VectorXd& x, const Eigen::VectorXd& x2);

/// n x n correlation matrix over the rows of X.
Eigen::MatrixXd correlation_matrix(KernelFamily family,
                                   const Eigen::VectorXd& lengthscales,
                                   const Eigen::MatrixXd& X);

/// m x n cross-correlation matrix between rows of A and rows of B.
Eigen::MatrixXd cross_correlation(KernelFamily family,
                                  const Eigen::VectorXd& lengthscales,
                                  const Eigen::MatrixXd& A,
                                  const Eigen::MatrixXd& B);

}  // namespace flowemu

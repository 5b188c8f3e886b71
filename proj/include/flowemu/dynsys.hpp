#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "flowemu/errors.hpp"

namespace flowemu {

/// Right-hand side of an autonomous ODE system: dxdt is resized by the
/// caller; implementations must be deterministic and finite on the domain
/// of interest.
using RhsFn = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& dxdt)>;

struct DynamicalSystem {
  std::string name;
  int dimension = 0;
  RhsFn rhs;
  std::map<std::string, double> params;
};

Eigen::Vector3d lorenz_rhs(const Eigen::Vector3d& state, double a, double b,
                           double c);
Eigen::Vector2d vanderpol_rhs(const Eigen::Vector2d& state, double alpha);

DynamicalSystem make_lorenz(double a = -8.0 / 3.0, double b = -10.0,
                            double c = 28.0);
DynamicalSystem make_vanderpol(double alpha = 5.0);

/// Programmatic registry so user-defined systems can be addressed by name
/// from experiment configs.
using SystemFactory =
    std::function<DynamicalSystem(const std::map<std::string, double>&)>;
void register_system(const std::string& name, SystemFactory factory);
DynamicalSystem make_system(const std::string& name,
                            const std::map<std::string, double>& params);

struct IntegratorTolerances {
  double absolute = 1e-10;
  double relative = 1e-8;
};

/// Advances the state by dt with an adaptive embedded Runge-Kutta 5(4)
/// pair (Dormand-Prince); the final partial step is resolved with the
/// stepper's dense-output interpolant.
Eigen::VectorXd integrate_step(const DynamicalSystem& system,
                               const Eigen::VectorXd& x0, double dt,
                               IntegratorTolerances tol = {});

/// One row of flow-map training data: x1 = Phi(x0, dt) up to integrator
/// tolerance.
struct FlowMapSample {
  Eigen::VectorXd x0;
  Eigen::VectorXd x1;
  double dt = 0.0;
};

std::vector<FlowMapSample> generate_training(const DynamicalSystem& system,
                                             const Eigen::MatrixXd& design,
                                             double dt,
                                             IntegratorTolerances tol = {});

}  // namespace flowemu

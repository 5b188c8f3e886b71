#include "flowemu/dynsys.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace flowemu {

namespace {

// Dormand-Prince 5(4) coefficients, including the dense-output weights.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0,
                 c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                 a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                 a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0,
                 a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0,
                 d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0,
                 d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0,
                 d7 = 69997945.0 / 29380423.0;

constexpr long kMaxSteps = 200000;

double get_param(const std::map<std::string, double>& params,
                 const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown_params(const std::map<std::string, double>& params,
                           std::initializer_list<const char*> allowed,
                           const std::string& system) {
  for (const auto& [key, value] : params) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end()) {
      throw ConfigError("unknown parameter '" + key + "' for system '" +
                        system + "'");
    }
  }
}

std::map<std::string, SystemFactory>& system_registry() {
  static std::map<std::string, SystemFactory> registry = {
      {"lorenz",
       [](const std::map<std::string, double>& params) {
         reject_unknown_params(params, {"a", "b", "c"}, "lorenz");
         return make_lorenz(get_param(params, "a", -8.0 / 3.0),
                            get_param(params, "b", -10.0),
                            get_param(params, "c", 28.0));
       }},
      {"vanderpol", [](const std::map<std::string, double>& params) {
         reject_unknown_params(params, {"alpha"}, "vanderpol");
         return make_vanderpol(get_param(params, "alpha", 5.0));
       }}};
  return registry;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

Eigen::Vector3d lorenz_rhs(const Eigen::Vector3d& state, double a, double b,
                           double c) {
  return {a * state[0] + state[1] * state[2],
          b * (state[1] - state[2]),
          -state[0] * state[1] + c * state[1] - state[2]};
}

Eigen::Vector2d vanderpol_rhs(const Eigen::Vector2d& state, double alpha) {
  return {state[1],
          alpha * (1.0 - state[0] * state[0]) * state[1] - state[0]};
}

DynamicalSystem make_lorenz(double a, double b, double c) {
  DynamicalSystem system;
  system.name = "lorenz";
  system.dimension = 3;
  system.params = {{"a", a}, {"b", b}, {"c", c}};
  system.rhs = [a, b, c](const Eigen::VectorXd& x, Eigen::VectorXd& dxdt) {
    dxdt = lorenz_rhs(Eigen::Vector3d(x), a, b, c);
  };
  return system;
}

DynamicalSystem make_vanderpol(double alpha) {
  DynamicalSystem system;
  system.name = "vanderpol";
  system.dimension = 2;
  system.params = {{"alpha", alpha}};
  system.rhs = [alpha](const Eigen::VectorXd& x, Eigen::VectorXd& dxdt) {
    dxdt = vanderpol_rhs(Eigen::Vector2d(x), alpha);
  };
  return system;
}

void register_system(const std::string& name, SystemFactory factory) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  system_registry()[name] = std::move(factory);
}

DynamicalSystem make_system(const std::string& name,
                            const std::map<std::string, double>& params) {
  SystemFactory factory;
  {
    std::lock_guard<std::mutex> lock(registry_mutex());
    auto& registry = system_registry();
    auto it = registry.find(name);
    if (it == registry.end()) {
      throw ConfigError("unknown system '" + name + "'");
    }
    factory = it->second;
  }
  return factory(params);
}

Eigen::VectorXd integrate_step(const DynamicalSystem& system,
                               const Eigen::VectorXd& x0, double dt,
                               IntegratorTolerances tol) {
  if (!(dt > 0.0)) {
    throw UsageError("integrate_step: dt must be positive");
  }
  if (!x0.allFinite()) {
    throw UsageError("integrate_step: non-finite initial state");
  }
  if (x0.size() != system.dimension) {
    throw UsageError("integrate_step: state dimension mismatch");
  }

  const Eigen::Index n = x0.size();
  Eigen::VectorXd y = x0;
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  Eigen::VectorXd stage(n), ynew(n), yerr(n);

  system.rhs(y, k1);  // FSAL: reused across accepted steps
  double t = 0.0;
  double h = dt;
  double facold = 1e-4;
  constexpr double safe = 0.9, beta = 0.04, facl = 0.2, facr = 10.0;
  constexpr double expo1 = 0.2 - beta * 0.75;
  bool rejected = false;

  for (long step = 0; step < kMaxSteps; ++step) {
    if (!(h > 16.0 * std::numeric_limits<double>::epsilon() *
                  std::max(1.0, t))) {
      throw IntegrationError("integrate_step: step size underflow at t=" +
                             std::to_string(t));
    }

    stage = y + h * (a21 * k1);
    system.rhs(stage, k2);
    stage = y + h * (a31 * k1 + a32 * k2);
    system.rhs(stage, k3);
    stage = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    system.rhs(stage, k4);
    stage = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    system.rhs(stage, k5);
    stage = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    system.rhs(stage, k6);
    ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    system.rhs(ynew, k7);
    yerr = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc = tol.absolute +
                        tol.relative * std::max(std::abs(y[i]),
                                                std::abs(ynew[i]));
      const double q = yerr[i] / sc;
      err += q * q;
    }
    err = std::sqrt(err / static_cast<double>(n));
    if (!std::isfinite(err) || !ynew.allFinite()) {
      err = 1e10;  // force rejection; underflow guard terminates blow-ups
    }

    const double fac11 = std::pow(err, expo1);
    if (err <= 1.0) {
      facold = std::max(err, 1e-4);
      if (t + h >= dt) {
        if (t + h == dt) {
          return ynew;
        }
        // Dense output: fourth-order interpolant over the accepted step.
        const double theta = (dt - t) / h;
        const Eigen::VectorXd ydiff = ynew - y;
        const Eigen::VectorXd bspl = h * k1 - ydiff;
        const Eigen::VectorXd r4 = ydiff - h * k7 - bspl;
        const Eigen::VectorXd r5 =
            h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        Eigen::VectorXd out =
            y + theta * (ydiff +
                         (1.0 - theta) *
                             (bspl + theta * (r4 + (1.0 - theta) * r5)));
        if (!out.allFinite()) {
          throw IntegrationError("integrate_step: non-finite interpolant");
        }
        return out;
      }
      t += h;
      y = ynew;
      k1 = k7;
      double fac = fac11 / std::pow(facold, beta);
      fac = std::max(1.0 / facr, std::min(1.0 / facl, fac / safe));
      double hnew = h / fac;
      if (rejected) {
        hnew = std::min(hnew, h);
      }
      rejected = false;
      h = hnew;
    } else {
      h = h / std::min(1.0 / facl, fac11 / safe);
      rejected = true;
    }
  }
  throw IntegrationError("integrate_step: exceeded step limit");
}

std::vector<FlowMapSample> generate_training(const DynamicalSystem& system,
                                             const Eigen::MatrixXd& design,
                                             double dt,
                                             IntegratorTolerances tol) {
  if (design.cols() != system.dimension) {
    throw UsageError("generate_training: design dimension mismatch");
  }
  std::vector<FlowMapSample> samples;
  samples.reserve(static_cast<std::size_t>(design.rows()));
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    const Eigen::VectorXd x0 = design.row(i).transpose();
    try {
      samples.push_back({x0, integrate_step(system, x0, dt, tol), dt});
    } catch (const NumericalError& e) {
      throw NumericalError("training row " + std::to_string(i) + ": " +
                           e.what());
    }
  }
  return samples;
}

}  // namespace flowemu

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flowemu/design.hpp"
#include "flowemu/dynsys.hpp"
#include "flowemu/gp.hpp"
#include "flowemu/propagate.hpp"

namespace flowemu {

/// d independent coordinate emulators of the flow map, sharing one design,
/// plus the emulation time step and the design box.
struct FlowMapEmulator {
  std::vector<GPModel> models;
  double dt = 0.0;
  BoundingBox box;

  int dimension() const { return static_cast<int>(models.size()); }
  void validate() const;
};

struct BuildOptions {
  KernelFamily family = KernelFamily::SquaredExponential;
  std::uint64_t design_seed = 0;
  std::uint64_t fit_seed = 0;
  FitOptions fit{};
  IntegratorTolerances tol{};
};

/// Algorithm: Latin hypercube over the box, one simulator run per design
/// point over [0, dt], then one GP fitted per state coordinate.
FlowMapEmulator build_emulator(const DynamicalSystem& system,
                               const BoundingBox& box, int n, double dt,
                               const BuildOptions& options);

/// Single-seed convenience overload; design and fit sub-seeds are derived.
FlowMapEmulator build_emulator(const DynamicalSystem& system,
                               const BoundingBox& box, int n, double dt,
                               KernelFamily family, std::uint64_t seed);

/// Iterated one-step-ahead prediction: states[0] is the exact initial
/// condition, each later state comes from step_distribution, and gen_var
/// tracks det(cov) per step. A propagation failure at step k truncates the
/// trajectory and records the error.
struct TrajectoryPrediction {
  std::vector<StateDistribution> states;
  std::vector<double> gen_var;
  PropagationConfig config;
  double dt = 0.0;
  std::string error;
  int failed_step = -1;

  int steps_completed() const {
    return static_cast<int>(states.size()) - 1;
  }
};

TrajectoryPrediction rollout(const FlowMapEmulator& emulator,
                             const Eigen::VectorXd& x0, int steps,
                             const PropagationConfig& config);

double loo_mse(const FlowMapEmulator& emulator, int coordinate);

inline StateDistribution step_distribution(const FlowMapEmulator& emulator,
                                           const StateDistribution& input,
                                           const PropagationConfig& config) {
  return step_distribution(std::span<const GPModel>(emulator.models), input,
                           config);
}

/// Self-describing JSON archive: design, outputs, hyperparameters, jitter,
/// dt and box. Loading reconditions the models deterministically.
void save_emulator(const FlowMapEmulator& emulator, const std::string& path);
FlowMapEmulator load_emulator(const std::string& path);

}  // namespace flowemu

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>

#include "flowemu/errors.hpp"
#include "flowemu/kernel.hpp"
#include "flowemu/propagate.hpp"

namespace flowemu {

/// One experiment, fully determined: system, box, design size, time step,
/// rollout horizon, propagation mode and all seeds. Parsed from the
/// key-value config format documented in the README.
struct ExperimentConfig {
  // [system]
  std::string system_name;
  std::map<std::string, double> system_params;

  // [initial]
  Eigen::VectorXd initial;

  // [box]
  bool box_explicit = false;
  Eigen::VectorXd box_lower;   // explicit mode
  Eigen::VectorXd box_upper;
  Eigen::VectorXd probe;       // estimate mode
  double probe_horizon = 100.0;
  double margin = 0.05;

  // [train]
  int n = 0;
  double dt = 0.01;
  KernelFamily kernel = KernelFamily::SquaredExponential;

  // [rollout]
  int steps = 0;
  PropagationMode mode = PropagationMode::CorrelatedMC;
  int n_mc = 1000;

  // [batch]
  int batch_count = 6;
  double batch_low = -10.0;
  double batch_high = 10.0;

  // [seeds]
  std::uint64_t design_seed = 1;
  std::uint64_t fit_seed = 2;
  std::uint64_t rollout_seed = 3;
  std::uint64_t batch_seed = 4;

  // [output]
  std::string out_dir;

  bool operator==(const ExperimentConfig& other) const;
};

/// Parses and validates; throws ConfigError with the offending line/key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical form: parse(serialize_config(c)) == c, full double precision.
std::string serialize_config(const ExperimentConfig& config);

/// Shared numeric formatting: shortest text that round-trips the double
/// (up to 17 significant digits).
std::string format_double(double value);

}  // namespace flowemu

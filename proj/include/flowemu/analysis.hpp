#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "flowemu/emulator.hpp"
#include "flowemu/errors.hpp"

namespace flowemu {

/// Per-step prediction standard deviation sqrt(cov[l,l]) of one coordinate.
std::vector<double> sd_trace(const TrajectoryPrediction& traj, int coordinate);

/// At-most-one-change detector on the series mean: returns the first index
/// of the second segment, i.e. the split minimizing the within-segment sum
/// of squared deviations. Returns series.size() when no change exists
/// (constant series, or no split improves the cost).
std::size_t detect_change_point(const std::vector<double>& series);

struct HorizonReport {
  std::vector<std::size_t> change_point;  // absolute step index, per coordinate
  std::vector<bool> no_change;
  double horizon = 0.0;                   // earliest change point x dt
  std::vector<std::vector<double>> sd_traces;
};

/// Change point per coordinate on the log-transformed SD traces. The t=0
/// entry is identically zero (deterministic start) and is skipped before
/// the log transform.
HorizonReport horizon_from_traces(
    const std::vector<std::vector<double>>& sd_traces, double dt);

/// Requires an MC-mode trajectory.
HorizonReport horizon(const TrajectoryPrediction& traj);

/// Absolute per-coordinate differences |mean_l - truth_l| per step.
std::vector<std::vector<double>> error_trace(
    const TrajectoryPrediction& traj, const std::vector<Eigen::VectorXd>& truth);

/// Fraction of steps in [begin, end) whose truth lies inside the
/// componentwise mean +/- 2 SD band.
double coverage_fraction(const std::vector<Eigen::VectorXd>& means,
                         const std::vector<Eigen::VectorXd>& sds,
                         const std::vector<Eigen::VectorXd>& truth,
                         std::size_t begin, std::size_t end);

double coverage_fraction(const TrajectoryPrediction& traj,
                         const std::vector<Eigen::VectorXd>& truth,
                         std::size_t begin, std::size_t end);

struct CoverageReport {
  double overall = 0.0;
  double pre_horizon = 0.0;
  double post_horizon = 0.0;
};

/// Coverage split at the given step index (the detected horizon).
CoverageReport coverage_report(const std::vector<Eigen::VectorXd>& means,
                               const std::vector<Eigen::VectorXd>& sds,
                               const std::vector<Eigen::VectorXd>& truth,
                               std::size_t horizon_step);

}  // namespace flowemu

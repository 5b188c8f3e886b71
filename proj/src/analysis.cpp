#include "flowemu/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace flowemu {

namespace {

std::vector<Eigen::VectorXd> state_means(const TrajectoryPrediction& traj) {
  std::vector<Eigen::VectorXd> means;
  means.reserve(traj.states.size());
  for (const StateDistribution& s : traj.states) {
    means.push_back(s.mean);
  }
  return means;
}

std::vector<Eigen::VectorXd> state_sds(const TrajectoryPrediction& traj) {
  std::vector<Eigen::VectorXd> sds;
  sds.reserve(traj.states.size());
  for (const StateDistribution& s : traj.states) {
    sds.push_back(s.cov.diagonal().cwiseMax(0.0).cwiseSqrt());
  }
  return sds;
}

}  // namespace

std::vector<double> sd_trace(const TrajectoryPrediction& traj,
                             int coordinate) {
  if (traj.states.empty()) {
    throw UsageError("sd_trace: empty trajectory");
  }
  if (coordinate < 0 || coordinate >= traj.states.front().dim()) {
    throw UsageError("sd_trace: coordinate out of range");
  }
  std::vector<double> trace;
  trace.reserve(traj.states.size());
  for (const StateDistribution& s : traj.states) {
    trace.push_back(std::sqrt(std::max(0.0, s.cov(coordinate, coordinate))));
  }
  return trace;
}

std::size_t detect_change_point(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 4) {
    throw UsageError("detect_change_point: need at least 4 points");
  }
  for (double v : series) {
    if (!std::isfinite(v)) {
      throw UsageError("detect_change_point: non-finite value");
    }
  }
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  if (*lo == *hi) {
    return n;  // constant series: no change
  }

  // Center the series for conditioning; the argmin split is unaffected.
  const double grand_mean =
      std::accumulate(series.begin(), series.end(), 0.0) /
      static_cast<double>(n);
  std::vector<double> sum1(n + 1, 0.0), sum2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = series[i] - grand_mean;
    sum1[i + 1] = sum1[i] + v;
    sum2[i + 1] = sum2[i] + v * v;
  }
  const auto sse = [&](std::size_t begin, std::size_t end) {
    const double len = static_cast<double>(end - begin);
    const double s = sum1[end] - sum1[begin];
    return std::max(0.0, (sum2[end] - sum2[begin]) - s * s / len);
  };

  const double total = sse(0, n);
  double best_cost = std::numeric_limits<double>::infinity();
  std::size_t best_split = n;
  for (std::size_t k = 1; k < n; ++k) {
    const double cost = sse(0, k) + sse(k, n);
    if (cost < best_cost) {
      best_cost = cost;
      best_split = k;
    }
  }
  if (!(total - best_cost > 0.0)) {
    return n;
  }
  return best_split;
}

HorizonReport horizon_from_traces(
    const std::vector<std::vector<double>>& sd_traces, double dt) {
  if (sd_traces.empty()) {
    throw UsageError("horizon_from_traces: no traces");
  }
  if (!(dt > 0.0)) {
    throw UsageError("horizon_from_traces: dt must be positive");
  }
  const std::size_t length = sd_traces.front().size();
  if (length < 5) {
    throw UsageError("horizon_from_traces: trajectory too short");
  }

  HorizonReport report;
  report.sd_traces = sd_traces;
  const std::size_t last_step = length - 1;
  std::size_t earliest = last_step;
  for (const std::vector<double>& trace : sd_traces) {
    if (trace.size() != length) {
      throw UsageError("horizon_from_traces: ragged traces");
    }
    std::vector<double> log_sd;
    log_sd.reserve(length - 1);
    for (std::size_t k = 1; k < length; ++k) {
      log_sd.push_back(std::log(std::max(trace[k], 1e-300)));
    }
    const std::size_t split = detect_change_point(log_sd);
    if (split == log_sd.size()) {
      report.change_point.push_back(last_step);
      report.no_change.push_back(true);
    } else {
      report.change_point.push_back(split + 1);  // map back to step index
      report.no_change.push_back(false);
    }
    earliest = std::min(earliest, report.change_point.back());
  }
  report.horizon = static_cast<double>(earliest) * dt;
  return report;
}

HorizonReport horizon(const TrajectoryPrediction& traj) {
  if (traj.config.mode == PropagationMode::PlugIn) {
    throw UsageError("horizon: requires an MC-mode trajectory");
  }
  if (traj.states.empty()) {
    throw UsageError("horizon: empty trajectory");
  }
  std::vector<std::vector<double>> traces;
  const int d = traj.states.front().dim();
  traces.reserve(static_cast<std::size_t>(d));
  for (int l = 0; l < d; ++l) {
    traces.push_back(sd_trace(traj, l));
  }
  return horizon_from_traces(traces, traj.dt);
}

std::vector<std::vector<double>> error_trace(
    const TrajectoryPrediction& traj,
    const std::vector<Eigen::VectorXd>& truth) {
  if (truth.size() != traj.states.size()) {
    throw UsageError("error_trace: truth length mismatch");
  }
  const int d = traj.states.front().dim();
  std::vector<std::vector<double>> errors(
      static_cast<std::size_t>(d),
      std::vector<double>(traj.states.size(), 0.0));
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    if (truth[k].size() != d) {
      throw UsageError("error_trace: truth dimension mismatch");
    }
    for (int l = 0; l < d; ++l) {
      errors[static_cast<std::size_t>(l)][k] =
          std::abs(traj.states[k].mean[l] - truth[k][l]);
    }
  }
  return errors;
}

double coverage_fraction(const std::vector<Eigen::VectorXd>& means,
                         const std::vector<Eigen::VectorXd>& sds,
                         const std::vector<Eigen::VectorXd>& truth,
                         std::size_t begin, std::size_t end) {
  if (means.size() != sds.size() || means.size() != truth.size()) {
    throw UsageError("coverage_fraction: length mismatch");
  }
  end = std::min(end, means.size());
  if (begin >= end) {
    throw UsageError("coverage_fraction: empty step range");
  }
  std::size_t covered = 0;
  for (std::size_t k = begin; k < end; ++k) {
    bool inside = true;
    for (Eigen::Index l = 0; l < means[k].size(); ++l) {
      if (std::abs(truth[k][l] - means[k][l]) > 2.0 * sds[k][l]) {
        inside = false;
        break;
      }
    }
    covered += inside ? 1 : 0;
  }
  return static_cast<double>(covered) / static_cast<double>(end - begin);
}

double coverage_fraction(const TrajectoryPrediction& traj,
                         const std::vector<Eigen::VectorXd>& truth,
                         std::size_t begin, std::size_t end) {
  return coverage_fraction(state_means(traj), state_sds(traj), truth, begin,
                           end);
}

CoverageReport coverage_report(const std::vector<Eigen::VectorXd>& means,
                               const std::vector<Eigen::VectorXd>& sds,
                               const std::vector<Eigen::VectorXd>& truth,
                               std::size_t horizon_step) {
  CoverageReport report;
  report.overall = coverage_fraction(means, sds, truth, 0, means.size());
  horizon_step = std::min(horizon_step, means.size() - 1);
  if (horizon_step > 0) {
    report.pre_horizon = coverage_fraction(means, sds, truth, 0, horizon_step);
  }
  if (horizon_step < means.size()) {
    report.post_horizon =
        coverage_fraction(means, sds, truth, horizon_step, means.size());
  }
  return report;
}

}  // namespace flowemu

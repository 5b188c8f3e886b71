#include "flowemu/emulator.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "flowemu/rng.hpp"
#include "flowemu/version.hpp"

namespace flowemu {

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows.push_back(vector_to_json(m.row(i).transpose()));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError("emulator archive: malformed matrix");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::VectorXd first = vector_from_json(j[0]);
  Eigen::MatrixXd m(rows, first.size());
  m.row(0) = first.transpose();
  for (Eigen::Index i = 1; i < rows; ++i) {
    const Eigen::VectorXd row = vector_from_json(j[static_cast<std::size_t>(i)]);
    if (row.size() != m.cols()) {
      throw ConfigError("emulator archive: ragged matrix");
    }
    m.row(i) = row.transpose();
  }
  return m;
}

}  // namespace

void FlowMapEmulator::validate() const {
  if (models.empty()) {
    throw UsageError("FlowMapEmulator: no models");
  }
  if (!(dt > 0.0)) {
    throw UsageError("FlowMapEmulator: dt must be positive");
  }
  box.validate();
  const int d = dimension();
  for (const GPModel& model : models) {
    if (model.input_dim() != d) {
      throw UsageError("FlowMapEmulator: model dimension mismatch");
    }
    if (model.design.rows() != models.front().design.rows() ||
        !(model.design.array() == models.front().design.array()).all()) {
      throw UsageError("FlowMapEmulator: models must share one design");
    }
  }
}

FlowMapEmulator build_emulator(const DynamicalSystem& system,
                               const BoundingBox& box, int n, double dt,
                               const BuildOptions& options) {
  if (!(dt > 0.0)) {
    throw UsageError("build_emulator: dt must be positive");
  }
  if (box.dim() != system.dimension) {
    throw UsageError("build_emulator: box dimension mismatch");
  }

  const Eigen::MatrixXd design = latin_hypercube(n, box, options.design_seed);
  const std::vector<FlowMapSample> training =
      generate_training(system, design, dt, options.tol);

  Eigen::MatrixXd outputs(n, system.dimension);
  for (int i = 0; i < n; ++i) {
    outputs.row(i) = training[static_cast<std::size_t>(i)].x1.transpose();
  }

  FlowMapEmulator emulator;
  emulator.dt = dt;
  emulator.box = box;
  emulator.models.reserve(static_cast<std::size_t>(system.dimension));
  for (int l = 0; l < system.dimension; ++l) {
    try {
      emulator.models.push_back(
          fit(design, outputs.col(l), options.family,
              mix_seed(options.fit_seed, static_cast<std::uint64_t>(l)),
              options.fit));
    } catch (const std::exception& e) {
      throw NumericalError("build_emulator: coordinate " + std::to_string(l) +
                           ": " + e.what());
    }
  }
  emulator.validate();
  return emulator;
}

FlowMapEmulator build_emulator(const DynamicalSystem& system,
                               const BoundingBox& box, int n, double dt,
                               KernelFamily family, std::uint64_t seed) {
  BuildOptions options;
  options.family = family;
  options.design_seed = mix_seed(seed, 1);
  options.fit_seed = mix_seed(seed, 2);
  return build_emulator(system, box, n, dt, options);
}

TrajectoryPrediction rollout(const FlowMapEmulator& emulator,
                             const Eigen::VectorXd& x0, int steps,
                             const PropagationConfig& config) {
  emulator.validate();
  config.validate();
  if (steps < 1) {
    throw UsageError("rollout: need steps >= 1");
  }
  if (!x0.allFinite() || x0.size() != emulator.dimension()) {
    throw UsageError("rollout: invalid initial condition");
  }

  TrajectoryPrediction traj;
  traj.config = config;
  traj.dt = emulator.dt;
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);
  traj.gen_var.reserve(static_cast<std::size_t>(steps) + 1);
  traj.states.push_back(StateDistribution::deterministic(x0, 0));
  traj.gen_var.push_back(0.0);

  for (int k = 1; k <= steps; ++k) {
    try {
      traj.states.push_back(
          step_distribution(emulator, traj.states.back(), config));
    } catch (const NumericalError& e) {
      traj.error = "step " + std::to_string(k) + ": " + e.what();
      traj.failed_step = k;
      break;
    }
    traj.gen_var.push_back(
        std::max(0.0, traj.states.back().cov.determinant()));
  }
  return traj;
}

double loo_mse(const FlowMapEmulator& emulator, int coordinate) {
  if (coordinate < 0 || coordinate >= emulator.dimension()) {
    throw UsageError("loo_mse: coordinate out of range");
  }
  return loo_mse(emulator.models[static_cast<std::size_t>(coordinate)]);
}

void save_emulator(const FlowMapEmulator& emulator, const std::string& path) {
  emulator.validate();
  json j;
  j["format"] = "flowemu-emulator";
  j["version"] = 1;
  j["tool_version"] = kVersion;
  j["dt"] = emulator.dt;
  j["box"]["lower"] = vector_to_json(emulator.box.lower);
  j["box"]["upper"] = vector_to_json(emulator.box.upper);
  json models = json::array();
  for (const GPModel& model : emulator.models) {
    json m;
    m["design"] = matrix_to_json(model.design);
    m["outputs"] = vector_to_json(model.outputs);
    m["kernel"]["family"] = family_name(model.kernel.family);
    m["kernel"]["variance"] = model.kernel.variance;
    m["kernel"]["lengthscales"] = vector_to_json(model.kernel.lengthscales);
    m["mean"]["intercept"] = model.mean.intercept;
    m["mean"]["slopes"] = vector_to_json(model.mean.slopes);
    m["jitter"] = model.jitter;
    models.push_back(std::move(m));
  }
  j["models"] = std::move(models);

  std::ofstream out(path);
  if (!out) {
    throw ConfigError("save_emulator: cannot open '" + path + "'");
  }
  out << j.dump(2) << "\n";
  if (!out) {
    throw ConfigError("save_emulator: write failed for '" + path + "'");
  }
}

FlowMapEmulator load_emulator(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("load_emulator: cannot open '" + path +
                      "' (run the build stage first)");
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("load_emulator: malformed archive '" + path +
                      "': " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "flowemu-emulator") {
      throw ConfigError("load_emulator: '" + path +
                        "' is not an emulator archive");
    }
    FlowMapEmulator emulator;
    emulator.dt = j.at("dt").get<double>();
    emulator.box.lower = vector_from_json(j.at("box").at("lower"));
    emulator.box.upper = vector_from_json(j.at("box").at("upper"));
    for (const json& m : j.at("models")) {
      KernelSpec kernel;
      kernel.family = family_from_name(m.at("kernel").at("family"));
      kernel.variance = m.at("kernel").at("variance").get<double>();
      kernel.lengthscales = vector_from_json(m.at("kernel").at("lengthscales"));
      PriorMean mean;
      mean.intercept = m.at("mean").at("intercept").get<double>();
      mean.slopes = vector_from_json(m.at("mean").at("slopes"));
      emulator.models.push_back(
          make_gp_model(matrix_from_json(m.at("design")),
                        vector_from_json(m.at("outputs")), kernel, mean,
                        m.at("jitter").get<double>()));
    }
    emulator.validate();
    return emulator;
  } catch (const json::exception& e) {
    throw ConfigError("load_emulator: missing field in '" + path +
                      "': " + e.what());
  }
}

}  // namespace flowemu

#include "fastslow/pipeline.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "fastslow/io.hpp"

namespace fastslow {

namespace {

using nlohmann::json;
using Setter = std::function<void(RunConfig&, const json&)>;

double as_number(const std::string& key, const json& v) {
  if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return v.get<double>();
}

int as_int(const std::string& key, const json& v) {
  if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  return v.get<int>();
}

std::string as_string(const std::string& key, const json& v) {
  if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

bool as_bool(const std::string& key, const json& v) {
  if (!v.is_boolean()) throw ConfigError("config key '" + key + "' must be true or false");
  return v.get<bool>();
}

std::vector<double> as_list(const std::string& key, const json& v) {
  if (!v.is_array()) throw ConfigError("config key '" + key + "' must be a list of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(as_number(key, e));
  return out;
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["model"] = [](RunConfig& c, const json& v) { c.model = as_string("model", v); };
    t["L1"] = [](RunConfig& c, const json& v) { c.mm.L1 = as_number("L1", v); };
    t["L2"] = [](RunConfig& c, const json& v) { c.mm.L2 = as_number("L2", v); };
    t["L3"] = [](RunConfig& c, const json& v) { c.mm.L3 = as_number("L3", v); };
    t["L4"] = [](RunConfig& c, const json& v) { c.mm.L4 = as_number("L4", v); };
    t["mu"] = [](RunConfig& c, const json& v) { c.mm.mu = as_number("mu", v); };
    t["delta"] = [](RunConfig& c, const json& v) { c.mm.delta = as_number("delta", v); };
    t["linear_A"] = [](RunConfig& c, const json& v) { c.linear_A = as_list("linear_A", v); };
    t["linear_shift"] = [](RunConfig& c, const json& v) { c.linear_shift = as_list("linear_shift", v); };
    t["linear_diffusion"] = [](RunConfig& c, const json& v) {
      c.linear_diffusion = as_list("linear_diffusion", v);
    };
    t["box_lower"] = [](RunConfig& c, const json& v) { c.box_lower = as_list("box_lower", v); };
    t["box_upper"] = [](RunConfig& c, const json& v) { c.box_upper = as_list("box_upper", v); };
    t["boundary_state"] = [](RunConfig& c, const json& v) {
      c.boundary_state = as_list("boundary_state", v);
    };
    t["equilibrium_guess"] = [](RunConfig& c, const json& v) {
      c.equilibrium_guess = as_list("equilibrium_guess", v);
    };
    t["output_dir"] = [](RunConfig& c, const json& v) { c.output_dir = as_string("output_dir", v); };
    t["nodes"] = [](RunConfig& c, const json& v) { c.solver.node_count = as_int("nodes", v); };
    t["dt_safety"] = [](RunConfig& c, const json& v) { c.solver.dt_safety = as_number("dt_safety", v); };
    t["steady_tol"] = [](RunConfig& c, const json& v) { c.solver.steady_tol = as_number("steady_tol", v); };
    t["max_time"] = [](RunConfig& c, const json& v) { c.solver.max_time = as_number("max_time", v); };
    t["history_every"] = [](RunConfig& c, const json& v) {
      c.solver.history_every = as_int("history_every", v);
    };
    t["gql_mode"] = [](RunConfig& c, const json& v) {
      const auto mode = as_string("gql_mode", v);
      if (mode == "least_squares") {
        c.gql_mode = SurrogateMode::least_squares;
      } else if (mode == "exact") {
        c.gql_mode = SurrogateMode::exact;
      } else {
        throw ConfigError("gql_mode must be 'least_squares' or 'exact'");
      }
    };
    t["min_gap_ratio"] = [](RunConfig& c, const json& v) { c.min_gap_ratio = as_number("min_gap_ratio", v); };
    t["mesh_points"] = [](RunConfig& c, const json& v) { c.mesh_points = as_int("mesh_points", v); };
    t["mesh_tol"] = [](RunConfig& c, const json& v) { c.mesh_tol = as_number("mesh_tol", v); };
    t["redim1d_nodes"] = [](RunConfig& c, const json& v) { c.redim1d_nodes = as_int("redim1d_nodes", v); };
    t["redim2d_nodes1"] = [](RunConfig& c, const json& v) { c.redim2d_nodes1 = as_int("redim2d_nodes1", v); };
    t["redim2d_nodes2"] = [](RunConfig& c, const json& v) { c.redim2d_nodes2 = as_int("redim2d_nodes2", v); };
    t["redim_tol"] = [](RunConfig& c, const json& v) { c.redim_tol = as_number("redim_tol", v); };
    t["redim_max_steps"] = [](RunConfig& c, const json& v) {
      c.redim_max_steps = static_cast<long>(as_number("redim_max_steps", v));
    };
    t["redim_local_time_stepping"] = [](RunConfig& c, const json& v) {
      c.redim_local_time_stepping = as_bool("redim_local_time_stepping", v);
    };
    t["gradient"] = [](RunConfig& c, const json& v) { c.gradient = as_string("gradient", v); };
    t["redim2d_theta2_edges"] = [](RunConfig& c, const json& v) {
      const auto mode = as_string("redim2d_theta2_edges", v);
      if (mode != "free" && mode != "held") {
        throw ConfigError("redim2d_theta2_edges must be 'free' or 'held'");
      }
      c.redim2d_theta2_edges = mode;
    };
    t["fasttime_start"] = [](RunConfig& c, const json& v) {
      c.fasttime_start = as_list("fasttime_start", v);
    };
    t["fasttime_x0"] = [](RunConfig& c, const json& v) { c.fasttime_x0 = as_number("fasttime_x0", v); };
    t["fasttime_dt"] = [](RunConfig& c, const json& v) { c.fasttime_dt = as_number("fasttime_dt", v); };
    t["fasttime_max_time"] = [](RunConfig& c, const json& v) {
      c.fasttime_max_time = as_number("fasttime_max_time", v);
    };
    return t;
  }();
  return table;
}

void apply_object(RunConfig& config, const json& obj) {
  if (!obj.is_object()) throw ConfigError("config must be a JSON object with flat keys");
  for (const auto& [key, value] : obj.items()) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(config, value);
  }
}

StateVector to_state(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

StateVector sized(const std::vector<double>& v, const ReactionDiffusionModel& model, const char* key) {
  if (static_cast<int>(v.size()) != model.dimension()) {
    throw ConfigError(std::string("config key '") + key + "' needs " +
                      std::to_string(model.dimension()) + " values");
  }
  return to_state(v);
}

bool is_mm(const ReactionDiffusionModel& model) { return model.name() == "michaelis-menten"; }

}  // namespace

void RunConfig::apply_json(const std::string& json_text) {
  json parsed;
  try {
    parsed = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  apply_object(*this, parsed);
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  apply_json(text.str());
}

void RunConfig::set(const std::string& key, const std::string& value_text) {
  json value = json::parse(value_text, nullptr, false);
  if (value.is_discarded()) value = value_text;
  apply_object(*this, json{{key, value}});
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> out = [] {
    std::vector<std::string> k;
    for (const auto& [key, setter] : setters()) k.push_back(key);
    return k;
  }();
  return out;
}

std::unique_ptr<ReactionDiffusionModel> make_model(const RunConfig& config) {
  try {
    if (config.model == "michaelis-menten") {
      return std::make_unique<MichaelisMentenModel>(config.mm);
    }
    if (config.model == "linear") {
      const auto size = config.linear_A.size();
      const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(size))));
      if (n < 1 || static_cast<std::size_t>(n * n) != size) {
        throw ConfigError("linear_A must hold n*n values in row-major order");
      }
      LinearModelParams p;
      p.A = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          config.linear_A.data(), n, n);
      p.shift = config.linear_shift.empty() ? Vector::Zero(n) : to_state(config.linear_shift);
      p.diffusion = config.linear_diffusion.empty() ? Vector::Zero(n) : to_state(config.linear_diffusion);
      return std::make_unique<LinearModel>(std::move(p));
    }
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("invalid model parameters: ") + e.what());
  }
  throw ConfigError("unknown model '" + config.model + "' (expected michaelis-menten or linear)");
}

WorkingBox config_box(const RunConfig& config, const ReactionDiffusionModel& model) {
  if (config.box_lower && config.box_upper) {
    WorkingBox box{sized(*config.box_lower, model, "box_lower"), sized(*config.box_upper, model, "box_upper")};
    if (((box.upper - box.lower).array() <= 0.0).any()) {
      throw ConfigError("box_upper must exceed box_lower in every component");
    }
    return box;
  }
  if (config.box_lower || config.box_upper) throw ConfigError("box_lower and box_upper go together");
  if (is_mm(model)) return MichaelisMentenModel::working_box();
  throw ConfigError("model '" + model.name() + "' needs box_lower and box_upper");
}

StateVector config_boundary_state(const RunConfig& config, const ReactionDiffusionModel& model) {
  if (config.boundary_state) return sized(*config.boundary_state, model, "boundary_state");
  if (is_mm(model)) return MichaelisMentenModel::boundary_state();
  throw ConfigError("model '" + model.name() + "' needs boundary_state");
}

StateVector config_equilibrium_guess(const RunConfig& config, const ReactionDiffusionModel& model) {
  if (config.equilibrium_guess) return sized(*config.equilibrium_guess, model, "equilibrium_guess");
  if (config.box_lower && config.box_upper) {
    const WorkingBox box = config_box(config, model);
    return 0.5 * (box.lower + box.upper);
  }
  if (is_mm(model)) {
    const WorkingBox box = MichaelisMentenModel::working_box();
    return 0.5 * (box.lower + box.upper);
  }
  return StateVector::Zero(model.dimension());
}

GradientEstimate config_gradient(const RunConfig& config, const SpatialProfile* profile,
                                 int manifold_dim) {
  const std::string& g = config.gradient;
  if (g == "profile") {
    if (profile == nullptr) throw ConfigError("gradient 'profile' needs a stationary profile");
    return GradientEstimate::from_profile(*profile, manifold_dim);
  }
  if (g.rfind("const:", 0) == 0) {
    std::vector<double> values;
    std::istringstream in(g.substr(6));
    std::string cell;
    while (std::getline(in, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ConfigError("malformed constant gradient '" + g + "'");
      }
    }
    if (values.empty() || static_cast<int>(values.size()) > manifold_dim) {
      throw ConfigError("constant gradient '" + g + "' needs 1.." + std::to_string(manifold_dim) +
                        " values");
    }
    Vector v = Vector::Zero(manifold_dim);
    for (std::size_t k = 0; k < values.size(); ++k) v[static_cast<Eigen::Index>(k)] = values[k];
    return GradientEstimate::constant(v);
  }
  throw ConfigError("gradient must be 'profile' or 'const:<value>[,<value>]'");
}

int exit_code_for(const std::exception& error) {
  if (const auto* s = dynamic_cast<const StageError*>(&error)) return s->exit_code();
  if (dynamic_cast<const ConfigError*>(&error) || dynamic_cast<const ContractViolation*>(&error)) {
    return 2;
  }
  if (dynamic_cast<const ConvergenceError*>(&error) || dynamic_cast<const DivergenceError*>(&error) ||
      dynamic_cast<const StabilityError*>(&error)) {
    return 3;
  }
  if (dynamic_cast<const DecompositionError*>(&error) ||
      dynamic_cast<const ParametrizationError*>(&error)) {
    return 4;
  }
  return 1;
}

std::filesystem::path resolve_output_dir(const RunConfig& config) {
  if (const char* env = std::getenv("FASTSLOW_OUTPUT_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return config.output_dir;
}

PipelineResult run_pipeline(const RunConfig& config, std::ostream* log) {
  const auto note = [&](const std::string& msg) {
    if (log != nullptr) *log << msg << std::endl;
  };
  const auto stage = [&](const std::string& name, auto&& body) {
    note("[" + name + "]");
    try {
      return body();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, exit_code_for(e), e.what());
    }
  };

  const auto model = stage("config", [&] { return make_model(config); });
  const auto dir = resolve_output_dir(config);
  const WorkingBox box = stage("config", [&] { return config_box(config, *model); });
  const StateVector right = stage("config", [&] { return config_boundary_state(config, *model); });
  stage("config", [&] {
    if (model->dimension() != 3) throw ConfigError("the pipeline needs a three-species model");
    std::filesystem::create_directories(dir);
    return 0;
  });

  PipelineResult result;
  const StateVector left = stage("equilibrium", [&] {
    return equilibrium(*model, config_equilibrium_guess(config, *model));
  });

  result.decomposition = stage("gql", [&] {
    const std::vector<StateVector> extra{left};
    const auto samples = box_samples(box, extra);
    std::span<const StateVector> used(samples);
    if (config.gql_mode == SurrogateMode::exact) used = used.first(static_cast<std::size_t>(model->dimension()));
    const Matrix t = build_surrogate(*model, used, config.gql_mode);
    GqlDecomposition dec = spectral_split(t, config.min_gap_ratio);
    write_gql_report(dir / "gql_report.json", *model, dec);
    result.artifacts.push_back(dir / "gql_report.json");
    SlowManifoldOptions opts;
    opts.tol = config.mesh_tol;
    const auto mesh = slow_manifold_mesh(dec, *model, slow_grid_over_box(dec, box, config.mesh_points), left, opts);
    write_mesh_csv(dir / "slow_manifold.csv", *model, dec, mesh);
    result.artifacts.push_back(dir / "slow_manifold.csv");
    std::ostringstream msg;
    msg << "  epsilon " << dec.epsilon << ", n_fast " << dec.n_fast << ", mesh nodes " << mesh.present()
        << "/" << mesh.states.size();
    note(msg.str());
    return dec;
  });
  const GqlDecomposition& dec = result.decomposition;

  const BoundaryConditions bc{left, right};
  const SpatialProfile profile = stage("pde", [&] {
    auto steady = integrate_to_steady(*model, bc, config.solver);
    write_profile_csv(dir / "stationary_profile.csv", *model, steady.profile);
    result.artifacts.push_back(dir / "stationary_profile.csv");
    std::ostringstream msg;
    msg << "  stationary at t = " << steady.elapsed_time << " (" << steady.steps << " steps, residual "
        << steady.residual << ")";
    note(msg.str());
    return steady.profile;
  });

  RedimSettings redim_settings;
  redim_settings.tol = config.redim_tol;
  redim_settings.max_steps = config.redim_max_steps;
  redim_settings.local_time_stepping = config.redim_local_time_stepping;

  stage("redim1d", [&] {
    const auto grad = config_gradient(config, &profile, 1);
    const UniformAxis theta{left[0], right[0], config.redim1d_nodes};
    const auto r = evolve_redim_1d(*model, theta, grad, left, right, redim_settings);
    write_redim1d_csv(dir / "redim1d.csv", *model, r.manifold);
    result.artifacts.push_back(dir / "redim1d.csv");
    note("  converged in " + std::to_string(r.steps) + " steps");
    return 0;
  });

  stage("redim2d", [&] {
    const auto grad = config_gradient(config, &profile, 2);
    const UniformAxis t1{box.lower[0], box.upper[0], config.redim2d_nodes1};
    const UniformAxis t2{box.lower[1], box.upper[1], config.redim2d_nodes2};
    auto initial = initial_manifold_2d(t1, t2, grad, left[2], right[2]);
    EdgeModes edges;
    if (config.redim2d_theta2_edges == "held") {
      edges.theta2_lower = EdgeMode::held;
      edges.theta2_upper = EdgeMode::held;
    }
    const auto r = evolve_redim_2d(*model, std::move(initial), edges, redim_settings);
    write_redim2d_csv(dir / "redim2d.csv", *model, r.manifold);
    result.artifacts.push_back(dir / "redim2d.csv");
    note("  converged in " + std::to_string(r.steps) + " steps");
    return 0;
  });

  stage("fasttime", [&] {
    FastTimeOptions opts;
    opts.dt = config.fasttime_dt;
    opts.max_time = config.fasttime_max_time;
    const StateVector start =
        config.fasttime_start ? sized(*config.fasttime_start, *model, "fasttime_start") : right;
    result.ode = measure_fast_time_ode(dec, *model, start, opts);
    result.pde = measure_fast_time_pde(dec, *model, bc, config.solver, config.fasttime_x0, opts);
    const std::vector<FastTimeReport> reports{result.ode, result.pde};
    std::ostringstream row_note;
    row_note << "rows: ode from (";
    for (Eigen::Index k = 0; k < start.size(); ++k) row_note << (k ? "," : "") << format_double(start[k]);
    row_note << "), pde at x0=" << format_double(config.fasttime_x0);
    write_fasttime_csv(dir / "fasttime.csv", *model, reports, row_note.str());
    result.artifacts.push_back(dir / "fasttime.csv");
    std::ostringstream msg;
    msg << "  ode ratio " << result.ode.ratio << ", pde ratio " << result.pde.ratio << ", K "
        << result.pde.K << (result.pde.K <= 3.0 ? "" : " (exceeds 3)");
    note(msg.str());
    return 0;
  });

  return result;
}

}  // namespace fastslow

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fastslow/errors.hpp"
#include "fastslow/fasttime.hpp"
#include "fastslow/gql.hpp"
#include "fastslow/io.hpp"
#include "fastslow/models.hpp"
#include "fastslow/pde.hpp"
#include "fastslow/pipeline.hpp"
#include "fastslow/redim.hpp"

using namespace fastslow;

namespace {

struct Common {
  std::string config_file;
  std::string model;
  std::vector<std::string> params;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_file, "JSON run configuration with flat keys");
  cmd->add_option("--model", c.model, "michaelis-menten or linear");
  cmd->add_option("--param", c.params, "Config override key=value (repeatable)");
}

RunConfig load_config(const Common& c) {
  RunConfig cfg;
  if (!c.config_file.empty()) cfg.apply_file(c.config_file);
  if (!c.model.empty()) cfg.model = c.model;
  for (const auto& kv : c.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--param expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

StateVector parse_state(const std::string& text, const ReactionDiffusionModel& model) {
  std::vector<double> values;
  std::istringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ConfigError("malformed state '" + text + "'");
    }
  }
  if (static_cast<int>(values.size()) != model.dimension()) {
    throw ConfigError("state '" + text + "' needs " + std::to_string(model.dimension()) + " components");
  }
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string join(const Eigen::Ref<const Vector>& v) {
  std::string out;
  for (Eigen::Index k = 0; k < v.size(); ++k) out += (k ? "," : "") + format_double(v[k]);
  return out;
}

GqlDecomposition decompose(const RunConfig& cfg, const ReactionDiffusionModel& model,
                           const StateVector& eq) {
  const std::vector<StateVector> extra{eq};
  const auto samples = box_samples(config_box(cfg, model), extra);
  std::span<const StateVector> used(samples);
  if (cfg.gql_mode == SurrogateMode::exact) {
    used = used.first(static_cast<std::size_t>(model.dimension()));
  }
  return spectral_split(build_surrogate(model, used, cfg.gql_mode), cfg.min_gap_ratio);
}

SpatialProfile stationary_profile(const RunConfig& cfg, const ReactionDiffusionModel& model,
                                  const StateVector& eq) {
  return integrate_to_steady(model, {eq, config_boundary_state(cfg, model)}, cfg.solver).profile;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fastslow: fast/slow decomposition, stationary profiles and reaction-diffusion manifolds"};
  app.set_help_flag();
  app.set_help_all_flag("-h,--help", "Print help for every subcommand and exit");
  app.require_subcommand(1);
  app.footer("Exit codes: 0 success, 2 configuration error, 3 non-convergence, 4 decomposition failure.\n"
             "FASTSLOW_OUTPUT_DIR overrides the pipeline output directory.");

  Common common;

  auto* model_cmd = app.add_subcommand("model", "Describe a model; evaluate Phi and its Jacobian at --state");
  add_common(model_cmd, common);
  std::string state_text;
  model_cmd->add_option("--state", state_text, "State X,Y,Z at which to evaluate the source");

  auto* eq_cmd = app.add_subcommand("equilibrium", "Newton solve of Phi(z) = 0");
  add_common(eq_cmd, common);
  std::string guess_text;
  double eq_tol = 1e-12;
  eq_cmd->add_option("--guess", guess_text, "Initial guess X,Y,Z (default: working-box centre)");
  eq_cmd->add_option("--tol", eq_tol, "Sup-norm residual tolerance");

  auto* gql_cmd = app.add_subcommand("gql", "Global quasi-linearization and zero-order slow manifold");
  add_common(gql_cmd, common);
  std::string gql_mode;
  double min_gap = 0.0;
  std::string gql_out;
  std::string mesh_out;
  int mesh_points = 0;
  gql_cmd->add_option("--mode", gql_mode, "least_squares or exact");
  gql_cmd->add_option("--min-gap", min_gap, "Minimum eigenvalue-modulus gap ratio");
  gql_cmd->add_option("--out", gql_out, "JSON report path (default: stdout)");
  gql_cmd->add_option("--mesh", mesh_out, "Slow-manifold mesh CSV path");
  gql_cmd->add_option("--mesh-points", mesh_points, "Mesh points per slow axis");

  auto* pde_cmd = app.add_subcommand("pde-solve", "Stationary profile by the method of lines");
  add_common(pde_cmd, common);
  int nodes = 0;
  double pde_tol = -1.0;
  std::string profile_out = "profile.csv";
  std::string history_out;
  pde_cmd->add_option("--nodes", nodes, "Grid nodes N");
  pde_cmd->add_option("--tol", pde_tol, "Steady-state tolerance on the interior residual");
  pde_cmd->add_option("--out", profile_out, "Profile CSV path")->capture_default_str();
  pde_cmd->add_option("--history", history_out, "Residual history CSV path");

  auto* redim_cmd = app.add_subcommand("redim", "Relax a 1-D or 2-D reaction-diffusion manifold");
  add_common(redim_cmd, common);
  int dim = 1;
  std::string grad_text;
  std::string redim_out = "manifold.csv";
  int redim_nodes = 0;
  int redim_nodes2 = 0;
  double redim_tol = 0.0;
  std::string theta2_edges;
  redim_cmd->add_option("--dim", dim, "Manifold dimension")->check(CLI::IsMember({1, 2}))->capture_default_str();
  redim_cmd->add_option("--grad", grad_text,
                        "Gradient estimate: a profile CSV or const:<value>[,<value>] "
                        "(default: profile computed on the fly)");
  redim_cmd->add_option("--out", redim_out, "Manifold CSV path")->capture_default_str();
  redim_cmd->add_option("--nodes", redim_nodes, "theta (or theta1) nodes");
  redim_cmd->add_option("--nodes2", redim_nodes2, "theta2 nodes (2-D)");
  redim_cmd->add_option("--tol", redim_tol, "Residual tolerance");
  redim_cmd->add_option("--theta2-edges", theta2_edges, "free or held (2-D)");

  auto* ft_cmd = app.add_subcommand("fast-time", "Measure entry into the slow neighbourhood against the bound");
  add_common(ft_cmd, common);
  std::string ft_mode = "ode";
  double x0 = -1.0;
  std::string start_text;
  double ft_dt = -1.0;
  double ft_max_time = -1.0;
  std::string ft_out;
  ft_cmd->add_option("--mode", ft_mode, "ode or pde")->check(CLI::IsMember({"ode", "pde"}))->capture_default_str();
  ft_cmd->add_option("--x0", x0, "Tracked position in (0, 1) for --mode pde");
  ft_cmd->add_option("--start", start_text, "Initial state X,Y,Z for --mode ode");
  ft_cmd->add_option("--dt", ft_dt, "Slow-time step (<= eps/10; default eps/1000)");
  ft_cmd->add_option("--max-time", ft_max_time, "Slow-time budget");
  ft_cmd->add_option("--out", ft_out, "CSV path (default: stdout)");

  auto* pipe_cmd = app.add_subcommand("pipeline", "Run gql, pde, redim and fast-time and write all artifacts");
  add_common(pipe_cmd, common);
  std::string output_dir;
  pipe_cmd->add_option("--output-dir", output_dir, "Artifact directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = load_config(common);
    const auto model = make_model(cfg);

    if (*model_cmd) {
      std::cout << "model " << model->name() << "\n" << provenance_line(*model) << "\nspecies";
      for (const auto& s : model->species()) std::cout << ' ' << s;
      std::cout << "\ndiffusion " << join(model->diffusion()) << "\n";
      if (!state_text.empty()) {
        const StateVector z = parse_state(state_text, *model);
        std::cout << "source " << join(eval_source(*model, z)) << "\n";
        const Matrix j = jacobian(*model, z);
        for (Eigen::Index r = 0; r < j.rows(); ++r) std::cout << "jacobian " << join(j.row(r).transpose()) << "\n";
      }
      return 0;
    }

    if (*pipe_cmd) {
      if (!output_dir.empty()) cfg.output_dir = output_dir;
      const auto result = run_pipeline(cfg, &std::cerr);
      for (const auto& a : result.artifacts) std::cout << a.string() << "\n";
      return 0;
    }
    const StateVector guess =
        guess_text.empty() ? config_equilibrium_guess(cfg, *model) : parse_state(guess_text, *model);
    EquilibriumOptions eq_opts;
    eq_opts.tol = eq_tol;

    if (*eq_cmd) {
      const StateVector z = equilibrium(*model, guess, eq_opts);
      std::cout << join(z) << "\n";
      return 0;
    }

    const StateVector eq = equilibrium(*model, guess, eq_opts);

    if (*gql_cmd) {
      if (!gql_mode.empty()) cfg.set("gql_mode", "\"" + gql_mode + "\"");
      if (min_gap > 0.0) cfg.min_gap_ratio = min_gap;
      if (mesh_points > 0) cfg.mesh_points = mesh_points;
      const GqlDecomposition dec = decompose(cfg, *model, eq);
      if (gql_out.empty()) {
        std::cout << gql_report_json(*model, dec);
      } else {
        write_gql_report(gql_out, *model, dec);
      }
      if (!mesh_out.empty()) {
        SlowManifoldOptions opts;
        opts.tol = cfg.mesh_tol;
        const auto grid = slow_grid_over_box(dec, config_box(cfg, *model), cfg.mesh_points);
        write_mesh_csv(mesh_out, *model, dec, slow_manifold_mesh(dec, *model, grid, eq, opts));
      }
      return 0;
    }

    if (*pde_cmd) {
      if (nodes > 0) cfg.solver.node_count = nodes;
      if (pde_tol >= 0.0) cfg.solver.steady_tol = pde_tol;
      const auto result = integrate_to_steady(*model, {eq, config_boundary_state(cfg, *model)}, cfg.solver);
      write_profile_csv(profile_out, *model, result.profile);
      if (!history_out.empty()) write_history_csv(history_out, *model, result.history);
      std::cerr << "stationary at t = " << result.elapsed_time << " after " << result.steps
                << " steps (residual " << result.residual << ")\n";
      return 0;
    }

    if (*redim_cmd) {
      if (redim_tol > 0.0) cfg.redim_tol = redim_tol;
      if (!theta2_edges.empty()) cfg.set("redim2d_theta2_edges", "\"" + theta2_edges + "\"");
      RedimSettings settings;
      settings.tol = cfg.redim_tol;
      settings.max_steps = cfg.redim_max_steps;
      settings.local_time_stepping = cfg.redim_local_time_stepping;

      std::optional<SpatialProfile> profile;
      if (grad_text.empty() || grad_text == "profile") {
        cfg.gradient = "profile";
        profile = stationary_profile(cfg, *model, eq);
      } else if (grad_text.rfind("const:", 0) == 0) {
        cfg.gradient = grad_text;
      } else {
        cfg.gradient = "profile";
        profile = read_profile_csv(grad_text);
      }
      const auto grad = config_gradient(cfg, profile ? &*profile : nullptr, dim);
      const StateVector right = config_boundary_state(cfg, *model);
      if (dim == 1) {
        const UniformAxis theta{eq[0], right[0], redim_nodes > 0 ? redim_nodes : cfg.redim1d_nodes};
        const auto r = evolve_redim_1d(*model, theta, grad, eq, right, settings);
        write_redim1d_csv(redim_out, *model, r.manifold);
        std::cerr << "converged in " << r.steps << " steps (residual " << r.residual << ")\n";
      } else {
        const WorkingBox box = config_box(cfg, *model);
        const UniformAxis t1{box.lower[0], box.upper[0], redim_nodes > 0 ? redim_nodes : cfg.redim2d_nodes1};
        const UniformAxis t2{box.lower[1], box.upper[1], redim_nodes2 > 0 ? redim_nodes2 : cfg.redim2d_nodes2};
        EdgeModes edges;
        if (cfg.redim2d_theta2_edges == "held") edges.theta2_lower = edges.theta2_upper = EdgeMode::held;
        const auto r = evolve_redim_2d(*model, initial_manifold_2d(t1, t2, grad, eq[2], right[2]), edges, settings);
        write_redim2d_csv(redim_out, *model, r.manifold);
        std::cerr << "converged in " << r.steps << " steps (residual " << r.residual << ")\n";
      }
      return 0;
    }

    if (*ft_cmd) {
      const GqlDecomposition dec = decompose(cfg, *model, eq);
      FastTimeOptions opts;
      opts.dt = ft_dt > 0.0 ? ft_dt : cfg.fasttime_dt;
      opts.max_time = ft_max_time > 0.0 ? ft_max_time : cfg.fasttime_max_time;
      FastTimeReport report;
      std::string note;
      if (ft_mode == "ode") {
        StateVector start = config_boundary_state(cfg, *model);
        if (!start_text.empty()) {
          start = parse_state(start_text, *model);
        } else if (cfg.fasttime_start) {
          start = Eigen::Map<const Vector>(cfg.fasttime_start->data(),
                                           static_cast<Eigen::Index>(cfg.fasttime_start->size()));
          require_dimension(*model, start.size(), "fasttime_start");
        }
        report = measure_fast_time_ode(dec, *model, start, opts);
        note = "mode=ode start=" + join(start);
      } else {
        const double pos = x0 > 0.0 ? x0 : cfg.fasttime_x0;
        report = measure_fast_time_pde(dec, *model, {eq, config_boundary_state(cfg, *model)}, cfg.solver, pos, opts);
        note = "mode=pde x0=" + format_double(pos);
      }
      note += " tight_bound=" + format_double(report.tight_bound) +
              " path_length=" + format_double(report.path_length) +
              " fast_path_simple=" + (report.fast_path_simple ? "true" : "false");
      const std::vector<FastTimeReport> reports{report};
      if (ft_out.empty()) {
        write_fasttime_csv(std::cout, *model, reports, note);
      } else {
        write_fasttime_csv(ft_out, *model, reports, note);
      }
      if (report.K > 3.0) std::cerr << "warning: measured K = " << report.K << " exceeds 3\n";
      return 0;
    }

  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}

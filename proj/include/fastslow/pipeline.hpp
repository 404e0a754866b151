#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fastslow/errors.hpp"
#include "fastslow/fasttime.hpp"
#include "fastslow/gql.hpp"
#include "fastslow/models.hpp"
#include "fastslow/pde.hpp"
#include "fastslow/redim.hpp"

namespace fastslow {

/// Flat run configuration. Every key is optional; defaults reproduce the Michaelis-Menten study.
///
/// Keys (JSON types in brackets):
///   model [string]                 "michaelis-menten" or "linear"
///   L1, L2, L3, L4, mu, delta      Michaelis-Menten parameters
///   linear_A [number list]         row-major n x n matrix of the linear model
///   linear_shift, linear_diffusion [number list]
///   box_lower, box_upper [list]    working box (defaults to the Michaelis-Menten box)
///   boundary_state [list]          Dirichlet state at x = 1 (default (2, 0, 1))
///   equilibrium_guess [list]       Newton start for the equilibrium (x = 0 state)
///   output_dir [string]
///   nodes, dt_safety, steady_tol, max_time, history_every      pde solver
///   gql_mode ["least_squares"|"exact"], min_gap_ratio, mesh_points, mesh_tol
///   redim1d_nodes, redim2d_nodes1, redim2d_nodes2, redim_tol, redim_max_steps,
///   redim_local_time_stepping [bool], gradient ["profile"|"const:a[,b]"],
///   redim2d_theta2_edges ["free"|"held"]
///   fasttime_start [list], fasttime_x0, fasttime_dt (0 = automatic), fasttime_max_time
struct RunConfig {
  std::string model = "michaelis-menten";
  MichaelisMentenParams mm;
  std::vector<double> linear_A;
  std::vector<double> linear_shift;
  std::vector<double> linear_diffusion;
  std::optional<std::vector<double>> box_lower;
  std::optional<std::vector<double>> box_upper;
  std::optional<std::vector<double>> boundary_state;
  std::optional<std::vector<double>> equilibrium_guess;

  std::filesystem::path output_dir = "fastslow_out";

  SolverSettings solver;

  SurrogateMode gql_mode = SurrogateMode::least_squares;
  double min_gap_ratio = 10.0;
  int mesh_points = 41;
  double mesh_tol = 1e-10;

  int redim1d_nodes = 101;
  int redim2d_nodes1 = 61;
  int redim2d_nodes2 = 61;
  double redim_tol = 1e-8;
  long redim_max_steps = 2'000'000;
  bool redim_local_time_stepping = true;
  std::string gradient = "profile";
  std::string redim2d_theta2_edges = "free";

  std::optional<std::vector<double>> fasttime_start;
  double fasttime_x0 = 0.5;
  double fasttime_dt = 0.0;
  double fasttime_max_time = 1.0;

  /// Applies every key of a JSON object. Unknown keys and wrong types throw ConfigError.
  void apply_json(const std::string& json_text);
  void apply_file(const std::filesystem::path& path);
  /// Sets one key from text; the text is parsed as JSON, falling back to a plain string.
  void set(const std::string& key, const std::string& value_text);

  static const std::vector<std::string>& keys();
};

/// Builds the configured model. Throws ConfigError on invalid parameters.
std::unique_ptr<ReactionDiffusionModel> make_model(const RunConfig& config);

/// Working box, boundary state and equilibrium guess with model defaults filled in.
WorkingBox config_box(const RunConfig& config, const ReactionDiffusionModel& model);
StateVector config_boundary_state(const RunConfig& config, const ReactionDiffusionModel& model);
StateVector config_equilibrium_guess(const RunConfig& config, const ReactionDiffusionModel& model);

/// "profile" or "const:a[,b]" resolved for a manifold of the given dimension.
GradientEstimate config_gradient(const RunConfig& config, const SpatialProfile* profile,
                                 int manifold_dim);

/// A pipeline stage failed; carries the stage name and the process exit code.
class StageError : public Error {
 public:
  StageError(std::string stage, int exit_code, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what),
        stage_(std::move(stage)),
        exit_code_(exit_code) {}

  const std::string& stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

/// 2 configuration/contract errors, 3 numerical non-convergence or divergence,
/// 4 decomposition or parametrization failure, 1 otherwise.
int exit_code_for(const std::exception& error);

struct PipelineResult {
  std::vector<std::filesystem::path> artifacts;
  GqlDecomposition decomposition;
  FastTimeReport ode;
  FastTimeReport pde;
};

/// gql -> pde -> redim1d -> redim2d -> fasttime, writing gql_report.json, slow_manifold.csv,
/// stationary_profile.csv, redim1d.csv, redim2d.csv and fasttime.csv into output_dir.
/// The FASTSLOW_OUTPUT_DIR environment variable overrides output_dir. Artifacts of completed
/// stages are kept when a later stage throws StageError.
PipelineResult run_pipeline(const RunConfig& config, std::ostream* log = nullptr);

/// Output directory after the environment override.
std::filesystem::path resolve_output_dir(const RunConfig& config);

}  // namespace fastslow

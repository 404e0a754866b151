#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fastslow/core.hpp"
#include "fastslow/fasttime.hpp"
#include "fastslow/gql.hpp"
#include "fastslow/pde.hpp"
#include "fastslow/redim.hpp"

namespace fastslow {

/// Version string of the library.
std::string version();

/// "# fastslow <version> model=<name> k=v ..." without a trailing newline.
std::string provenance_line(const ReactionDiffusionModel& model);

/// 17 significant digits; round-trips every finite double.
std::string format_double(double value);

/// Parsed comma-separated table. Lines starting with '#' are collected as comments.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a header column; throws ConfigError when absent.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

/// Header x,<species...>.
void write_profile_csv(const std::filesystem::path& path, const ReactionDiffusionModel& model,
                       const SpatialProfile& profile);
/// Reads a profile CSV written by write_profile_csv. The x column must be a uniform grid on [0, 1].
SpatialProfile read_profile_csv(const std::filesystem::path& path);

/// Header t,residual.
void write_history_csv(const std::filesystem::path& path, const ReactionDiffusionModel& model,
                       std::span<const ResidualSample> history);

/// Header V1..Vns,<species...>; absent nodes are skipped.
void write_mesh_csv(const std::filesystem::path& path, const ReactionDiffusionModel& model,
                    const GqlDecomposition& dec, const SlowManifoldMesh& mesh);

/// Header theta,<species...>.
void write_redim1d_csv(const std::filesystem::path& path, const ReactionDiffusionModel& model,
                       const Manifold1D& manifold);

/// Header theta1,theta2,<species...>; rows run theta1-major.
void write_redim2d_csv(const std::filesystem::path& path, const ReactionDiffusionModel& model,
                       const Manifold2D& manifold);

/// Header epsilon,K,dist,t_enter,bound,ratio; one row per report.
void write_fasttime_csv(const std::filesystem::path& path, const ReactionDiffusionModel& model,
                        std::span<const FastTimeReport> reports, const std::string& note = {});
void write_fasttime_csv(std::ostream& out, const ReactionDiffusionModel& model,
                        std::span<const FastTimeReport> reports, const std::string& note = {});

/// JSON report: eigenvalues, split_index, n_fast, n_slow, epsilon, gap_ratio, T, Z, Z_tilde.
std::string gql_report_json(const ReactionDiffusionModel& model, const GqlDecomposition& dec);
void write_gql_report(const std::filesystem::path& path, const ReactionDiffusionModel& model,
                      const GqlDecomposition& dec);

}  // namespace fastslow

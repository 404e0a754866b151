#include "fastslow/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fastslow/errors.hpp"

namespace fastslow {

namespace {

std::string shortest(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  return out;
}

void write_header(std::ostream& out, const ReactionDiffusionModel& model,
                  const std::vector<std::string>& leading) {
  out << provenance_line(model) << '\n';
  bool first = true;
  for (const auto& h : leading) {
    out << (first ? "" : ",") << h;
    first = false;
  }
  for (const auto& s : model.species()) {
    out << (first ? "" : ",") << s;
    first = false;
  }
  out << '\n';
}

void write_row(std::ostream& out, std::initializer_list<double> lead,
               const Eigen::Ref<const Vector>& rest) {
  bool first = true;
  for (double v : lead) {
    out << (first ? "" : ",") << format_double(v);
    first = false;
  }
  for (Eigen::Index k = 0; k < rest.size(); ++k) {
    out << (first ? "" : ",") << format_double(rest[k]);
    first = false;
  }
  out << '\n';
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw ConfigError("failed writing " + path.string());
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const std::filesystem::path& path) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ConfigError("malformed number '" + text + "' in " + path.string());
  }
  return v;
}

}  // namespace

std::string version() { return FASTSLOW_VERSION; }

std::string provenance_line(const ReactionDiffusionModel& model) {
  std::string line = "# fastslow " + version() + " model=" + model.name();
  for (const auto& [key, value] : model.parameters()) line += " " + key + "=" + shortest(value);
  return line;
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ConfigError("CSV has no column '" + name + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      table.comments.push_back(line);
      continue;
    }
    if (table.header.empty()) {
      table.header = split(line, ',');
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != table.header.size()) {
      throw ConfigError("row with " + std::to_string(cells.size()) + " cells under a header of " +
                        std::to_string(table.header.size()) + " in " + path.string());
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c, path));
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw ConfigError(path.string() + " has no header line");
  return table;
}

void write_profile_csv(const std::filesystem::path& path, const ReactionDiffusionModel& model,
                       const SpatialProfile& profile) {
  require_dimension(model, profile.dimension(), "write_profile_csv");
  auto out = open_out(path);
  write_header(out, model, {"x"});
  for (int i = 0; i < profile.size(); ++i) {
    write_row(out, {profile.grid().node(i)}, profile.state(i));
  }
  finish(out, path);
}

SpatialProfile read_profile_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header.empty() || t.header.front() != "x" || t.header.size() < 2) {
    throw ConfigError(path.string() + " is not a profile CSV (first column must be x)");
  }
  const auto nodes = static_cast<int>(t.rows.size());
  if (nodes < 3) throw ConfigError(path.string() + " has fewer than 3 profile nodes");
  const Grid1D grid(nodes);
  const auto n = static_cast<Eigen::Index>(t.header.size() - 1);
  Matrix states(n, nodes);
  for (int i = 0; i < nodes; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    if (std::abs(row[0] - grid.node(i)) > 1e-9) {
      throw ConfigError(path.string() + " is not on a uniform grid over [0, 1]");
    }
    for (Eigen::Index k = 0; k < n; ++k) states(k, i) = row[static_cast<std::size_t>(k + 1)];
  }
  return SpatialProfile(grid, std::move(states));
}

void write_history_csv(const std::filesystem::path& path, const ReactionDiffusionModel& model,
                       std::span<const ResidualSample> history) {
  auto out = open_out(path);
  out << provenance_line(model) << '\n' << "t,residual\n";
  for (const auto& s : history) out << format_double(s.t) << ',' << format_double(s.residual) << '\n';
  finish(out, path);
}

void write_mesh_csv(const std::filesystem::path& path, const ReactionDiffusionModel& model,
                    const GqlDecomposition& dec, const SlowManifoldMesh& mesh) {
  require_dimension(model, dec.dimension(), "write_mesh_csv");
  auto out = open_out(path);
  std::vector<std::string> lead;
  for (int k = 0; k < dec.n_slow; ++k) lead.push_back("V" + std::to_string(k + 1));
  write_header(out, model, lead);
  for (std::size_t node = 0; node < mesh.states.size(); ++node) {
    if (!mesh.states[node]) continue;
    const Vector v = mesh.grid.point(node);
    bool first = true;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      out << (first ? "" : ",") << format_double(v[k]);
      first = false;
    }
    for (Eigen::Index k = 0; k < mesh.states[node]->size(); ++k) {
      out << ',' << format_double((*mesh.states[node])[k]);
    }
    out << '\n';
  }
  finish(out, path);
}

void write_redim1d_csv(const std::filesystem::path& path, const ReactionDiffusionModel& model,
                       const Manifold1D& manifold) {
  require_dimension(model, manifold.states.rows(), "write_redim1d_csv");
  auto out = open_out(path);
  write_header(out, model, {"theta"});
  for (int j = 0; j < manifold.size(); ++j) {
    write_row(out, {manifold.theta.node(j)}, manifold.states.col(j));
  }
  finish(out, path);
}

void write_redim2d_csv(const std::filesystem::path& path, const ReactionDiffusionModel& model,
                       const Manifold2D& manifold) {
  require_dimension(model, 3, "write_redim2d_csv");
  auto out = open_out(path);
  write_header(out, model, {"theta1", "theta2"});
  for (int i = 0; i < manifold.theta1.count; ++i) {
    for (int j = 0; j < manifold.theta2.count; ++j) {
      write_row(out, {manifold.theta1.node(i), manifold.theta2.node(j)}, manifold.state(i, j));
    }
  }
  finish(out, path);
}

void write_fasttime_csv(std::ostream& out, const ReactionDiffusionModel& model,
                        std::span<const FastTimeReport> reports, const std::string& note) {
  out << provenance_line(model) << '\n';
  if (!note.empty()) out << "# " << note << '\n';
  out << "epsilon,K,dist,t_enter,bound,ratio\n";
  for (const auto& r : reports) {
    out << format_double(r.epsilon) << ',' << format_double(r.K) << ','
        << format_double(r.y0_distance) << ',' << format_double(r.t_enter) << ','
        << format_double(r.bound) << ',' << format_double(r.ratio) << '\n';
  }
}

void write_fasttime_csv(const std::filesystem::path& path, const ReactionDiffusionModel& model,
                        std::span<const FastTimeReport> reports, const std::string& note) {
  auto out = open_out(path);
  write_fasttime_csv(out, model, reports, note);
  finish(out, path);
}

std::string gql_report_json(const ReactionDiffusionModel& model, const GqlDecomposition& dec) {
  using nlohmann::ordered_json;
  const auto rows = [](const Matrix& m) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      ordered_json row = ordered_json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      out.push_back(std::move(row));
    }
    return out;
  };
  ordered_json j;
  j["provenance"] = provenance_line(model).substr(2);
  j["model"] = model.name();
  ordered_json params = ordered_json::object();
  for (const auto& [key, value] : model.parameters()) params[key] = value;
  j["parameters"] = std::move(params);
  ordered_json eig = ordered_json::array();
  for (const auto& lam : dec.eigenvalues) eig.push_back({{"re", lam.real()}, {"im", lam.imag()}});
  j["eigenvalues"] = std::move(eig);
  j["split_index"] = dec.split_index;
  j["n_fast"] = dec.n_fast;
  j["n_slow"] = dec.n_slow;
  j["epsilon"] = dec.epsilon;
  j["gap_ratio"] = dec.gap_ratio;
  j["T"] = rows(dec.T);
  j["Z"] = rows(dec.basis);
  j["Z_tilde"] = rows(dec.basis_inverse);
  return j.dump(2) + "\n";
}

void write_gql_report(const std::filesystem::path& path, const ReactionDiffusionModel& model,
                      const GqlDecomposition& dec) {
  auto out = open_out(path);
  out << gql_report_json(model, dec);
  finish(out, path);
}

}  // namespace fastslow

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>

#include "fastslow/errors.hpp"
#include "fastslow/gql.hpp"
#include "fastslow/io.hpp"
#include "fastslow/models.hpp"
#include "fastslow/pde.hpp"
#include "fastslow/pipeline.hpp"
#include "fastslow/redim.hpp"

namespace py = pybind11;
using namespace fastslow;

PYBIND11_MODULE(_fastslow, m) {
  m.doc() = "Fast/slow decomposition and reaction-diffusion manifolds";
  m.attr("__version__") = version();

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<ContractViolation>(m, "ContractViolation", error.ptr());
  auto convergence = py::register_exception<ConvergenceError>(m, "ConvergenceError", error.ptr());
  py::register_exception<NonEntryError>(m, "NonEntryError", convergence.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", error.ptr());
  py::register_exception<StabilityError>(m, "StabilityError", error.ptr());
  auto decomposition =
      py::register_exception<DecompositionError>(m, "DecompositionError", error.ptr());
  py::register_exception<IllPosedSampleError>(m, "IllPosedSampleError", decomposition.ptr());
  py::register_exception<ParametrizationError>(m, "ParametrizationError", error.ptr());

  py::class_<ReactionDiffusionModel>(m, "ReactionDiffusionModel")
      .def_property_readonly("dimension", &ReactionDiffusionModel::dimension)
      .def_property_readonly("name", &ReactionDiffusionModel::name)
      .def_property_readonly("species", &ReactionDiffusionModel::species)
      .def_property_readonly("parameters", &ReactionDiffusionModel::parameters)
      .def("diffusion", &ReactionDiffusionModel::diffusion);

  py::class_<MichaelisMentenParams>(m, "MichaelisMentenParams")
      .def(py::init<>())
      .def_readwrite("L1", &MichaelisMentenParams::L1)
      .def_readwrite("L2", &MichaelisMentenParams::L2)
      .def_readwrite("L3", &MichaelisMentenParams::L3)
      .def_readwrite("L4", &MichaelisMentenParams::L4)
      .def_readwrite("mu", &MichaelisMentenParams::mu)
      .def_readwrite("delta", &MichaelisMentenParams::delta);

  py::class_<MichaelisMentenModel, ReactionDiffusionModel>(m, "MichaelisMentenModel")
      .def(py::init<MichaelisMentenParams>(), py::arg("params") = MichaelisMentenParams{})
      .def_property_readonly("params", &MichaelisMentenModel::params)
      .def_static("boundary_state", &MichaelisMentenModel::boundary_state)
      .def_static("working_box_lower", &MichaelisMentenModel::working_box_lower)
      .def_static("working_box_upper", &MichaelisMentenModel::working_box_upper);

  py::class_<LinearModel, ReactionDiffusionModel>(m, "LinearModel")
      .def(py::init([](const Matrix& A, const Vector& shift, const Vector& diffusion) {
             return LinearModel(LinearModelParams{A, shift, diffusion});
           }),
           py::arg("A"), py::arg("shift"), py::arg("diffusion"));

  m.def("eval_source", [](const ReactionDiffusionModel& model, const Vector& z) {
    return eval_source(model, z);
  });
  m.def("jacobian", [](const ReactionDiffusionModel& model, const Vector& z) {
    return jacobian(model, z);
  });
  m.def(
      "equilibrium",
      [](const ReactionDiffusionModel& model, const Vector& guess, double tol) {
        EquilibriumOptions opts;
        opts.tol = tol;
        return equilibrium(model, guess, opts);
      },
      py::arg("model"), py::arg("guess"), py::arg("tol") = 1e-12);

  m.def(
      "build_surrogate",
      [](const ReactionDiffusionModel& model, const std::vector<Vector>& samples,
         const std::string& mode) {
        SurrogateMode sm;
        if (mode == "least_squares") {
          sm = SurrogateMode::least_squares;
        } else if (mode == "exact") {
          sm = SurrogateMode::exact;
        } else {
          throw ConfigError("unknown surrogate mode '" + mode + "'");
        }
        return build_surrogate(model, samples, sm);
      },
      py::arg("model"), py::arg("samples"), py::arg("mode") = "least_squares");

  py::class_<GqlDecomposition>(m, "GqlDecomposition")
      .def_readonly("T", &GqlDecomposition::T)
      .def_readonly("eigenvalues", &GqlDecomposition::eigenvalues)
      .def_readonly("split_index", &GqlDecomposition::split_index)
      .def_readonly("n_fast", &GqlDecomposition::n_fast)
      .def_readonly("n_slow", &GqlDecomposition::n_slow)
      .def_readonly("basis", &GqlDecomposition::basis)
      .def_readonly("basis_inverse", &GqlDecomposition::basis_inverse)
      .def_readonly("fast_block", &GqlDecomposition::fast_block)
      .def_readonly("slow_block", &GqlDecomposition::slow_block)
      .def_readonly("epsilon", &GqlDecomposition::epsilon)
      .def_readonly("gap_ratio", &GqlDecomposition::gap_ratio);

  m.def("spectral_split", &spectral_split, py::arg("T"), py::arg("min_gap_ratio") = 10.0);
  m.def("to_fast_slow_coords", [](const GqlDecomposition& dec, const Vector& z) {
    const auto p = to_fast_slow_coords(dec, z);
    return py::make_tuple(p.fast, p.slow);
  });
  m.def("from_fast_slow_coords", [](const GqlDecomposition& dec, const Vector& fast,
                                    const Vector& slow) {
    return from_fast_slow_coords(dec, fast, slow);
  });

  m.def(
      "integrate_to_steady",
      [](const ReactionDiffusionModel& model, const Vector& left, const Vector& right,
         int nodes, double steady_tol, double max_time) {
        SolverSettings s;
        s.node_count = nodes;
        s.steady_tol = steady_tol;
        s.max_time = max_time;
        std::optional<SteadyStateResult> result;
        {
          py::gil_scoped_release release;
          result = integrate_to_steady(model, BoundaryConditions{left, right}, s);
        }
        const auto& r = *result;
        py::dict out;
        out["x"] = r.profile.grid().nodes();
        out["states"] = r.profile.states();
        out["elapsed_time"] = r.elapsed_time;
        out["steps"] = r.steps;
        out["residual"] = r.residual;
        return out;
      },
      py::arg("model"), py::arg("left"), py::arg("right"), py::arg("nodes") = 101,
      py::arg("steady_tol") = 1e-8, py::arg("max_time") = 1e4);

  m.def("pseudo_inverse", [](const Matrix& a) { return pseudo_inverse(a); });
  m.def("tangent_projector", [](const Matrix& a) { return tangent_projector(a); });

  m.def(
      "run_pipeline",
      [](const std::string& config_json) {
        RunConfig config;
        config.apply_json(config_json);
        PipelineResult r;
        {
          py::gil_scoped_release release;
          r = run_pipeline(config);
        }
        py::dict out;
        std::vector<std::string> artifacts;
        for (const auto& p : r.artifacts) artifacts.push_back(p.string());
        out["artifacts"] = artifacts;
        out["epsilon"] = r.decomposition.epsilon;
        out["n_fast"] = r.decomposition.n_fast;
        out["ode_ratio"] = r.ode.ratio;
        out["pde_ratio"] = r.pde.ratio;
        return out;
      },
      py::arg("config_json") = "{}");
}

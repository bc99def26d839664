#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hinfstab/benchmark.hpp"
#include "hinfstab/hinf_norm.hpp"
#include "hinfstab/objectives.hpp"
#include "hinfstab/plant_io.hpp"
#include "hinfstab/synthesis.hpp"

namespace py = pybind11;
using namespace hinfstab;

PYBIND11_MODULE(_hinfstab, m) {
  m.doc() = "Fixed-order strong-stabilization Hinf synthesis";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<WellPosednessError>(m, "WellPosednessError", base.ptr());
  py::register_exception<UnstableSystem>(m, "UnstableSystem", base.ptr());
  py::register_exception<AllRunsFailed>(m, "AllRunsFailed", base.ptr());
  py::register_exception<InfiniteStart>(m, "InfiniteStart", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base.ptr());

  py::class_<StateSpaceSystem>(m, "StateSpaceSystem")
      .def(py::init<Matrix, Matrix, Matrix, Matrix>(), py::arg("A"), py::arg("B"), py::arg("C"),
           py::arg("D"))
      .def_property_readonly("A", &StateSpaceSystem::A)
      .def_property_readonly("B", &StateSpaceSystem::B)
      .def_property_readonly("C", &StateSpaceSystem::C)
      .def_property_readonly("D", &StateSpaceSystem::D);

  py::class_<GeneralizedPlant>(m, "GeneralizedPlant")
      .def(py::init([](Matrix A, Matrix B1, Matrix B2, Matrix C1, Matrix C2, Matrix D11,
                       Matrix D12, Matrix D21, Matrix D22) {
             return GeneralizedPlant(PlantMatrices{A, B1, B2, C1, C2, D11, D12, D21, D22});
           }),
           py::arg("A"), py::arg("B1"), py::arg("B2"), py::arg("C1"), py::arg("C2"),
           py::arg("D11"), py::arg("D12"), py::arg("D21"), py::arg("D22"))
      .def_property_readonly("A", &GeneralizedPlant::A)
      .def_property_readonly("B1", &GeneralizedPlant::B1)
      .def_property_readonly("B2", &GeneralizedPlant::B2)
      .def_property_readonly("C1", &GeneralizedPlant::C1)
      .def_property_readonly("C2", &GeneralizedPlant::C2)
      .def_property_readonly("D11", &GeneralizedPlant::D11)
      .def_property_readonly("D12", &GeneralizedPlant::D12)
      .def_property_readonly("D21", &GeneralizedPlant::D21)
      .def_property_readonly("D22", &GeneralizedPlant::D22)
      .def_property_readonly("dims", [](const GeneralizedPlant& p) {
        const PlantDims d = p.dims();
        return py::make_tuple(d.n, d.m1, d.m2, d.p1, d.p2);
      });

  py::class_<ControllerParams>(m, "ControllerParams")
      .def(py::init([](const Matrix& AK, const Matrix& BK, const Matrix& CK, const Matrix& DK) {
             return ControllerParams::from_matrices(AK, BK, CK, DK);
           }),
           py::arg("AK"), py::arg("BK"), py::arg("CK"), py::arg("DK"))
      .def_property_readonly("order", &ControllerParams::order)
      .def_property_readonly("theta", &ControllerParams::theta)
      .def_property_readonly("AK", &ControllerParams::AK)
      .def_property_readonly("BK", &ControllerParams::BK)
      .def_property_readonly("CK", &ControllerParams::CK)
      .def_property_readonly("DK", &ControllerParams::DK)
      .def("__eq__", [](const ControllerParams& a, const ControllerParams& b) { return a == b; });

  py::class_<NormResult>(m, "NormResult")
      .def_readonly("value", &NormResult::value)
      .def_readonly("peak_omega", &NormResult::peak_omega)
      .def_readonly("attained_at_infinity", &NormResult::attained_at_infinity);

  m.def("hinf_norm", &hinf_norm, py::arg("sys"), py::arg("rtol") = kDefaultNormRtol);
  m.def("spectral_abscissa", &spectral_abscissa, py::arg("M"));
  m.def("freq_response", &freq_response, py::arg("sys"), py::arg("omega"));
  m.def("close_loop", &close_loop, py::arg("plant"), py::arg("K"));

  m.def(
      "objective",
      [](const GeneralizedPlant& plant, const ControllerParams& K, double epsilon,
         const std::string& phase) {
        if (phase != "stabilize" && phase != "performance") {
          throw Error("objective: phase must be 'performance' or 'stabilize'");
        }
        ObjectiveSpec spec{plant, K.order(), epsilon,
                           phase == "stabilize" ? Phase::Stabilize : Phase::Performance, {}};
        spec.validate();
        const GradEval g = evaluate(spec, K);
        return py::make_tuple(g.value, g.grad);
      },
      py::arg("plant"), py::arg("K"), py::arg("epsilon") = 1e-3,
      py::arg("phase") = "performance",
      "Objective value and gradient with respect to K.theta; phase is "
      "'performance' or 'stabilize'.");

  py::class_<RunRecord>(m, "RunRecord")
      .def_readonly("epsilon", &RunRecord::epsilon)
      .def_readonly("run_index", &RunRecord::run_index)
      .def_readonly("seed", &RunRecord::seed)
      .def_property_readonly("outcome",
                             [](const RunRecord& r) { return std::string(to_string(r.outcome)); })
      .def_readonly("final_f", &RunRecord::final_f)
      .def_readonly("gamma", &RunRecord::gamma)
      .def_readonly("wall_seconds", &RunRecord::wall_seconds);

  py::class_<SynthesisResult>(m, "SynthesisResult")
      .def_readonly("best_K", &SynthesisResult::best_K)
      .def_readonly("gamma", &SynthesisResult::gamma)
      .def_readonly("controller_stable", &SynthesisResult::controller_stable)
      .def_readonly("closed_loop_stable", &SynthesisResult::closed_loop_stable)
      .def_readonly("best_epsilon", &SynthesisResult::best_epsilon)
      .def_readonly("best_seed", &SynthesisResult::best_seed)
      .def_readonly("per_run", &SynthesisResult::per_run)
      .def("trace", &format_trace);

  m.def(
      "synthesize",
      [](const GeneralizedPlant& plant, Index order, std::vector<double> epsilons, int runs,
         double cpumax, std::uint64_t seed, std::vector<ControllerParams> init) {
        SynthesisConfig cfg;
        cfg.order = order;
        if (!epsilons.empty()) cfg.epsilons = std::move(epsilons);
        cfg.runs_per_epsilon = runs;
        cfg.cpumax = cpumax;
        cfg.seed = seed;
        cfg.init_controllers = std::move(init);
        py::gil_scoped_release release;
        return synthesize(plant, cfg);
      },
      py::arg("plant"), py::arg("order"), py::arg("epsilons") = std::vector<double>{},
      py::arg("runs") = 10, py::arg("cpumax") = 300.0, py::arg("seed") = 0,
      py::arg("init") = std::vector<ControllerParams>{});

  m.def("parse_plant", [](const std::string& text) { return parse_plant(text); });
  m.def("serialize_plant",
        [](const GeneralizedPlant& p, const std::string& name) { return serialize_plant(p, name); },
        py::arg("plant"), py::arg("name") = "");
  m.def("load_plant", [](const std::filesystem::path& p) { return load_plant(p).plant; });
  m.def("parse_controller", [](const std::string& text) { return parse_controller(text); });
  m.def("serialize_controller",
        [](const ControllerParams& K, const std::string& name) {
          return serialize_controller(K, name);
        },
        py::arg("K"), py::arg("name") = "");
}

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "demosuff/experiments.hpp"
#include "demosuff/screw.hpp"

namespace py = pybind11;
using namespace demosuff;
using nlohmann::json;

namespace {

json to_cpp(const py::object& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

AcquisitionConfig config_from(const py::object& o) {
  AcquisitionConfig c = py::isinstance<py::str>(o) ? load_config(o.cast<std::string>()) : to_cpp(o).get<AcquisitionConfig>();
  c.validate();
  return c;
}

py::dict screw_dict(const ScrewParameters& s) {
  py::dict d;
  d["axis_direction"] = s.axis_direction;
  d["axis_point"] = s.axis_point;
  d["angle"] = s.angle;
  d["translation_along_axis"] = s.translation_along_axis;
  d["pitch"] = s.pitch();
  d["is_pure_translation"] = s.is_pure_translation;
  d["is_identity"] = s.is_identity;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Demonstration sufficiency: screw geometry, PAC coverage bandit, acquisition loop";

  py::class_<Pose>(m, "Pose")
      .def(py::init<>())
      .def(py::init([](const Eigen::Vector4d& wxyz, const Eigen::Vector3d& t) {
             return Pose(Eigen::Quaterniond(wxyz[0], wxyz[1], wxyz[2], wxyz[3]), t);
           }),
           py::arg("quaternion_wxyz"), py::arg("translation"))
      .def_static("from_axis_angle", &Pose::from_axis_angle, py::arg("axis"), py::arg("angle"),
                  py::arg("translation") = Eigen::Vector3d::Zero())
      .def_static("from_translation", &Pose::from_translation)
      .def_static("from_matrix", &Pose::from_matrix)
      .def_property_readonly("translation", [](const Pose& p) { return Eigen::Vector3d(p.translation()); })
      .def_property_readonly("quaternion",
                             [](const Pose& p) {
                               const auto& q = p.rotation();
                               return Eigen::Vector4d(q.w(), q.x(), q.y(), q.z());
                             })
      .def("matrix", &Pose::matrix)
      .def("inverse", &Pose::inverse)
      .def("__mul__", [](const Pose& a, const Pose& b) { return a * b; })
      .def("__repr__", [](const Pose& p) { return "Pose(" + json(p).dump() + ")"; });

  m.def("pose_distance", &pose_distance);
  m.def("screw_log", [](const Pose& g) { return screw_dict(screw_log(g)); });
  m.def("sclerp", &sclerp, py::arg("g1"), py::arg("g2"), py::arg("tau"));
  m.def(
      "segment_into_screws", [](const std::vector<Pose>& path, double threshold) {
        return segment_into_screws(path, threshold);
      },
      py::arg("path"), py::arg("threshold") = kDefaultSegmentationThreshold);
  m.def(
      "discretize_screw_path",
      [](const std::vector<Pose>& guides, double step) {
        std::vector<std::pair<Pose, int>> out;
        for (const Waypoint& w : discretize_screw_path(guides, step)) out.emplace_back(w.pose, w.segment);
        return out;
      },
      py::arg("guides"), py::arg("max_step"));

  m.def("builtin_model_ids", &builtin_model_ids);
  m.def(
      "forward_kinematics",
      [](const std::string& model, const std::vector<double>& q) {
        JointConfig c(static_cast<Eigen::Index>(q.size()));
        for (std::size_t i = 0; i < q.size(); ++i) c[static_cast<Eigen::Index>(i)] = q[i];
        return forward_kinematics(builtin_model(model), c);
      },
      py::arg("model"), py::arg("q"));

  m.def("per_arm_sample_count", &per_arm_sample_count, py::arg("epsilon"), py::arg("delta"), py::arg("K"));
  m.def("stopping_satisfied", &stopping_satisfied, py::arg("best_mu_hat"), py::arg("epsilon"), py::arg("beta"));
  m.def("early_stop_beta", &early_stop_beta, py::arg("best_mu_hat"), py::arg("epsilon"));

  m.def(
      "load_config", [](const std::string& path) { return to_py(json(load_config(path))); }, py::arg("path"));
  m.def(
      "run_acquisition",
      [](const py::object& config, bool record_samples) {
        const AcquisitionConfig c = config_from(config);
        AcquisitionState s;
        {
          py::gil_scoped_release release;
          s = run_acquisition(c);
        }
        return to_py(state_to_json(s, record_samples));
      },
      py::arg("config"), py::arg("record_samples") = false);
  m.def(
      "run_k_sweep",
      [](const py::object& config, const std::vector<int>& Ks, int reps, int threads) {
        const AcquisitionConfig c = config_from(config);
        KSweepResult r;
        {
          py::gil_scoped_release release;
          r = run_k_sweep(c, Ks, reps, threads);
        }
        return to_py(json{{"rows_csv", r.rows_csv()}, {"pmf_csv", r.pmf_csv()}, {"summary", r.summary()}});
      },
      py::arg("config"), py::arg("K") = std::vector<int>{1, 4, 16}, py::arg("reps") = 100, py::arg("threads") = 1);
  m.def(
      "run_mask_study",
      [](const py::object& scenario, int K_eval, double resolution) {
        MaskStudyReport r;
        if (py::isinstance<py::str>(scenario)) {
          const std::string path = scenario.cast<std::string>();
          py::gil_scoped_release release;
          r = run_mask_study(std::filesystem::path(path));
        } else {
          const AcquisitionConfig c = config_from(scenario);
          py::gil_scoped_release release;
          r = run_mask_study(c, K_eval, resolution);
        }
        return to_py(json(r));
      },
      py::arg("scenario"), py::arg("K_eval") = 16, py::arg("resolution") = 0.01);
  m.def(
      "validate_bandit",
      [](const std::vector<double>& mu, double epsilon, double delta, int runs, std::uint64_t seed) {
        return to_py(json(validate_bandit(mu, epsilon, delta, runs, seed)));
      },
      py::arg("mu"), py::arg("epsilon"), py::arg("delta"), py::arg("runs") = 200, py::arg("seed") = 1);

  m.attr("DATA_DIR") = DEMOSUFF_DATA_DIR;
}

#include "viewloc/baselines.hpp"
#include "viewloc/errors.hpp"
#include "viewloc/eval.hpp"
#include "viewloc/locmap.hpp"
#include "viewloc/model.hpp"
#include "viewloc/oracle.hpp"
#include "viewloc/planner.hpp"
#include "viewloc/sfm_io.hpp"
#include "viewloc/simworld.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

namespace py = pybind11;
using namespace viewloc;

namespace {

json parse_cfg(const std::string& s) { return s.empty() ? json::object() : json::parse(s); }

Eigen::MatrixXd positions(const std::vector<Vec3>& v) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 3);
    for (std::size_t k = 0; k < v.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = v[k].transpose();
    return m;
}

std::vector<Vec3> rows_to_points(const Eigen::MatrixXd& m) {
    if (m.cols() != 3) throw ConfigError("expected an N x 3 array");
    std::vector<Vec3> out;
    for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(m.row(r).transpose());
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "viewloc core: synthetic scenes, localization oracle, LocMap model, planner";

    static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(base.ptr(), e.what());
        } catch (const json::exception& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    py::class_<SceneModel>(m, "Scene")
        .def_static("load", &load_scene, py::arg("path"))
        .def_static("from_colmap", &parse_colmap_text, py::arg("dir"))
        .def("save", [](const SceneModel& s, const std::string& p) { save_scene(s, p); }, py::arg("path"))
        .def("to_colmap", [](const SceneModel& s, const std::string& d) { write_colmap_text(s, d); }, py::arg("dir"))
        .def_property_readonly("n_poses", [](const SceneModel& s) { return s.poses.size(); })
        .def_property_readonly("n_landmarks", [](const SceneModel& s) { return s.points.size(); })
        .def_property_readonly("landmark_positions",
                               [](const SceneModel& s) {
                                   std::vector<Vec3> v;
                                   for (const auto& p : s.points) v.push_back(p.landmark.position);
                                   return positions(v);
                               })
        .def_property_readonly("pose_positions",
                               [](const SceneModel& s) {
                                   std::vector<Vec3> v;
                                   for (const auto& p : s.poses) v.push_back(p.pose.position);
                                   return positions(v);
                               })
        .def("sparsify", &sparsify, py::arg("fraction"), py::arg("seed") = 0)
        .def("in_free_space", &SceneModel::in_free_space, py::arg("point"), py::arg("margin") = 0.0);

    m.def(
        "generate_scene", [](const std::string& spec) { return generate_scene(scene_spec_from_json(parse_cfg(spec))); },
        py::arg("spec_json") = "");
    m.def(
        "mapping_sweep",
        [](SceneModel scene, const std::string& opts) {
            build_mapping_sweep(scene, sweep_options_from_json(parse_cfg(opts)));
            return scene;
        },
        py::arg("scene"), py::arg("options_json") = "", "Returns a mapped copy of the scene.");

    m.def(
        "label_waypoint",
        [](const SceneModel& scene, const Vec3& position, const std::string& opts, std::uint64_t scene_id,
           std::uint64_t waypoint_id) {
            const auto l = label_waypoint(scene, {position, 0.0}, label_options_from_json(parse_cfg(opts)),
                                          {scene_id, waypoint_id});
            py::dict d;
            d["labels"] = Eigen::MatrixXi(l.labels);
            d["t_err"] = l.t_err;
            d["r_err"] = l.r_err;
            return d;
        },
        py::arg("scene"), py::arg("position"), py::arg("options_json") = "", py::arg("scene_id") = 0,
        py::arg("waypoint_id") = 0);

    m.def(
        "generate_dataset",
        [](const std::vector<SceneModel>& scenes, const std::string& opts, const std::string& path) {
            const auto samples = generate_dataset(scenes, dataset_options_from_json(parse_cfg(opts)));
            write_dataset(path, samples);
            return samples.size();
        },
        py::arg("scenes"), py::arg("options_json"), py::arg("path"), "Writes JSON lines; returns the sample count.");

    m.def(
        "fif_locmap",
        [](const SceneModel& scene, const Vec3& position, const std::string& metric) {
            return fif_locmap(scene, {position, 0.0}, ViewGrid{}, fif_metric_from_string(metric), scene.intrinsics)
                .values;
        },
        py::arg("scene"), py::arg("position"), py::arg("metric") = "mineig");

    py::class_<Checkpoint>(m, "Model")
        .def_static("load", [](const std::string& p) { return load_checkpoint(p); }, py::arg("path"))
        .def("save", [](const Checkpoint& c, const std::string& p) { save_checkpoint(p, c.config, c.params, c.metadata); },
             py::arg("path"))
        .def_property_readonly("config_json", [](const Checkpoint& c) { return to_json(c.config).dump(); })
        .def_property_readonly("n_parameters", [](const Checkpoint& c) { return c.params.scalar_count(); })
        .def(
            "predict",
            [](const Checkpoint& c, const SceneModel& scene, const Vec3& position) {
                return predict_locmap(c.params, c.config, scene, {position, 0.0}).values;
            },
            py::arg("scene"), py::arg("position"));

    m.def(
        "train",
        [](const std::string& dataset_path, const std::string& model_cfg, const std::string& train_cfg) {
            const auto data = read_dataset(dataset_path);
            const ModelConfig mc = model_config_from_json(parse_cfg(model_cfg));
            const TrainOptions to = train_options_from_json(parse_cfg(train_cfg));
            TrainResult r;
            {
                py::gil_scoped_release release;
                r = train(data, mc, to);
            }
            return py::make_tuple(Checkpoint{mc, std::move(r.params), json::object()}, r.loss_history);
        },
        py::arg("dataset_path"), py::arg("model_json") = "", py::arg("train_json") = "",
        "Returns (model, per-epoch loss history).");

    m.def(
        "plan",
        [](const SceneModel& scene, const Eigen::MatrixXd& keypoints, const std::string& plan_cfg,
           const Checkpoint* model, const std::string& metric) {
            const PlanConfig pc = plan_config_from_json(parse_cfg(plan_cfg));
            Scorer scorer;
            switch (pc.scorer) {
                case ScorerKind::Model:
                    if (!model) throw ConfigError("the model scorer needs a model");
                    scorer = model_scorer(model->params, model->config, scene);
                    break;
                case ScorerKind::Fif: scorer = fif_scorer(scene, pc.grid, fif_metric_from_string(metric)); break;
                case ScorerKind::OracleLabels: {
                    LabelOptions lo;
                    lo.grid = pc.grid;
                    scorer = oracle_scorer(scene, lo, 0);
                    break;
                }
                case ScorerKind::ForwardFacing: break;
            }
            const Trajectory t = plan_viewpoints(rows_to_points(keypoints), pc, scorer);
            std::vector<Vec3> pos;
            std::vector<double> pitch, yaw;
            for (std::size_t k = 0; k < t.waypoints.size(); ++k) {
                pos.push_back(t.waypoints[k].position);
                const auto a = cell_to_angles(pc.grid, t.selected[k]);
                pitch.push_back(a.pitch);
                yaw.push_back(a.yaw);
            }
            py::dict d;
            d["positions"] = positions(pos);
            d["pitch_deg"] = pitch;
            d["yaw_deg"] = yaw;
            d["costs"] = t.costs;
            return d;
        },
        py::arg("scene"), py::arg("keypoints"), py::arg("plan_json") = "", py::arg("model") = nullptr,
        py::arg("metric") = "mineig");

    m.def(
        "success_rates",
        [](const std::vector<std::pair<double, double>>& errors) {
            std::vector<PoseError> e;
            for (const auto& [t, r] : errors) e.push_back({t, r});
            return success_rates(e, benchmark_thresholds());
        },
        py::arg("errors"), "Percent within each benchmark threshold for (t_err m, r_err deg) pairs.");

    m.def(
        "upsample",
        [](const Eigen::MatrixXd& values, int factor) { return upsample_locmap({ViewGrid{}, values}, factor).values; },
        py::arg("values"), py::arg("factor"), "Upsamples a 6 x 18 LocMap.");
}

#include "viewloc/oracle.hpp"

#include "viewloc/errors.hpp"
#include "viewloc/parallel.hpp"
#include "viewloc/rng.hpp"
#include "viewloc/simworld.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace viewloc {

void NoiseSpec::validate() const {
    if (!(pixel_sigma >= 0.0)) throw ConfigError("pixel_sigma must be >= 0");
    if (!(outlier_rate >= 0.0 && outlier_rate <= 1.0)) throw ConfigError("outlier_rate must be in [0, 1]");
    if (!(drop_rate >= 0.0 && drop_rate <= 1.0)) throw ConfigError("drop_rate must be in [0, 1]");
}

Observation simulate_observation(const SceneModel& scene, const Pose& true_pose,
                                 const CameraIntrinsics& intrinsics, const NoiseSpec& noise) {
    noise.validate();
    Rng rng(noise.seed);
    Observation obs;
    for (const auto& v : visible_landmarks(scene, true_pose, intrinsics)) {
        // fixed draw count per landmark keeps streams aligned across noise settings
        const double u_drop = rng.uniform();
        const double nx = rng.normal();
        const double ny = rng.normal();
        const double u_out = rng.uniform();
        const double ox = rng.uniform(0.0, intrinsics.width);
        const double oy = rng.uniform(0.0, intrinsics.height);
        if (u_drop < noise.drop_rate) continue;
        Vec2 px = v.pixel + noise.pixel_sigma * Vec2(nx, ny);
        if (u_out < noise.outlier_rate) px = {ox, oy};
        if (!intrinsics.in_bounds(px)) continue;
        obs.correspondences.push_back({v.index, px});
    }
    return obs;
}

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

double huber(double s, double delta) { return s <= delta ? 0.5 * s * s : delta * (s - 0.5 * delta); }

Pose retract(const Pose& p, const Vec6& d) {
    const Mat3 r = p.orientation.to_rotation();
    return {p.position + r * d.head<3>(), p.orientation * Quat::exp(d.tail<3>())};
}

double robust_cost(const Observation& obs, const SceneModel& scene, const CameraIntrinsics& k,
                   const Pose& pose, double delta) {
    const Mat3 rt = pose.orientation.to_rotation().transpose();
    double cost = 0.0;
    for (const auto& c : obs.correspondences) {
        const Vec3 xc = rt * (scene.points[c.landmark].landmark.position - pose.position);
        if (!(xc.z() > 1e-9)) return std::numeric_limits<double>::infinity();
        cost += huber((k.project(xc) - c.pixel).norm(), delta);
    }
    return std::isfinite(cost) ? cost : std::numeric_limits<double>::infinity();
}

}  // namespace

LocalizationResult solve_pose(const Observation& obs, const SceneModel& scene,
                              const CameraIntrinsics& k, const Pose& init, const SolveOptions& opts,
                              const Pose* truth) {
    LocalizationResult res;
    res.est_pose = init;
    if (obs.correspondences.size() < opts.min_points) return res;

    const double delta = opts.huber_delta;
    Pose pose = init;
    double cost = robust_cost(obs, scene, k, pose, delta);
    if (!std::isfinite(cost)) return res;
    res.cost_history.push_back(cost);

    for (int it = 0; it < opts.max_iters; ++it) {
        res.iterations = it + 1;
        const Mat3 rt = pose.orientation.to_rotation().transpose();
        Mat6 h = Mat6::Zero();
        Vec6 g = Vec6::Zero();
        for (const auto& c : obs.correspondences) {
            const Vec3 xc = rt * (scene.points[c.landmark].landmark.position - pose.position);
            const double iz = 1.0 / xc.z();
            const Vec2 r = k.project(xc) - c.pixel;
            Eigen::Matrix<double, 2, 3> dproj;
            dproj << k.fx * iz, 0.0, -k.fx * xc.x() * iz * iz, 0.0, k.fy * iz, -k.fy * xc.y() * iz * iz;
            Eigen::Matrix<double, 3, 6> dxc;
            dxc.leftCols<3>() = -Mat3::Identity();
            dxc.rightCols<3>() = skew(xc);
            const Eigen::Matrix<double, 2, 6> jac = dproj * dxc;
            const double s = r.norm();
            const double w = s <= delta ? 1.0 : delta / s;
            h.noalias() += w * jac.transpose() * jac;
            g.noalias() += w * jac.transpose() * r;
        }
        if (!h.allFinite() || !g.allFinite()) return res;
        const Eigen::SelfAdjointEigenSolver<Mat6> eig(h);
        if (eig.info() != Eigen::Success || eig.eigenvalues()(0) <= 1e-12 * std::max(1.0, eig.eigenvalues()(5)))
            return res;
        const Vec6 step = -eig.eigenvectors() *
                          (eig.eigenvalues().cwiseInverse().asDiagonal() * (eig.eigenvectors().transpose() * g));
        if (!step.allFinite()) return res;

        double alpha = 1.0;
        Pose candidate = retract(pose, step);
        double c_new = robust_cost(obs, scene, k, candidate, delta);
        for (int halvings = 0; !(c_new <= cost) && halvings < 30; ++halvings) {
            alpha *= 0.5;
            candidate = retract(pose, alpha * step);
            c_new = robust_cost(obs, scene, k, candidate, delta);
        }
        if (!(c_new <= cost)) {
            // no descent left: at the numerical minimum if the proposed step is tiny
            res.converged = step.norm() < 1e-5;
            break;
        }
        pose = candidate;
        cost = c_new;
        res.cost_history.push_back(cost);
        if (alpha * step.norm() < opts.convergence_eps) {
            res.converged = true;
            break;
        }
    }

    res.est_pose = pose;
    const Mat3 rt = pose.orientation.to_rotation().transpose();
    for (const auto& c : obs.correspondences) {
        const Vec3 xc = rt * (scene.points[c.landmark].landmark.position - pose.position);
        if (xc.z() > 1e-9 && (k.project(xc) - c.pixel).norm() < 3.0 * delta) ++res.n_inliers;
    }
    res.success = res.converged && res.n_inliers >= opts.min_points;
    if (res.success && truth != nullptr) {
        const auto e = pose_error(pose, *truth);
        res.t_err = e.t_err;
        res.r_err = e.r_err;
    }
    return res;
}

const Threshold& LabelOptions::label_threshold() const {
    if (label_threshold_index < 0 || label_threshold_index >= static_cast<int>(thresholds.size()))
        throw ConfigError("label_threshold_index " + std::to_string(label_threshold_index) +
                          " outside threshold list of size " + std::to_string(thresholds.size()));
    return thresholds[label_threshold_index];
}

LabelOptions label_options_from_json(const json& j) {
    LabelOptions o;
    if (j.contains("grid")) o.grid = grid_from_json(j.at("grid"));
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        o.noise.pixel_sigma = n.value("pixel_sigma", o.noise.pixel_sigma);
        o.noise.outlier_rate = n.value("outlier_rate", o.noise.outlier_rate);
        o.noise.drop_rate = n.value("drop_rate", o.noise.drop_rate);
        o.noise.seed = n.value("seed", o.noise.seed);
    }
    if (j.contains("solve")) {
        const auto& s = j.at("solve");
        o.solve.max_iters = s.value("max_iters", o.solve.max_iters);
        o.solve.huber_delta = s.value("huber_delta", o.solve.huber_delta);
        o.solve.convergence_eps = s.value("convergence_eps", o.solve.convergence_eps);
        o.solve.min_points = s.value("min_points", o.solve.min_points);
    }
    if (j.contains("thresholds")) {
        o.thresholds.clear();
        for (const auto& t : j.at("thresholds")) o.thresholds.push_back({t.at(0).get<double>(), t.at(1).get<double>()});
    }
    o.label_threshold_index = j.value("label_threshold_index", o.label_threshold_index);
    o.init_translation = j.value("init_translation", o.init_translation);
    o.init_rotation = j.value("init_rotation", o.init_rotation);
    o.noise.validate();
    o.label_threshold();
    return o;
}

json to_json(const LabelOptions& o) {
    json th = json::array();
    for (const auto& t : o.thresholds) th.push_back({t.t_m, t.r_deg});
    return {{"grid", to_json(o.grid)},
            {"noise",
             {{"pixel_sigma", o.noise.pixel_sigma},
              {"outlier_rate", o.noise.outlier_rate},
              {"drop_rate", o.noise.drop_rate},
              {"seed", o.noise.seed}}},
            {"solve",
             {{"max_iters", o.solve.max_iters},
              {"huber_delta", o.solve.huber_delta},
              {"convergence_eps", o.solve.convergence_eps},
              {"min_points", o.solve.min_points}}},
            {"thresholds", th},
            {"label_threshold_index", o.label_threshold_index},
            {"init_translation", o.init_translation},
            {"init_rotation", o.init_rotation}};
}

namespace {

Vec3 random_unit(Rng& rng) {
    for (;;) {
        const Vec3 v(rng.normal(), rng.normal(), rng.normal());
        const double n = v.norm();
        if (n > 1e-12) return v / n;
    }
}

}  // namespace

LocalizationResult localize_cell(const SceneModel& scene, const Waypoint& wp, GridCell cell,
                                 const LabelOptions& opts, TrialKey key) {
    const auto cell_index = static_cast<std::uint64_t>(cell.i * opts.grid.n_yaw + cell.j);
    const std::uint64_t base = derive_seed(opts.noise.seed, {key.scene_id, key.waypoint_id, cell_index});
    const Pose truth = pose_for_cell(opts.grid, wp, cell);

    NoiseSpec noise = opts.noise;
    noise.seed = derive_seed(base, {1});
    const Observation obs = simulate_observation(scene, truth, scene.intrinsics, noise);

    Rng init_rng(derive_seed(base, {2}));
    const Vec3 dt = random_unit(init_rng) * init_rng.uniform(0.0, opts.init_translation);
    const Vec3 axis = random_unit(init_rng);
    const double angle = deg2rad(init_rng.uniform(0.0, opts.init_rotation));
    const Pose init{truth.position + dt, truth.orientation * Quat::from_axis_angle(axis, angle)};
    return solve_pose(obs, scene, scene.intrinsics, init, opts.solve, &truth);
}

WaypointLabels label_waypoint(const SceneModel& scene, const Waypoint& wp, const LabelOptions& opts,
                              TrialKey key) {
    opts.grid.validate();
    const Threshold& th = opts.label_threshold();
    WaypointLabels out;
    out.labels = Eigen::MatrixXi::Zero(opts.grid.n_pitch, opts.grid.n_yaw);
    out.t_err.resize(opts.grid.n_pitch, opts.grid.n_yaw);
    out.r_err.resize(opts.grid.n_pitch, opts.grid.n_yaw);
    for (int i = 0; i < opts.grid.n_pitch; ++i) {
        for (int j = 0; j < opts.grid.n_yaw; ++j) {
            const auto r = localize_cell(scene, wp, {i, j}, opts, key);
            out.t_err(i, j) = r.t_err;
            out.r_err(i, j) = r.r_err;
            out.labels(i, j) = r.success && within(r.t_err, r.r_err, th) ? 1 : 0;
        }
    }
    return out;
}

std::array<double, 3> error_quartiles(const std::vector<const Eigen::MatrixXd*>& t_err,
                                      const std::vector<const Eigen::MatrixXd*>& r_err,
                                      const Threshold& th) {
    std::vector<double> e;
    for (std::size_t s = 0; s < t_err.size(); ++s)
        for (Eigen::Index k = 0; k < t_err[s]->size(); ++k) {
            const double t = (*t_err[s])(k);
            const double r = (*r_err[s])(k);
            if (std::isfinite(t) && std::isfinite(r)) e.push_back(std::max(t / th.t_m, r / th.r_deg));
        }
    if (e.empty()) return {0.0, 0.0, 0.0};
    std::sort(e.begin(), e.end());
    auto q = [&](double f) { return e[static_cast<std::size_t>(std::floor(f * static_cast<double>(e.size() - 1)))]; };
    return {q(0.25), q(0.5), q(0.75)};
}

int quality_level(double t_err, double r_err, const std::array<double, 3>& b, const Threshold& th) {
    if (!std::isfinite(t_err) || !std::isfinite(r_err)) return 0;
    const double e = std::max(t_err / th.t_m, r_err / th.r_deg);
    if (e <= b[0]) return 3;
    if (e <= b[1]) return 2;
    if (e <= b[2]) return 1;
    return 0;
}

DatasetOptions dataset_options_from_json(const json& j) {
    DatasetOptions o;
    o.n_waypoints_per_scene = j.value("n_waypoints_per_scene", o.n_waypoints_per_scene);
    o.height_min = j.value("height_min", o.height_min);
    o.height_max = j.value("height_max", o.height_max);
    o.clearance = j.value("clearance", o.clearance);
    o.n_classes = j.value("n_classes", o.n_classes);
    if (j.contains("label")) o.label = label_options_from_json(j.at("label"));
    if (j.contains("preprocess")) {
        const auto& p = j.at("preprocess");
        o.preprocess.min_track = p.value("min_track", o.preprocess.min_track);
        o.preprocess.max_reproj = p.value("max_reproj", o.preprocess.max_reproj);
        o.preprocess.half_extent = p.value("half_extent", o.preprocess.half_extent);
    }
    o.seed = j.value("seed", o.seed);
    o.jobs = j.value("jobs", o.jobs);
    if (o.n_classes != 2 && o.n_classes != 4) throw ConfigError("n_classes must be 2 or 4");
    return o;
}

json to_json(const DatasetOptions& o) {
    return {{"n_waypoints_per_scene", o.n_waypoints_per_scene},
            {"height_min", o.height_min},
            {"height_max", o.height_max},
            {"clearance", o.clearance},
            {"n_classes", o.n_classes},
            {"label", to_json(o.label)},
            {"preprocess",
             {{"min_track", o.preprocess.min_track},
              {"max_reproj", o.preprocess.max_reproj},
              {"half_extent", o.preprocess.half_extent}}},
            {"seed", o.seed}};
}

std::vector<Waypoint> sample_waypoints(const SceneModel& scene, int n, double height_min,
                                       double height_max, double clearance, std::uint64_t seed) {
    Rng rng(seed);
    const Vec3 lo = scene.bounds.min_corner;
    const Vec3 hi = scene.bounds.max_corner;
    std::vector<Waypoint> out;
    constexpr int kMaxTries = 10000;
    for (int k = 0; k < n; ++k) {
        bool placed = false;
        for (int t = 0; t < kMaxTries && !placed; ++t) {
            const Vec3 p(quantize_coord(rng.uniform(lo.x() + clearance, hi.x() - clearance)),
                         quantize_coord(rng.uniform(lo.y() + clearance, hi.y() - clearance)),
                         quantize_coord(lo.z() + rng.uniform(height_min, height_max)));
            if (scene.in_free_space(p, clearance)) {
                out.push_back({p, 0.0});
                placed = true;
            }
        }
        if (!placed) throw ConfigError("could not sample a free-space waypoint");
    }
    return out;
}

std::vector<TrainingSample> generate_dataset(const std::vector<SceneModel>& scenes,
                                             const DatasetOptions& opts,
                                             std::vector<std::uint64_t> scene_ids) {
    if (opts.n_classes != 2 && opts.n_classes != 4) throw ConfigError("n_classes must be 2 or 4");
    if (scene_ids.empty())
        for (std::size_t s = 0; s < scenes.size(); ++s) scene_ids.push_back(s);
    if (scene_ids.size() != scenes.size()) throw ConfigError("one scene id per scene required");

    std::vector<TrainingSample> samples;
    std::vector<const SceneModel*> owner;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        if (scenes[s].poses.empty())
            throw ConfigError("scene " + std::to_string(scene_ids[s]) + " has no mapping poses (run a sweep first)");
        const auto wps = sample_waypoints(scenes[s], opts.n_waypoints_per_scene, opts.height_min, opts.height_max,
                                          opts.clearance, derive_seed(opts.seed, {scene_ids[s]}));
        for (std::size_t w = 0; w < wps.size(); ++w) {
            TrainingSample t;
            t.scene_id = scene_ids[s];
            t.waypoint_id = w;
            t.waypoint = wps[w];
            t.grid = opts.label.grid;
            samples.push_back(std::move(t));
            owner.push_back(&scenes[s]);
        }
    }

    parallel_for(samples.size(), opts.jobs, [&](std::size_t k) {
        auto& t = samples[k];
        const SceneModel& scene = *owner[k];
        auto ego = preprocess_inputs(scene.pose_list(), scene.landmark_list(), t.waypoint, opts.preprocess);
        t.poses = std::move(ego.poses);
        t.landmarks = std::move(ego.landmarks);
        auto lab = label_waypoint(scene, t.waypoint, opts.label, {t.scene_id, t.waypoint_id});
        t.labels = std::move(lab.labels);
        t.t_err = std::move(lab.t_err);
        t.r_err = std::move(lab.r_err);
    });

    if (opts.n_classes == 4) {
        std::vector<const Eigen::MatrixXd*> te, re;
        for (const auto& t : samples) {
            te.push_back(&t.t_err);
            re.push_back(&t.r_err);
        }
        const Threshold& th = opts.label.label_threshold();
        const auto bounds = error_quartiles(te, re, th);
        for (auto& t : samples)
            for (Eigen::Index k = 0; k < t.labels.size(); ++k)
                t.labels(k) = quality_level(t.t_err(k), t.r_err(k), bounds, th);
    }
    return samples;
}

json to_json(const TrainingSample& s) {
    json poses = json::array();
    for (const auto& p : s.poses) poses.push_back(to_json(p));
    json lms = json::array();
    for (const auto& l : s.landmarks) lms.push_back(to_json(l));
    json labels = json::array(), t_err = json::array(), r_err = json::array();
    for (Eigen::Index i = 0; i < s.labels.rows(); ++i) {
        json lr = json::array(), tr = json::array(), rr = json::array();
        for (Eigen::Index j = 0; j < s.labels.cols(); ++j) {
            lr.push_back(s.labels(i, j));
            tr.push_back(number_or_null(s.t_err(i, j)));
            rr.push_back(number_or_null(s.r_err(i, j)));
        }
        labels.push_back(std::move(lr));
        t_err.push_back(std::move(tr));
        r_err.push_back(std::move(rr));
    }
    return {{"scene_id", s.scene_id},
            {"waypoint_id", s.waypoint_id},
            {"waypoint", to_json(s.waypoint)},
            {"grid", to_json(s.grid)},
            {"inputs", {{"poses", std::move(poses)}, {"landmarks", std::move(lms)}}},
            {"labels", std::move(labels)},
            {"per_cell_errors", {{"t_err", std::move(t_err)}, {"r_err", std::move(r_err)}}}};
}

TrainingSample sample_from_json(const json& j) {
    TrainingSample s;
    s.scene_id = j.at("scene_id").get<std::uint64_t>();
    s.waypoint_id = j.value("waypoint_id", std::uint64_t{0});
    s.waypoint = waypoint_from_json(j.at("waypoint"));
    s.grid = grid_from_json(j.at("grid"));
    for (const auto& p : j.at("inputs").at("poses")) s.poses.push_back(pose_from_json(p));
    for (const auto& l : j.at("inputs").at("landmarks")) s.landmarks.push_back(landmark_from_json(l));
    const int h = s.grid.n_pitch, w = s.grid.n_yaw;
    s.labels.resize(h, w);
    s.t_err.resize(h, w);
    s.r_err.resize(h, w);
    const auto& jl = j.at("labels");
    const auto& jt = j.at("per_cell_errors").at("t_err");
    const auto& jr = j.at("per_cell_errors").at("r_err");
    if (jl.size() != static_cast<std::size_t>(h)) throw ConfigError("labels shape does not match grid");
    for (int i = 0; i < h; ++i) {
        if (jl.at(i).size() != static_cast<std::size_t>(w)) throw ConfigError("labels shape does not match grid");
        for (int k = 0; k < w; ++k) {
            s.labels(i, k) = jl.at(i).at(k).get<int>();
            s.t_err(i, k) = number_or_inf(jt.at(i).at(k));
            s.r_err(i, k) = number_or_inf(jr.at(i).at(k));
        }
    }
    return s;
}

void write_dataset(const std::string& path, const std::vector<TrainingSample>& samples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    for (const auto& s : samples) out << to_json(s).dump() << '\n';
    if (!out) throw IoError("write failed for " + path);
}

std::vector<TrainingSample> read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot open " + path);
    std::vector<TrainingSample> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            out.push_back(sample_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ParseError(path, n, e.what());
        }
    }
    return out;
}

}  // namespace viewloc

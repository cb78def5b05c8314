#include "viewloc/planner.hpp"

#include "viewloc/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace viewloc {

const char* to_string(ScorerKind k) {
    switch (k) {
        case ScorerKind::Model: return "model";
        case ScorerKind::Fif: return "fif";
        case ScorerKind::OracleLabels: return "oracle";
        case ScorerKind::ForwardFacing: return "forward";
    }
    return "model";
}

ScorerKind scorer_kind_from_string(const std::string& s) {
    if (s == "model") return ScorerKind::Model;
    if (s == "fif") return ScorerKind::Fif;
    if (s == "oracle") return ScorerKind::OracleLabels;
    if (s == "forward") return ScorerKind::ForwardFacing;
    throw ConfigError("unknown scorer '" + s + "' (expected model, fif, oracle, forward)");
}

void PlanConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
    if (!(spacing > 0.0)) throw ConfigError("spacing must be > 0");
    if (!(sigma_pitch > 0.0) || !(sigma_yaw > 0.0)) throw ConfigError("sigmas must be > 0");
    grid.validate();
}

json to_json(const PlanConfig& c) {
    return {{"lambda", c.lambda},     {"sigma_pitch", c.sigma_pitch}, {"sigma_yaw", c.sigma_yaw},
            {"spacing", c.spacing},   {"scorer", to_string(c.scorer)}, {"grid", to_json(c.grid)},
            {"jobs", c.jobs}};
}

PlanConfig plan_config_from_json(const json& j) {
    PlanConfig c;
    c.lambda = j.value("lambda", c.lambda);
    c.sigma_pitch = j.value("sigma_pitch", c.sigma_pitch);
    c.sigma_yaw = j.value("sigma_yaw", c.sigma_yaw);
    c.spacing = j.value("spacing", c.spacing);
    if (j.contains("scorer")) c.scorer = scorer_kind_from_string(j.at("scorer").get<std::string>());
    if (j.contains("grid")) c.grid = grid_from_json(j.at("grid"));
    c.jobs = j.value("jobs", c.jobs);
    c.validate();
    return c;
}

std::vector<Waypoint> interpolate_waypoints(const std::vector<Vec3>& keypoints, double spacing) {
    if (keypoints.empty()) throw ConfigError("need at least one keypoint");
    if (!(spacing > 0.0)) throw ConfigError("spacing must be > 0");
    std::vector<Waypoint> out;
    out.push_back({keypoints.front(), 0.0});
    for (std::size_t s = 0; s + 1 < keypoints.size(); ++s) {
        const Vec3 a = keypoints[s], b = keypoints[s + 1];
        const double len = (b - a).norm();
        if (len == 0.0) continue;
        const double heading = rad2deg(std::atan2(b.y() - a.y(), b.x() - a.x()));
        const int n = std::max(1, static_cast<int>(std::ceil(len / spacing - 1e-9)));
        out.back().default_yaw = heading;
        for (int k = 1; k <= n; ++k) {
            const Vec3 p = k == n ? b : Vec3(a + (b - a) * (static_cast<double>(k) / n));
            out.push_back({p, heading});
        }
    }
    return out;
}

Eigen::MatrixXd mixed_cost(const LocMap& C, GridCell prev, double lambda, double sigma_pitch, double sigma_yaw) {
    const auto& g = C.grid;
    Eigen::MatrixXd m(g.n_pitch, g.n_yaw);
    for (int i = 0; i < g.n_pitch; ++i)
        for (int j = 0; j < g.n_yaw; ++j) {
            const double dist = lambda == 0.0 ? 0.0 : grid_distance(g, {i, j}, prev, sigma_pitch, sigma_yaw);
            m(i, j) = (1.0 - C.values(i, j)) + lambda * dist;
        }
    return m;
}

GridCell argmin_cell(const Eigen::MatrixXd& m) {
    GridCell best{0, 0};
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            if (m(i, j) < m(best.i, best.j)) best = {i, j};
    return best;
}

namespace {

Waypoint world_frame(const Waypoint& wp) { return {wp.position, 0.0}; }

}  // namespace

Scorer model_scorer(const ModelParams& params, const ModelConfig& config, const SceneModel& scene) {
    return {[&params, &config, &scene](const Waypoint& wp, std::size_t) {
                return predict_locmap(params, config, scene, world_frame(wp));
            },
            false};
}

Scorer fif_scorer(const SceneModel& scene, const ViewGrid& grid, FifMetric metric) {
    return {[&scene, grid, metric](const Waypoint& wp, std::size_t) {
                return fif_locmap(scene, world_frame(wp), grid, metric, scene.intrinsics);
            },
            true};
}

Scorer oracle_scorer(const SceneModel& scene, const LabelOptions& opts, std::uint64_t scene_id) {
    return {[&scene, opts, scene_id](const Waypoint& wp, std::size_t index) {
                const auto l = label_waypoint(scene, world_frame(wp), opts, {scene_id, index});
                return LocMap(opts.grid, l.labels.cast<double>());
            },
            false};
}

Trajectory select_viewpoints(std::vector<Waypoint> waypoints, const std::vector<LocMap>& scores,
                             const PlanConfig& config, bool keep_cost_maps) {
    config.validate();
    if (scores.size() != waypoints.size()) throw ConfigError("one score map per waypoint required");
    Trajectory t;
    GridCell prev{0, 0};
    for (std::size_t k = 0; k < waypoints.size(); ++k) {
        if (!(scores[k].grid == config.grid)) throw WaypointError(k, "score map grid does not match plan grid");
        const double lambda = k == 0 ? 0.0 : config.lambda;
        Eigen::MatrixXd m = mixed_cost(scores[k], prev, lambda, config.sigma_pitch, config.sigma_yaw);
        prev = argmin_cell(m);
        t.selected.push_back(prev);
        t.costs.push_back(m(prev.i, prev.j));
        if (keep_cost_maps) t.cost_maps.push_back(std::move(m));
    }
    t.waypoints = std::move(waypoints);
    return t;
}

Trajectory plan_viewpoints(const std::vector<Vec3>& keypoints, const PlanConfig& config, const Scorer& scorer,
                           bool keep_cost_maps) {
    config.validate();
    auto wps = interpolate_waypoints(keypoints, config.spacing);
    if (config.scorer == ScorerKind::ForwardFacing) {
        Trajectory t;
        for (const auto& wp : wps) {
            t.selected.push_back(forward_facing(wp.default_yaw, config.grid));
            t.costs.push_back(0.0);
        }
        t.waypoints = std::move(wps);
        return t;
    }
    if (!scorer.score) throw ConfigError("scorer is required");
    std::vector<LocMap> scores(wps.size());
    parallel_for(wps.size(), config.jobs, [&](std::size_t k) {
        try {
            LocMap m = scorer.score(wps[k], k);
            scores[k] = scorer.normalize ? normalize_minmax(m) : std::move(m);
        } catch (const WaypointError&) {
            throw;
        } catch (const std::exception& e) {
            throw WaypointError(k, e.what());
        }
    });
    return select_viewpoints(std::move(wps), scores, config, keep_cost_maps);
}

std::string trajectory_to_csv(const Trajectory& t, const ViewGrid& grid) {
    std::string out = "step,x,y,z,pitch_deg,yaw_deg,cost\n";
    char buf[256];
    for (std::size_t k = 0; k < t.waypoints.size(); ++k) {
        const auto& p = t.waypoints[k].position;
        const auto a = cell_to_angles(grid, t.selected[k]);
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", k, p.x(), p.y(), p.z(), a.pitch,
                      a.yaw, t.costs[k]);
        out += buf;
    }
    return out;
}

void write_trajectory_csv(const Trajectory& t, const ViewGrid& grid, const std::string& path) {
    write_text_file(path, trajectory_to_csv(t, grid));
}

}  // namespace viewloc

#pragma once

#include "viewloc/baselines.hpp"
#include "viewloc/errors.hpp"
#include "viewloc/geom.hpp"
#include "viewloc/locmap.hpp"
#include "viewloc/model.hpp"
#include "viewloc/oracle.hpp"
#include "viewloc/scene.hpp"

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace viewloc {

enum class ScorerKind { Model, Fif, OracleLabels, ForwardFacing };

const char* to_string(ScorerKind k);
/// Accepts model, fif, oracle, forward.
ScorerKind scorer_kind_from_string(const std::string& s);

struct PlanConfig {
    double lambda = 0.1;
    double sigma_pitch = 20.0;  // degrees
    double sigma_yaw = 20.0;    // degrees
    double spacing = 0.2;       // meters
    ScorerKind scorer = ScorerKind::Model;
    ViewGrid grid;
    int jobs = 1;

    void validate() const;
};

json to_json(const PlanConfig& c);
PlanConfig plan_config_from_json(const json& j);

/// Selected cells are in the world yaw frame.
struct Trajectory {
    std::vector<Waypoint> waypoints;
    std::vector<GridCell> selected;
    std::vector<double> costs;                 // mixed cost of each selected cell
    std::vector<Eigen::MatrixXd> cost_maps;    // filled when requested
};

/// Error raised when scoring fails at one waypoint.
class WaypointError : public Error {
public:
    WaypointError(std::size_t index, const std::string& what)
        : Error("waypoint " + std::to_string(index) + ": " + what), index_(index) {}
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

/// Piecewise-linear densification. Each segment of length L is split into
/// ceil(L / spacing) equal steps; shared joints appear once. default_yaw is the
/// segment heading (the last segment's for the final point, 0 for a single point).
std::vector<Waypoint> interpolate_waypoints(const std::vector<Vec3>& keypoints, double spacing);

/// M = (1 - C) + lambda * grid_distance(cell, prev).
Eigen::MatrixXd mixed_cost(const LocMap& C, GridCell prev, double lambda, double sigma_pitch, double sigma_yaw);

/// Row-major first minimum.
GridCell argmin_cell(const Eigen::MatrixXd& m);

/// World-frame score map per waypoint.
struct Scorer {
    std::function<LocMap(const Waypoint& wp, std::size_t index)> score;
    bool normalize = false;  // min-max normalize each map before use
};

Scorer model_scorer(const ModelParams& params, const ModelConfig& config, const SceneModel& scene);
Scorer fif_scorer(const SceneModel& scene, const ViewGrid& grid, FifMetric metric);
/// Oracle labels (0/1) at the label threshold; trial keys use (scene_id, waypoint index).
Scorer oracle_scorer(const SceneModel& scene, const LabelOptions& opts, std::uint64_t scene_id);

/// Greedy selection over precomputed score maps (first step uses lambda 0).
Trajectory select_viewpoints(std::vector<Waypoint> waypoints, const std::vector<LocMap>& scores,
                             const PlanConfig& config, bool keep_cost_maps = false);

/// Scores every waypoint (in parallel with config.jobs) and selects greedily.
/// ForwardFacing ignores the scorer and lambda.
Trajectory plan_viewpoints(const std::vector<Vec3>& keypoints, const PlanConfig& config, const Scorer& scorer,
                           bool keep_cost_maps = false);

/// Columns step, x, y, z, pitch_deg, yaw_deg, cost.
std::string trajectory_to_csv(const Trajectory& t, const ViewGrid& grid);
void write_trajectory_csv(const Trajectory& t, const ViewGrid& grid, const std::string& path);

}  // namespace viewloc

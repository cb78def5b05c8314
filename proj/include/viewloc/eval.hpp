#pragma once

#include "viewloc/geom.hpp"
#include "viewloc/json_io.hpp"
#include "viewloc/locmap.hpp"
#include "viewloc/oracle.hpp"
#include "viewloc/planner.hpp"
#include "viewloc/scene.hpp"

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace viewloc {

/// Percent of entries within each threshold (both t and r), rounded to 2 decimals.
/// Throws ConfigError on an empty list.
std::vector<double> success_rates(const std::vector<PoseError>& errors, const std::vector<Threshold>& thresholds);

struct CellErrors {
    Eigen::MatrixXd t_err;
    Eigen::MatrixXd r_err;
};

/// A waypoint counts when any of its cells meets the threshold.
std::vector<double> upper_bound(const std::vector<CellErrors>& waypoints, const std::vector<Threshold>& thresholds);

/// Mean errors over entries within `threshold`; throws ConfigError if none are.
PoseError avg_errors_successful(const std::vector<PoseError>& errors, const Threshold& threshold);

/// Errors of one selected cell per waypoint.
std::vector<PoseError> selected_errors(const std::vector<CellErrors>& waypoints, const std::vector<GridCell>& cells);

struct EvalReport {
    std::string policy;
    std::vector<Threshold> thresholds;
    std::vector<double> rates;  // percent
    std::size_t n_total = 0;
    std::vector<std::size_t> n_success;
    /// Means over successes at the loosest threshold; absent when there are none.
    bool has_avg = false;
    PoseError avg;
    std::vector<PoseError> per_waypoint;
};

EvalReport make_report(std::string policy, const std::vector<PoseError>& errors,
                       const std::vector<Threshold>& thresholds);
json to_json(const EvalReport& r);
/// One row per report, one column per threshold.
std::string reports_to_text(const std::vector<EvalReport>& reports);
std::string reports_to_csv(const std::vector<EvalReport>& reports);

/// Runs the localization oracle at each selected viewpoint. Trial keys use
/// (scene_id, step), matching oracle-label scoring of the same waypoints.
std::vector<PoseError> evaluate_trajectory(const SceneModel& scene, const Trajectory& t, const LabelOptions& opts,
                                           std::uint64_t scene_id, int jobs = 1);

struct HeatmapOptions {
    double height = 0.5;   // meters
    double spacing = 0.5;  // meters
    int top_k = 5;
    int jobs = 1;
};

/// Rows follow y, columns follow x. Absent samples (inside occluders) are NaN.
struct Heatmap {
    double x0 = 0.0;
    double y0 = 0.0;
    double spacing = 0.0;
    double height = 0.0;
    Eigen::MatrixXd values;
};

using WaypointScorer = std::function<LocMap(const Waypoint& wp, std::size_t index)>;

/// Mean of the top_k cell values of each sample's score map over the scene footprint.
Heatmap global_heatmap(const WaypointScorer& scorer, const SceneModel& scene, const HeatmapOptions& opts);
/// CSV (NaN for absent), PGM of the min-max normalized present values (absent = 0),
/// and a sidecar mask PGM (255 present, 0 absent).
void write_heatmap(const Heatmap& h, const std::string& csv_path, const std::string& pgm_path,
                   const std::string& mask_path);

struct SparsifyRow {
    double fraction = 0.0;
    std::size_t n_poses = 0;
    std::size_t n_landmarks = 0;
    std::vector<double> policy_rates;
    std::vector<double> upper_bound_rates;
};

/// Picks one cell per waypoint given the (sparsified) scene.
using SelectionPolicy = std::function<GridCell(const SceneModel& scene, const Waypoint& wp, std::size_t index)>;

struct SparsifyOptions {
    LabelOptions label;
    std::uint64_t seed = 0;
    std::uint64_t scene_id = 0;
    int jobs = 1;
};

/// Rows in ascending fraction; labels are rebuilt with the oracle at each level.
std::vector<SparsifyRow> sparsification_sweep(const SceneModel& scene, const std::vector<Waypoint>& waypoints,
                                              std::vector<double> fractions, const SelectionPolicy& policy,
                                              const SparsifyOptions& opts);
std::string sparsify_rows_to_csv(const std::vector<SparsifyRow>& rows, const std::vector<Threshold>& thresholds);

}  // namespace viewloc

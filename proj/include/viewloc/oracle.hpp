#pragma once

#include "viewloc/geom.hpp"
#include "viewloc/json_io.hpp"
#include "viewloc/scene.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace viewloc {

struct NoiseSpec {
    double pixel_sigma = 1.0;
    double outlier_rate = 0.1;
    double drop_rate = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Correspondence {
    std::size_t landmark = 0;  // index into SceneModel::points
    Vec2 pixel = Vec2::Zero();
};

struct Observation {
    std::vector<Correspondence> correspondences;
};

struct SolveOptions {
    int max_iters = 50;
    double huber_delta = 2.0;        // pixels
    double convergence_eps = 1e-8;   // on the update norm
    std::size_t min_points = 6;
};

struct LocalizationResult {
    bool success = false;
    bool converged = false;
    Pose est_pose;
    double t_err = std::numeric_limits<double>::infinity();
    double r_err = std::numeric_limits<double>::infinity();
    std::size_t n_inliers = 0;
    int iterations = 0;
    /// Robust cost after each accepted iteration (index 0 = initial cost).
    std::vector<double> cost_history;
};

/// Translation / rotation threshold pair; success needs both.
struct Threshold {
    double t_m = 0.0;
    double r_deg = 0.0;
};

inline const std::vector<Threshold>& benchmark_thresholds() {
    static const std::vector<Threshold> kThresholds{{0.1, 1.0}, {0.25, 2.0}, {0.5, 5.0}, {5.0, 10.0}};
    return kThresholds;
}
inline constexpr int kDefaultLabelThreshold = 2;  // 0.5 m / 5 deg

inline bool within(double t_err, double r_err, const Threshold& th) {
    return t_err <= th.t_m && r_err <= th.r_deg;
}

/// Visible landmarks of `true_pose`, each dropped with drop_rate, perturbed by
/// Gaussian pixel noise, and replaced by a uniform in-image pixel with
/// outlier_rate. Noisy pixels that leave the image are discarded.
Observation simulate_observation(const SceneModel& scene, const Pose& true_pose,
                                 const CameraIntrinsics& intrinsics, const NoiseSpec& noise);

/// Huber-robust Gauss-Newton over 6-dof camera pose with right increments
/// (camera-frame translation, rotation vector) and step halving. Never throws
/// on numerical trouble; returns a failed result instead. Errors are filled
/// in against `truth` when given and the solve succeeded.
LocalizationResult solve_pose(const Observation& obs, const SceneModel& scene,
                              const CameraIntrinsics& intrinsics, const Pose& init,
                              const SolveOptions& opts, const Pose* truth = nullptr);

struct LabelOptions {
    ViewGrid grid;
    NoiseSpec noise;
    SolveOptions solve;
    std::vector<Threshold> thresholds = benchmark_thresholds();
    int label_threshold_index = kDefaultLabelThreshold;
    double init_translation = 0.3;  // meters
    double init_rotation = 10.0;    // degrees

    const Threshold& label_threshold() const;
};

LabelOptions label_options_from_json(const json& j);
json to_json(const LabelOptions& o);

/// Identifies one localization trial for seed derivation.
struct TrialKey {
    std::uint64_t scene_id = 0;
    std::uint64_t waypoint_id = 0;
};

/// Simulates, initializes, and solves one viewing direction.
LocalizationResult localize_cell(const SceneModel& scene, const Waypoint& wp, GridCell cell,
                                 const LabelOptions& opts, TrialKey key);

struct WaypointLabels {
    Eigen::MatrixXi labels;  // n_pitch x n_yaw, 0/1
    Eigen::MatrixXd t_err;   // +inf on failure
    Eigen::MatrixXd r_err;
};

/// Binary labels at the selected threshold plus per-cell errors.
WaypointLabels label_waypoint(const SceneModel& scene, const Waypoint& wp, const LabelOptions& opts,
                              TrialKey key);

/// Multi-class level boundaries: quartiles of the normalized error
/// max(t/t_th, r/r_th) over all finite cells.
std::array<double, 3> error_quartiles(const std::vector<const Eigen::MatrixXd*>& t_err,
                                      const std::vector<const Eigen::MatrixXd*>& r_err,
                                      const Threshold& th);
/// Level in {0..3}: 3 = best quartile, 0 = worst quartile or failed solve.
int quality_level(double t_err, double r_err, const std::array<double, 3>& bounds, const Threshold& th);

struct TrainingSample {
    std::uint64_t scene_id = 0;
    std::uint64_t waypoint_id = 0;
    Waypoint waypoint;
    ViewGrid grid;
    std::vector<Pose> poses;          // egocentric
    std::vector<Landmark> landmarks;  // filtered, egocentric, cropped
    Eigen::MatrixXi labels;
    Eigen::MatrixXd t_err;
    Eigen::MatrixXd r_err;
};

struct DatasetOptions {
    int n_waypoints_per_scene = 10;
    double height_min = 0.4;
    double height_max = 2.0;
    double clearance = 0.3;
    int n_classes = 2;
    LabelOptions label;
    PreprocessOptions preprocess;
    std::uint64_t seed = 0;
    int jobs = 1;
};

DatasetOptions dataset_options_from_json(const json& j);
json to_json(const DatasetOptions& o);

/// Uniform free-space waypoints (default_yaw 0) per scene; deterministic per seed.
std::vector<Waypoint> sample_waypoints(const SceneModel& scene, int n, double height_min,
                                       double height_max, double clearance, std::uint64_t seed);

/// Labeled, preprocessed samples. `scene_ids` defaults to the list index.
/// Output is independent of `jobs`. Throws ConfigError for a scene without mapping poses.
std::vector<TrainingSample> generate_dataset(const std::vector<SceneModel>& scenes,
                                             const DatasetOptions& opts,
                                             std::vector<std::uint64_t> scene_ids = {});

json to_json(const TrainingSample& s);
TrainingSample sample_from_json(const json& j);
/// JSON lines, one sample per line.
void write_dataset(const std::string& path, const std::vector<TrainingSample>& samples);
std::vector<TrainingSample> read_dataset(const std::string& path);

}  // namespace viewloc

#include "viewloc/baselines.hpp"

#include "viewloc/errors.hpp"
#include "viewloc/simworld.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>

namespace viewloc {

const char* to_string(FifMetric m) {
    switch (m) {
        case FifMetric::MinEigenvalue: return "mineig";
        case FifMetric::Determinant: return "det";
        case FifMetric::Trace: return "trace";
    }
    return "mineig";
}

FifMetric fif_metric_from_string(const std::string& s) {
    if (s == "mineig") return FifMetric::MinEigenvalue;
    if (s == "det") return FifMetric::Determinant;
    if (s == "trace") return FifMetric::Trace;
    throw ConfigError("unknown FIF metric '" + s + "' (expected mineig, det, trace)");
}

Mat3 fif_info_from_points(const Vec3& center, const std::vector<Vec3>& points) {
    Mat3 info = Mat3::Zero();
    for (const auto& p : points) {
        const Vec3 r = p - center;
        const double d2 = r.squaredNorm();
        if (d2 == 0.0) continue;
        const Vec3 b = r / std::sqrt(d2);
        info += (Mat3::Identity() - b * b.transpose()) / d2;
    }
    return info;
}

Mat3 fif_info_matrix(const SceneModel& scene, const Waypoint& wp, GridCell cell, const ViewGrid& grid,
                     const CameraIntrinsics& intrinsics) {
    const Pose pose = pose_for_cell(grid, wp, cell);
    std::vector<Vec3> pts;
    for (const auto& v : visible_landmarks(scene, pose, intrinsics))
        pts.push_back(scene.points[v.index].landmark.position);
    return fif_info_from_points(pose.position, pts);
}

double fif_score(const Mat3& info, FifMetric metric) {
    switch (metric) {
        case FifMetric::Trace: return info.trace();
        case FifMetric::Determinant: return info.determinant();
        case FifMetric::MinEigenvalue: {
            // clamp round-off so an empty or rank-deficient sum reports exactly 0
            const double e = Eigen::SelfAdjointEigenSolver<Mat3>(info, Eigen::EigenvaluesOnly).eigenvalues()(0);
            return std::max(e, 0.0);
        }
    }
    return 0.0;
}

LocMap fif_locmap(const SceneModel& scene, const Waypoint& wp, const ViewGrid& grid, FifMetric metric,
                  const CameraIntrinsics& intrinsics) {
    Eigen::MatrixXd v(grid.n_pitch, grid.n_yaw);
    for (int i = 0; i < grid.n_pitch; ++i)
        for (int j = 0; j < grid.n_yaw; ++j)
            v(i, j) = fif_score(fif_info_matrix(scene, wp, {i, j}, grid, intrinsics), metric);
    return {grid, std::move(v)};
}

GridCell forward_facing(double heading_yaw_deg, const ViewGrid& grid) {
    const double pitch = std::clamp(0.0, grid.pitch_min, grid.pitch_min + (grid.n_pitch - 1) * grid.pitch_step);
    return angles_to_cell(grid, pitch, heading_yaw_deg);
}

}  // namespace viewloc

#include "viewloc/geom.hpp"

#include "viewloc/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace viewloc {

Quat::Quat(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (!std::isfinite(n) || n == 0.0) throw NumericError("quaternion has zero or non-finite norm");
    // already-unit input is kept bit-exact so normalization is idempotent
    const double s = (w < 0.0 ? -1.0 : 1.0) / (std::abs(n - 1.0) <= 2e-16 ? 1.0 : n);
    w_ = w * s;
    x_ = x * s;
    y_ = y * s;
    z_ = z * s;
}

Quat Quat::from_eigen(const Eigen::Quaterniond& q) { return Quat(q.w(), q.x(), q.y(), q.z()); }

Quat Quat::from_rotation(const Mat3& r) { return from_eigen(Eigen::Quaterniond(r)); }

Quat Quat::from_axis_angle(const Vec3& axis, double angle_rad) {
    const double n = axis.norm();
    if (n == 0.0) return identity();
    const Vec3 u = axis / n;
    const double s = std::sin(0.5 * angle_rad);
    return Quat(std::cos(0.5 * angle_rad), u.x() * s, u.y() * s, u.z() * s);
}

Quat Quat::exp(const Vec3& rotvec) {
    const double theta = rotvec.norm();
    if (theta < 1e-12) {
        // second-order expansion; exact to double precision at this size
        return Quat(1.0, 0.5 * rotvec.x(), 0.5 * rotvec.y(), 0.5 * rotvec.z());
    }
    return from_axis_angle(rotvec, theta);
}

Quat Quat::operator*(const Quat& o) const {
    return from_eigen(to_eigen() * o.to_eigen());
}

void ViewGrid::validate() const {
    if (n_pitch <= 0 || n_yaw <= 0) throw ConfigError("view grid needs positive cell counts");
    if (!(pitch_step > 0.0) || !(yaw_step > 0.0)) throw ConfigError("view grid steps must be > 0");
    if (pitch_min < -90.0 || pitch_max_exclusive() > 90.0 + 1e-9)
        throw ConfigError("view grid pitch band must stay within [-90, 90]");
    if (std::abs(n_yaw * yaw_step - 360.0) > 1e-9)
        throw ConfigError("view grid must cover the full yaw circle (n_yaw * yaw_step = 360)");
}

double wrap_degrees(double deg) {
    double r = std::fmod(deg + 180.0, 360.0);
    if (r < 0.0) r += 360.0;
    r -= 180.0;
    // fmod can return exactly 360 - tiny after the shift
    if (r >= 180.0) r -= 360.0;
    return r;
}

namespace {

void check_cell(const ViewGrid& grid, GridCell c) {
    if (c.i < 0 || c.i >= grid.n_pitch || c.j < 0 || c.j >= grid.n_yaw)
        throw std::out_of_range("grid cell (" + std::to_string(c.i) + "," + std::to_string(c.j) +
                                ") outside " + std::to_string(grid.n_pitch) + "x" +
                                std::to_string(grid.n_yaw) + " grid");
}

int round_half_down(double f) { return static_cast<int>(std::ceil(f - 0.5)); }

}  // namespace

CellAngles cell_to_angles(const ViewGrid& grid, GridCell cell) {
    check_cell(grid, cell);
    return {grid.pitch_min + cell.i * grid.pitch_step,
            wrap_degrees(grid.yaw_min + cell.j * grid.yaw_step)};
}

GridCell angles_to_cell(const ViewGrid& grid, double pitch, double yaw) {
    if (!(pitch >= grid.pitch_min && pitch < grid.pitch_max_exclusive()))
        throw RangeError("pitch " + std::to_string(pitch) + " outside grid band [" +
                         std::to_string(grid.pitch_min) + ", " +
                         std::to_string(grid.pitch_max_exclusive()) + ")");
    int i = round_half_down((pitch - grid.pitch_min) / grid.pitch_step);
    if (i >= grid.n_pitch) i = grid.n_pitch - 1;
    if (i < 0) i = 0;

    double offset = std::fmod(yaw - grid.yaw_min, 360.0);
    if (offset < 0.0) offset += 360.0;
    int j = round_half_down(offset / grid.yaw_step) % grid.n_yaw;
    if (j < 0) j += grid.n_yaw;
    return {i, j};
}

Quat orientation_from_yaw_pitch(double yaw_deg, double pitch_deg) {
    const double yaw = deg2rad(yaw_deg);
    const double pitch = deg2rad(pitch_deg);
    const Vec3 forward(std::cos(pitch) * std::cos(yaw), std::cos(pitch) * std::sin(yaw),
                       std::sin(pitch));
    const Vec3 right(std::sin(yaw), -std::cos(yaw), 0.0);
    const Vec3 down = forward.cross(right);
    Mat3 r;
    r.col(0) = right;
    r.col(1) = down;
    r.col(2) = forward;
    return Quat::from_rotation(r);
}

Pose pose_for_cell(const ViewGrid& grid, const Waypoint& wp, GridCell cell) {
    const auto a = cell_to_angles(grid, cell);
    return {wp.position, orientation_from_yaw_pitch(wrap_degrees(wp.default_yaw + a.yaw), a.pitch)};
}

EgocentricInputs egocentric_transform(const std::vector<Pose>& poses,
                                      const std::vector<Landmark>& landmarks,
                                      const Waypoint& wp) {
    EgocentricInputs out{poses, landmarks};
    for (auto& p : out.poses) p.position -= wp.position;
    for (auto& l : out.landmarks) l.position -= wp.position;
    return out;
}

std::vector<Landmark> filter_uncertain(const std::vector<Landmark>& landmarks,
                                       std::uint32_t min_track, double max_reproj) {
    std::vector<Landmark> out;
    out.reserve(landmarks.size());
    for (const auto& l : landmarks)
        if (l.track_len >= min_track && l.reproj_err <= max_reproj) out.push_back(l);
    return out;
}

std::vector<Landmark> crop_box(const std::vector<Landmark>& landmarks, double half_extent) {
    std::vector<Landmark> out;
    out.reserve(landmarks.size());
    for (const auto& l : landmarks)
        if (l.position.cwiseAbs().maxCoeff() <= half_extent) out.push_back(l);
    return out;
}

EgocentricInputs preprocess_inputs(const std::vector<Pose>& poses,
                                   const std::vector<Landmark>& landmarks, const Waypoint& wp,
                                   const PreprocessOptions& opts) {
    auto ego = egocentric_transform(poses, filter_uncertain(landmarks, opts.min_track, opts.max_reproj), wp);
    ego.landmarks = crop_box(ego.landmarks, opts.half_extent);
    return ego;
}

double grid_distance(const ViewGrid& grid, GridCell a, GridCell b, double sigma_pitch,
                     double sigma_yaw) {
    const auto aa = cell_to_angles(grid, a);
    const auto ab = cell_to_angles(grid, b);
    const double dp = (aa.pitch - ab.pitch) / sigma_pitch;
    double dy = std::fmod(std::abs(aa.yaw - ab.yaw), 360.0);
    dy = std::min(dy, 360.0 - dy) / sigma_yaw;
    return std::sqrt(dp * dp + dy * dy);
}

PoseError pose_error(const Pose& est, const Pose& gt) {
    const Eigen::Quaterniond rel = est.orientation.to_eigen().conjugate() * gt.orientation.to_eigen();
    const double angle = 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
    return {(est.position - gt.position).norm(), rad2deg(angle)};
}

}  // namespace viewloc

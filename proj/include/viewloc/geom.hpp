#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <vector>

namespace viewloc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Unit quaternion with canonical sign (w >= 0). q and -q are the same rotation.
class Quat {
public:
    Quat() = default;
    /// Normalizes and canonicalizes. Throws NumericError on a zero or non-finite input.
    Quat(double w, double x, double y, double z);

    static Quat identity() { return {}; }
    static Quat from_rotation(const Mat3& r);
    static Quat from_eigen(const Eigen::Quaterniond& q);
    /// Rotation by `angle_rad` about `axis` (need not be unit).
    static Quat from_axis_angle(const Vec3& axis, double angle_rad);
    /// Exponential map of a rotation vector.
    static Quat exp(const Vec3& rotvec);

    double w() const { return w_; }
    double x() const { return x_; }
    double y() const { return y_; }
    double z() const { return z_; }

    Eigen::Quaterniond to_eigen() const { return {w_, x_, y_, z_}; }
    Mat3 to_rotation() const { return to_eigen().toRotationMatrix(); }

    Quat operator*(const Quat& other) const;
    Quat inverse() const { return Quat(w_, -x_, -y_, -z_); }

    friend bool operator==(const Quat&, const Quat&) = default;

private:
    double w_ = 1.0;
    double x_ = 0.0;
    double y_ = 0.0;
    double z_ = 0.0;
};

/// Camera-to-world rigid transform. Camera frame: x right, y down, z forward.
struct Pose {
    Vec3 position = Vec3::Zero();
    Quat orientation;

    /// World point expressed in the camera frame.
    Vec3 to_camera(const Vec3& world) const {
        return orientation.to_rotation().transpose() * (world - position);
    }
};

struct Landmark {
    Vec3 position = Vec3::Zero();
    Vec3 color = Vec3::Zero();  // normalized RGB
    std::uint32_t track_len = 0;
    double reproj_err = 0.0;  // pixels
};

struct Waypoint {
    Vec3 position = Vec3::Zero();
    double default_yaw = 0.0;  // degrees, [-180, 180)
};

/// Sampled pitch x yaw viewing directions. Cells are sample directions, not bin centers.
struct ViewGrid {
    int n_pitch = 6;
    int n_yaw = 18;
    double pitch_min = -60.0;
    double pitch_step = 20.0;
    double yaw_min = -180.0;
    double yaw_step = 20.0;

    /// Throws ConfigError when the grid does not cover the full yaw circle,
    /// leaves the [-90, 90] pitch band, or has non-positive steps.
    void validate() const;
    int size() const { return n_pitch * n_yaw; }
    double pitch_max_exclusive() const { return pitch_min + n_pitch * pitch_step; }

    friend bool operator==(const ViewGrid&, const ViewGrid&) = default;
};

struct GridCell {
    int i = 0;  // pitch row
    int j = 0;  // yaw column
    friend bool operator==(const GridCell&, const GridCell&) = default;
};

struct CellAngles {
    double pitch = 0.0;
    double yaw = 0.0;
};

/// Wraps degrees into [-180, 180).
double wrap_degrees(double deg);
inline double deg2rad(double d) { return d * (EIGEN_PI / 180.0); }
inline double rad2deg(double r) { return r * (180.0 / EIGEN_PI); }

/// Throws std::out_of_range for cells outside the grid.
CellAngles cell_to_angles(const ViewGrid& grid, GridCell cell);
/// Nearest cell; yaw wraps, ties go to the lower index. Throws RangeError when
/// pitch falls outside [pitch_min, pitch_min + n_pitch * pitch_step).
GridCell angles_to_cell(const ViewGrid& grid, double pitch, double yaw);

/// Camera-to-world orientation looking along (yaw, pitch) in a z-up world with
/// zero roll. yaw 0 looks along +x, positive pitch looks up.
Quat orientation_from_yaw_pitch(double yaw_deg, double pitch_deg);
/// Pose for viewing direction `cell` at waypoint `wp` (cell yaw is relative to wp.default_yaw).
Pose pose_for_cell(const ViewGrid& grid, const Waypoint& wp, GridCell cell);

struct EgocentricInputs {
    std::vector<Pose> poses;
    std::vector<Landmark> landmarks;
};

/// Shifts origins to the waypoint position. Rotations and metadata are untouched.
EgocentricInputs egocentric_transform(const std::vector<Pose>& poses,
                                      const std::vector<Landmark>& landmarks,
                                      const Waypoint& wp);

std::vector<Landmark> filter_uncertain(const std::vector<Landmark>& landmarks,
                                       std::uint32_t min_track, double max_reproj);

/// Keeps landmarks inside the closed cube [-half_extent, half_extent]^3.
std::vector<Landmark> crop_box(const std::vector<Landmark>& landmarks, double half_extent);

double grid_distance(const ViewGrid& grid, GridCell a, GridCell b, double sigma_pitch,
                     double sigma_yaw);

struct PoseError {
    double t_err = 0.0;  // meters
    double r_err = 0.0;  // degrees, [0, 180]
};

PoseError pose_error(const Pose& est, const Pose& gt);

/// Skew-symmetric cross-product matrix.
inline Mat3 skew(const Vec3& v) {
    Mat3 m;
    m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return m;
}

/// Input conditioning shared by dataset generation and inference:
/// uncertainty filter, then egocentric shift, then landmark crop.
struct PreprocessOptions {
    std::uint32_t min_track = 2;
    double max_reproj = 2.0;  // pixels
    double half_extent = 5.0;  // meters
};

EgocentricInputs preprocess_inputs(const std::vector<Pose>& poses,
                                   const std::vector<Landmark>& landmarks, const Waypoint& wp,
                                   const PreprocessOptions& opts);

}  // namespace viewloc

#pragma once

#include "viewloc/json_io.hpp"
#include "viewloc/scene.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace viewloc {

/// Room surfaces in the order used by SceneSpec::wall_richness.
enum class Surface { XMin = 0, XMax, YMin, YMax, Floor, Ceiling };

/// Synthetic room description. The room spans [0, room_extent].
struct SceneSpec {
    Vec3 room_extent{8.0, 6.0, 3.0};
    int n_landmarks = 2000;
    int n_occluders = 3;
    /// Landmark density weight per room surface (x-min, x-max, y-min, y-max, floor, ceiling).
    std::array<double, 6> wall_richness{1.0, 1.0, 1.0, 1.0, 0.5, 0.2};
    /// Density weight of occluder faces.
    double occluder_richness = 1.0;
    /// Scale of the half-normal reprojection error assigned to landmarks (pixels).
    double reproj_err_scale = 0.8;
    CameraIntrinsics intrinsics;
    std::uint64_t seed = 0;

    void validate() const;
};

SceneSpec scene_spec_from_json(const json& j);
json to_json(const SceneSpec& s);

/// Landmark/pose coordinates produced by the generator lie on this dyadic
/// grid, so world translations by multiples of it are exact in floating point.
inline constexpr double kCoordQuantum = 0x1.0p-20;
double quantize_coord(double v);

/// Places landmarks on room surfaces and occluder faces with probability
/// proportional to richness x area. Mapping poses are left empty (see build_mapping_sweep).
SceneModel generate_scene(const SceneSpec& spec);

struct Visible {
    std::size_t index = 0;  // into SceneModel::points
    Vec2 pixel = Vec2::Zero();
    double depth = 0.0;
};

/// Landmarks in front of the camera, projecting inside the image, with an
/// unobstructed open segment from the camera center.
std::vector<Visible> visible_landmarks(const SceneModel& scene, const Pose& pose,
                                       const CameraIntrinsics& intrinsics);

struct SweepOptions {
    double height_min = 1.5;
    double height_max = 2.0;
    double grid_spacing = 2.0;
    double azimuth_step = 36.0;
    int elevation_min = -15;  // integer elevations drawn from [min, max)
    int elevation_max = 15;
    /// Clearance from walls and occluders for anchor points.
    double clearance = 0.3;
    int max_retries = 200;
    std::uint64_t seed = 0;
};

SweepOptions sweep_options_from_json(const json& j);
json to_json(const SweepOptions& o);

/// Simulated mapping run: jittered anchor grid, full azimuth sweep per anchor
/// with random integer elevation. Poses are appended to `scene`, tracks are
/// written directly from visibility, and never-observed landmarks are dropped.
/// Returns the new poses. Throws ConfigError if an anchor cannot be placed in free space.
std::vector<Pose> build_mapping_sweep(SceneModel& scene, const SweepOptions& opts);

}  // namespace viewloc

#pragma once

#include "viewloc/geom.hpp"

#include <cstdint>
#include <vector>

namespace viewloc {

using PoseId = std::uint32_t;

/// Pinhole camera shared by every pose of a scene.
struct CameraIntrinsics {
    int width = 640;
    int height = 480;
    double fx = 320.0;
    double fy = 320.0;
    double cx = 320.0;
    double cy = 240.0;

    void validate() const;
    Vec2 project(const Vec3& cam) const {
        return {fx * cam.x() / cam.z() + cx, fy * cam.y() / cam.z() + cy};
    }
    bool in_bounds(const Vec2& px) const {
        return px.x() >= 0.0 && px.x() < width && px.y() >= 0.0 && px.y() < height;
    }

    friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

/// Axis-aligned box, used both for occluders and for scene bounds.
struct Box3 {
    Vec3 min_corner = Vec3::Zero();
    Vec3 max_corner = Vec3::Zero();

    void validate() const;
    bool contains(const Vec3& p, double margin = 0.0) const {
        return (p.array() >= min_corner.array() - margin).all() &&
               (p.array() <= max_corner.array() + margin).all();
    }
    /// Slab test against the open segment (a, b).
    bool intersects_open_segment(const Vec3& a, const Vec3& b) const;
};

using OccluderBox = Box3;

struct MapPose {
    PoseId id = 0;
    Pose pose;
};

/// Landmark plus the ids of the mapping poses that observed it.
struct MapPoint {
    Landmark landmark;
    std::vector<PoseId> track;
};

/// SfM reconstruction: mapping poses (T), landmarks (P), and optional synthetic geometry.
struct SceneModel {
    CameraIntrinsics intrinsics;
    std::vector<MapPose> poses;
    std::vector<MapPoint> points;
    std::vector<OccluderBox> occluders;
    /// Room extent for synthetic scenes; the landmark bounding box for imported ones.
    Box3 bounds;

    /// Throws IntegrityError on dangling track ids, duplicate pose ids, or track_len mismatch.
    void validate() const;

    std::vector<Pose> pose_list() const;
    std::vector<Landmark> landmark_list() const;
    /// True when `p` lies inside the bounds and outside every (inflated) occluder.
    bool in_free_space(const Vec3& p, double occluder_margin = 0.0) const;
};

/// Recomputes bounds as the bounding box of landmark and pose positions.
Box3 bounding_box(const SceneModel& scene);

}  // namespace viewloc

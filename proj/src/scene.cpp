#include "viewloc/scene.hpp"

#include "viewloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

namespace viewloc {

void CameraIntrinsics::validate() const {
    if (width <= 0 || height <= 0 || !(fx > 0) || !(fy > 0) || !(cx > 0) || !(cy > 0))
        throw ConfigError("camera intrinsics must be positive");
    if (!(cx < width) || !(cy < height))
        throw ConfigError("principal point must lie inside the image");
}

void Box3::validate() const {
    if (!(min_corner.array() < max_corner.array()).all())
        throw ConfigError("box min_corner must be < max_corner componentwise");
}

bool Box3::intersects_open_segment(const Vec3& a, const Vec3& b) const {
    constexpr double kEps = 1e-9;
    const Vec3 d = b - a;
    double t_enter = -std::numeric_limits<double>::infinity();
    double t_exit = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
        if (std::abs(d[k]) < 1e-15) {
            if (a[k] < min_corner[k] || a[k] > max_corner[k]) return false;
            continue;
        }
        double t1 = (min_corner[k] - a[k]) / d[k];
        double t2 = (max_corner[k] - a[k]) / d[k];
        if (t1 > t2) std::swap(t1, t2);
        t_enter = std::max(t_enter, t1);
        t_exit = std::min(t_exit, t2);
        if (t_enter > t_exit) return false;
    }
    return std::max(t_enter, kEps) < std::min(t_exit, 1.0 - kEps);
}

void SceneModel::validate() const {
    std::unordered_set<PoseId> ids;
    for (const auto& p : poses)
        if (!ids.insert(p.id).second)
            throw IntegrityError("duplicate pose id " + std::to_string(p.id));
    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto& pt = points[k];
        if (pt.landmark.track_len != pt.track.size())
            throw IntegrityError("landmark " + std::to_string(k) + " track_len " +
                                 std::to_string(pt.landmark.track_len) + " != track size " +
                                 std::to_string(pt.track.size()));
        for (auto id : pt.track)
            if (!ids.count(id))
                throw IntegrityError("landmark " + std::to_string(k) +
                                     " references missing pose id " + std::to_string(id));
    }
}

std::vector<Pose> SceneModel::pose_list() const {
    std::vector<Pose> out;
    out.reserve(poses.size());
    for (const auto& p : poses) out.push_back(p.pose);
    return out;
}

std::vector<Landmark> SceneModel::landmark_list() const {
    std::vector<Landmark> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(p.landmark);
    return out;
}

bool SceneModel::in_free_space(const Vec3& p, double occluder_margin) const {
    if (!bounds.contains(p)) return false;
    return std::none_of(occluders.begin(), occluders.end(),
                        [&](const Box3& b) { return b.contains(p, occluder_margin); });
}

Box3 bounding_box(const SceneModel& scene) {
    Box3 b;
    bool first = true;
    auto grow = [&](const Vec3& v) {
        if (first) {
            b.min_corner = b.max_corner = v;
            first = false;
        } else {
            b.min_corner = b.min_corner.cwiseMin(v);
            b.max_corner = b.max_corner.cwiseMax(v);
        }
    };
    for (const auto& p : scene.points) grow(p.landmark.position);
    for (const auto& p : scene.poses) grow(p.pose.position);
    return b;
}

}  // namespace viewloc

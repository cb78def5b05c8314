#include "viewloc/simworld.hpp"

#include "viewloc/errors.hpp"
#include "viewloc/rng.hpp"

#include <algorithm>
#include <cmath>

namespace viewloc {

void SceneSpec::validate() const {
    if (!(room_extent.array() > 0.0).all()) throw ConfigError("room_extent must be positive");
    if (n_landmarks < 0 || n_occluders < 0) throw ConfigError("counts must be non-negative");
    for (double w : wall_richness)
        if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("wall richness weights must lie in [0, 1]");
    if (!(occluder_richness >= 0.0 && occluder_richness <= 1.0))
        throw ConfigError("occluder richness must lie in [0, 1]");
    if (!(reproj_err_scale >= 0.0)) throw ConfigError("reproj_err_scale must be >= 0");
    intrinsics.validate();
}

SceneSpec scene_spec_from_json(const json& j) {
    SceneSpec s;
    if (j.contains("room_extent")) s.room_extent = vec3_from_json(j.at("room_extent"));
    s.n_landmarks = j.value("n_landmarks", s.n_landmarks);
    s.n_occluders = j.value("n_occluders", s.n_occluders);
    if (j.contains("wall_richness")) {
        const auto& w = j.at("wall_richness");
        if (!w.is_array() || w.size() != 6)
            throw ConfigError("wall_richness needs 6 weights (x-min, x-max, y-min, y-max, floor, ceiling)");
        for (int k = 0; k < 6; ++k) s.wall_richness[k] = w[k].get<double>();
    }
    s.occluder_richness = j.value("occluder_richness", s.occluder_richness);
    s.reproj_err_scale = j.value("reproj_err_scale", s.reproj_err_scale);
    if (j.contains("intrinsics")) s.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    s.seed = j.value("seed", s.seed);
    s.validate();
    return s;
}

json to_json(const SceneSpec& s) {
    return {{"room_extent", vec3_to_json(s.room_extent)},
            {"n_landmarks", s.n_landmarks},
            {"n_occluders", s.n_occluders},
            {"wall_richness", s.wall_richness},
            {"occluder_richness", s.occluder_richness},
            {"reproj_err_scale", s.reproj_err_scale},
            {"intrinsics", to_json(s.intrinsics)},
            {"seed", s.seed}};
}

double quantize_coord(double v) { return std::round(v / kCoordQuantum) * kCoordQuantum; }

namespace {

Vec3 quantize(const Vec3& v) { return {quantize_coord(v.x()), quantize_coord(v.y()), quantize_coord(v.z())}; }

/// Rectangle on an axis-aligned plane: coordinate `axis` fixed at `value`.
struct Face {
    int axis;
    double value;
    Vec3 lo;  // extent of the free axes
    Vec3 hi;
    double weight;
    int occluder;  // -1 for room surfaces

    double area() const {
        double a = 1.0;
        for (int k = 0; k < 3; ++k)
            if (k != axis) a *= hi[k] - lo[k];
        return a;
    }
    Vec3 sample(Rng& rng) const {
        Vec3 p;
        for (int k = 0; k < 3; ++k) p[k] = k == axis ? value : rng.uniform(lo[k], hi[k]);
        return p;
    }
};

}  // namespace

SceneModel generate_scene(const SceneSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    SceneModel scene;
    scene.intrinsics = spec.intrinsics;
    const Vec3 ext = quantize(spec.room_extent);
    scene.bounds = {Vec3::Zero(), ext};

    constexpr double kWallMargin = 0.5;
    for (int k = 0; k < spec.n_occluders; ++k) {
        Box3 box;
        for (int attempt = 0; attempt < 100; ++attempt) {
            const double sx = std::min(rng.uniform(0.6, 1.6), ext.x() - 2 * kWallMargin - 0.1);
            const double sy = std::min(rng.uniform(0.6, 1.6), ext.y() - 2 * kWallMargin - 0.1);
            const double sz = std::min(rng.uniform(0.6, 2.2), ext.z() - 0.2);
            if (sx <= 0.05 || sy <= 0.05 || sz <= 0.05) break;
            const double x0 = rng.uniform(kWallMargin, ext.x() - kWallMargin - sx);
            const double y0 = rng.uniform(kWallMargin, ext.y() - kWallMargin - sy);
            box = {quantize({x0, y0, 0.0}), quantize({x0 + sx, y0 + sy, sz})};
            const bool overlaps = std::any_of(scene.occluders.begin(), scene.occluders.end(),
                                              [&](const Box3& o) {
                                                  return (box.min_corner.array() < o.max_corner.array() + 0.3).all() &&
                                                         (o.min_corner.array() < box.max_corner.array() + 0.3).all();
                                              });
            if (!overlaps) {
                scene.occluders.push_back(box);
                break;
            }
        }
    }

    std::vector<Face> faces;
    constexpr double kInset = 1e-3;
    const Vec3 lo = Vec3::Constant(kInset);
    const Vec3 hi = ext - Vec3::Constant(kInset);
    const double* w = spec.wall_richness.data();
    faces.push_back({0, 0.0, lo, hi, w[0], -1});
    faces.push_back({0, ext.x(), lo, hi, w[1], -1});
    faces.push_back({1, 0.0, lo, hi, w[2], -1});
    faces.push_back({1, ext.y(), lo, hi, w[3], -1});
    faces.push_back({2, 0.0, lo, hi, w[4], -1});
    faces.push_back({2, ext.z(), lo, hi, w[5], -1});
    for (int k = 0; k < static_cast<int>(scene.occluders.size()); ++k) {
        const auto& b = scene.occluders[k];
        const double ow = spec.occluder_richness;
        faces.push_back({0, b.min_corner.x(), b.min_corner, b.max_corner, ow, k});
        faces.push_back({0, b.max_corner.x(), b.min_corner, b.max_corner, ow, k});
        faces.push_back({1, b.min_corner.y(), b.min_corner, b.max_corner, ow, k});
        faces.push_back({1, b.max_corner.y(), b.min_corner, b.max_corner, ow, k});
        faces.push_back({2, b.max_corner.z(), b.min_corner, b.max_corner, ow, k});
    }
    std::vector<double> cumulative;
    double total = 0.0;
    for (const auto& f : faces) {
        total += f.weight * f.area();
        cumulative.push_back(total);
    }

    if (total > 0.0) {
        for (int n = 0; n < spec.n_landmarks; ++n) {
            for (int attempt = 0; attempt < 50; ++attempt) {
                const double u = rng.uniform() * total;
                const auto fi = static_cast<std::size_t>(
                    std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
                const Face& f = faces[std::min(fi, faces.size() - 1)];
                const Vec3 p = quantize(f.sample(rng));
                bool buried = false;
                for (int k = 0; k < static_cast<int>(scene.occluders.size()); ++k) {
                    if (k == f.occluder) continue;
                    if (scene.occluders[k].contains(p, 1e-6)) buried = true;
                }
                if (buried) continue;
                MapPoint pt;
                pt.landmark.position = p;
                for (int c = 0; c < 3; ++c)
                    pt.landmark.color[c] = static_cast<double>(rng.uniform_int(0, 256)) / 255.0;
                pt.landmark.reproj_err = std::abs(rng.normal()) * spec.reproj_err_scale;
                scene.points.push_back(std::move(pt));
                break;
            }
        }
    }
    return scene;
}

std::vector<Visible> visible_landmarks(const SceneModel& scene, const Pose& pose,
                                       const CameraIntrinsics& intrinsics) {
    const Mat3 rt = pose.orientation.to_rotation().transpose();
    std::vector<Visible> out;
    for (std::size_t k = 0; k < scene.points.size(); ++k) {
        const Vec3& x = scene.points[k].landmark.position;
        const Vec3 xc = rt * (x - pose.position);
        if (!(xc.z() > 1e-9)) continue;
        const Vec2 px = intrinsics.project(xc);
        if (!intrinsics.in_bounds(px)) continue;
        const bool blocked = std::any_of(scene.occluders.begin(), scene.occluders.end(),
                                         [&](const Box3& b) { return b.intersects_open_segment(pose.position, x); });
        if (blocked) continue;
        out.push_back({k, px, xc.z()});
    }
    return out;
}

SweepOptions sweep_options_from_json(const json& j) {
    SweepOptions o;
    o.height_min = j.value("height_min", o.height_min);
    o.height_max = j.value("height_max", o.height_max);
    o.grid_spacing = j.value("grid_spacing", o.grid_spacing);
    o.azimuth_step = j.value("azimuth_step", o.azimuth_step);
    o.elevation_min = j.value("elevation_min", o.elevation_min);
    o.elevation_max = j.value("elevation_max", o.elevation_max);
    o.clearance = j.value("clearance", o.clearance);
    o.max_retries = j.value("max_retries", o.max_retries);
    o.seed = j.value("seed", o.seed);
    return o;
}

json to_json(const SweepOptions& o) {
    return {{"height_min", o.height_min},       {"height_max", o.height_max},
            {"grid_spacing", o.grid_spacing},   {"azimuth_step", o.azimuth_step},
            {"elevation_min", o.elevation_min}, {"elevation_max", o.elevation_max},
            {"clearance", o.clearance},         {"max_retries", o.max_retries},
            {"seed", o.seed}};
}

std::vector<Pose> build_mapping_sweep(SceneModel& scene, const SweepOptions& opts) {
    if (!(opts.grid_spacing > 0.0) || !(opts.azimuth_step > 0.0) || opts.elevation_max <= opts.elevation_min ||
        opts.height_max < opts.height_min)
        throw ConfigError("invalid sweep options");
    scene.intrinsics.validate();
    Rng rng(opts.seed);
    const Vec3 lo = scene.bounds.min_corner;
    const Vec3 ext = scene.bounds.max_corner - lo;
    const double c = opts.clearance;
    const int nx = std::max(1, static_cast<int>(std::floor((ext.x() - 2 * c) / opts.grid_spacing)));
    const int ny = std::max(1, static_cast<int>(std::floor((ext.y() - 2 * c) / opts.grid_spacing)));
    const double cell_x = (ext.x() - 2 * c) / nx;
    const double cell_y = (ext.y() - 2 * c) / ny;
    const int n_az = static_cast<int>(std::ceil(360.0 / opts.azimuth_step - 1e-9));

    PoseId next_id = 1;
    for (const auto& p : scene.poses) next_id = std::max(next_id, p.id + 1);

    std::vector<Pose> added;
    for (int gy = 0; gy < ny; ++gy) {
        for (int gx = 0; gx < nx; ++gx) {
            Vec3 anchor;
            bool placed = false;
            for (int attempt = 0; attempt < opts.max_retries && !placed; ++attempt) {
                double x, y;
                if (attempt < opts.max_retries / 2) {
                    x = lo.x() + c + (gx + 0.5 + rng.uniform(-0.25, 0.25)) * cell_x;
                    y = lo.y() + c + (gy + 0.5 + rng.uniform(-0.25, 0.25)) * cell_y;
                } else {
                    x = lo.x() + c + rng.uniform() * (ext.x() - 2 * c);
                    y = lo.y() + c + rng.uniform() * (ext.y() - 2 * c);
                }
                const double z = lo.z() + rng.uniform(opts.height_min, opts.height_max);
                anchor = quantize({x, y, z});
                placed = scene.in_free_space(anchor, c);
            }
            if (!placed)
                throw ConfigError("could not place mapping anchor in free space after " +
                                  std::to_string(opts.max_retries) + " retries");
            for (int a = 0; a < n_az; ++a) {
                const double yaw = wrap_degrees(a * opts.azimuth_step);
                const auto elev = static_cast<double>(rng.uniform_int(opts.elevation_min, opts.elevation_max));
                const Pose pose{anchor, orientation_from_yaw_pitch(yaw, elev)};
                const PoseId id = next_id++;
                for (const auto& v : visible_landmarks(scene, pose, scene.intrinsics))
                    scene.points[v.index].track.push_back(id);
                scene.poses.push_back({id, pose});
                added.push_back(pose);
            }
        }
    }

    std::erase_if(scene.points, [](const MapPoint& p) { return p.track.empty(); });
    for (auto& p : scene.points) p.landmark.track_len = static_cast<std::uint32_t>(p.track.size());
    return added;
}

}  // namespace viewloc

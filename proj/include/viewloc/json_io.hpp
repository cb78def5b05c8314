#pragma once

#include "viewloc/geom.hpp"
#include "viewloc/scene.hpp"

#include "json.hpp"

#include <limits>
#include <string>

namespace viewloc {

using json = nlohmann::json;

// JSON has no infinity; failure sentinels are written as null.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline double number_or_inf(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

json vec3_to_json(const Vec3& v);
Vec3 vec3_from_json(const json& j);

json to_json(const Quat& q);
json to_json(const Pose& p);
json to_json(const Landmark& l);
json to_json(const Waypoint& w);
json to_json(const ViewGrid& g);
json to_json(const CameraIntrinsics& c);
json to_json(const Box3& b);

Quat quat_from_json(const json& j);
Pose pose_from_json(const json& j);
Landmark landmark_from_json(const json& j);
Waypoint waypoint_from_json(const json& j);
/// Missing keys keep their defaults.
ViewGrid grid_from_json(const json& j);
CameraIntrinsics intrinsics_from_json(const json& j);
Box3 box_from_json(const json& j);

/// Reads and parses a JSON file; syntax errors become ParseError with a line number.
json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace viewloc

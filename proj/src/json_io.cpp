#include "viewloc/json_io.hpp"

#include "viewloc/errors.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace viewloc {

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-vector, got " + j.dump());
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const Quat& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

Quat quat_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4)
        throw ConfigError("expected a quaternion [w,x,y,z], got " + j.dump());
    return Quat(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

json to_json(const Pose& p) {
    return {{"position", vec3_to_json(p.position)}, {"orientation", to_json(p.orientation)}};
}

Pose pose_from_json(const json& j) {
    return {vec3_from_json(j.at("position")), quat_from_json(j.at("orientation"))};
}

json to_json(const Landmark& l) {
    return {{"position", vec3_to_json(l.position)},
            {"color", vec3_to_json(l.color)},
            {"track_len", l.track_len},
            {"reproj_err", l.reproj_err}};
}

Landmark landmark_from_json(const json& j) {
    Landmark l;
    l.position = vec3_from_json(j.at("position"));
    l.color = vec3_from_json(j.at("color"));
    l.track_len = j.value("track_len", 0u);
    l.reproj_err = j.value("reproj_err", 0.0);
    return l;
}

json to_json(const Waypoint& w) {
    return {{"position", vec3_to_json(w.position)}, {"default_yaw", w.default_yaw}};
}

Waypoint waypoint_from_json(const json& j) {
    return {vec3_from_json(j.at("position")), j.value("default_yaw", 0.0)};
}

json to_json(const ViewGrid& g) {
    return {{"n_pitch", g.n_pitch},       {"n_yaw", g.n_yaw},     {"pitch_min", g.pitch_min},
            {"pitch_step", g.pitch_step}, {"yaw_min", g.yaw_min}, {"yaw_step", g.yaw_step}};
}

ViewGrid grid_from_json(const json& j) {
    ViewGrid g;
    g.n_pitch = j.value("n_pitch", g.n_pitch);
    g.n_yaw = j.value("n_yaw", g.n_yaw);
    g.pitch_min = j.value("pitch_min", g.pitch_min);
    g.pitch_step = j.value("pitch_step", g.pitch_step);
    g.yaw_min = j.value("yaw_min", g.yaw_min);
    g.yaw_step = j.value("yaw_step", g.yaw_step);
    g.validate();
    return g;
}

json to_json(const CameraIntrinsics& c) {
    return {{"width", c.width}, {"height", c.height}, {"fx", c.fx},
            {"fy", c.fy},       {"cx", c.cx},         {"cy", c.cy}};
}

CameraIntrinsics intrinsics_from_json(const json& j) {
    CameraIntrinsics c;
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    c.fx = j.value("fx", c.fx);
    c.fy = j.value("fy", c.fy);
    c.cx = j.value("cx", c.cx);
    c.cy = j.value("cy", c.cy);
    c.validate();
    return c;
}

json to_json(const Box3& b) {
    return {{"min", vec3_to_json(b.min_corner)}, {"max", vec3_to_json(b.max_corner)}};
}

Box3 box_from_json(const json& j) {
    return {vec3_from_json(j.at("min")), vec3_from_json(j.at("max"))};
}

json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
        throw ParseError(path, static_cast<std::size_t>(line), e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace viewloc

#include "viewloc/sfm_io.hpp"

#include "viewloc/errors.hpp"
#include "viewloc/json_io.hpp"
#include "viewloc/rng.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace viewloc {

namespace fs = std::filesystem;

namespace {

struct Line {
    std::size_t number;
    std::string text;
};

std::vector<Line> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("missing COLMAP file " + path.string());
    std::vector<Line> lines;
    std::string s;
    std::size_t n = 0;
    while (std::getline(in, s)) {
        ++n;
        if (!s.empty() && s.back() == '\r') s.pop_back();
        lines.push_back({n, s});
    }
    return lines;
}

bool is_skippable(const std::string& s) {
    const auto pos = s.find_first_not_of(" \t");
    return pos == std::string::npos || s[pos] == '#';
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

class FieldReader {
public:
    FieldReader(const std::string& file, const Line& line) : file_(file), line_(line) {}

    double real(const std::string& tok) const {
        double v = 0.0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v))
            fail("invalid number '" + tok + "'");
        return v;
    }

    long long integer(const std::string& tok) const {
        long long v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size()) fail("invalid integer '" + tok + "'");
        return v;
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(file_, line_.number, what); }

private:
    std::string file_;
    const Line& line_;
};

std::string fmt12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

SceneModel parse_colmap_text(const std::string& dir_path) {
    const fs::path dir(dir_path);
    const auto cam_lines = read_lines(dir / "cameras.txt");
    const auto img_lines = read_lines(dir / "images.txt");
    const auto pt_lines = read_lines(dir / "points3D.txt");

    SceneModel model;
    std::unordered_set<long long> camera_ids;
    bool have_camera = false;
    for (const auto& line : cam_lines) {
        if (is_skippable(line.text)) continue;
        FieldReader r("cameras.txt", line);
        const auto f = split(line.text);
        if (f.size() < 4) r.fail("camera line needs CAMERA_ID MODEL WIDTH HEIGHT PARAMS[]");
        CameraIntrinsics c;
        const long long id = r.integer(f[0]);
        c.width = static_cast<int>(r.integer(f[2]));
        c.height = static_cast<int>(r.integer(f[3]));
        if (f[1] == "PINHOLE") {
            if (f.size() != 8) r.fail("PINHOLE camera expects 8 fields, got " + std::to_string(f.size()));
            c.fx = r.real(f[4]);
            c.fy = r.real(f[5]);
            c.cx = r.real(f[6]);
            c.cy = r.real(f[7]);
        } else if (f[1] == "SIMPLE_PINHOLE") {
            if (f.size() != 7)
                r.fail("SIMPLE_PINHOLE camera expects 7 fields, got " + std::to_string(f.size()));
            c.fx = c.fy = r.real(f[4]);
            c.cx = r.real(f[5]);
            c.cy = r.real(f[6]);
        } else {
            r.fail("unsupported camera model " + f[1]);
        }
        try {
            c.validate();
        } catch (const ConfigError& e) {
            r.fail(e.what());
        }
        if (have_camera && !(c == model.intrinsics))
            r.fail("multiple distinct cameras are not supported");
        model.intrinsics = c;
        have_camera = true;
        camera_ids.insert(id);
    }

    std::unordered_set<PoseId> pose_ids;
    for (std::size_t k = 0; k < img_lines.size(); ++k) {
        const auto& line = img_lines[k];
        if (is_skippable(line.text)) continue;
        FieldReader r("images.txt", line);
        const auto f = split(line.text);
        if (f.size() != 10)
            r.fail("image line expects 10 fields (IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME), got " +
                   std::to_string(f.size()));
        const long long id = r.integer(f[0]);
        if (id < 0 || id > 0xffffffffLL) r.fail("image id out of range");
        Quat q_cw;
        try {
            q_cw = Quat(r.real(f[1]), r.real(f[2]), r.real(f[3]), r.real(f[4]));
        } catch (const NumericError& e) {
            r.fail(e.what());
        }
        const Vec3 t(r.real(f[5]), r.real(f[6]), r.real(f[7]));
        if (!camera_ids.count(r.integer(f[8]))) r.fail("image references unknown camera " + f[8]);
        if (!pose_ids.insert(static_cast<PoseId>(id)).second) r.fail("duplicate image id " + f[0]);

        const Mat3 r_cw = q_cw.to_rotation();
        MapPose mp;
        mp.id = static_cast<PoseId>(id);
        mp.pose.orientation = Quat::from_rotation(r_cw.transpose());
        mp.pose.position = -(r_cw.transpose() * t);
        model.poses.push_back(mp);

        // the POINTS2D line always follows, and may be empty
        if (k + 1 < img_lines.size()) {
            ++k;
            const auto& pl = img_lines[k];
            FieldReader pr("images.txt", pl);
            const auto pf = split(pl.text);
            if (pf.size() % 3 != 0)
                pr.fail("POINTS2D line expects triples (X Y POINT3D_ID), got " +
                        std::to_string(pf.size()) + " fields");
            for (std::size_t m = 0; m < pf.size(); m += 3) {
                pr.real(pf[m]);
                pr.real(pf[m + 1]);
                pr.integer(pf[m + 2]);
            }
        }
    }

    for (const auto& line : pt_lines) {
        if (is_skippable(line.text)) continue;
        FieldReader r("points3D.txt", line);
        const auto f = split(line.text);
        if (f.size() < 8 || (f.size() - 8) % 2 != 0)
            r.fail("point line expects POINT3D_ID X Y Z R G B ERROR followed by (IMAGE_ID, POINT2D_IDX) "
                   "pairs, got " + std::to_string(f.size()) + " fields");
        r.integer(f[0]);
        MapPoint pt;
        pt.landmark.position = {r.real(f[1]), r.real(f[2]), r.real(f[3])};
        for (int c = 0; c < 3; ++c) {
            const long long v = r.integer(f[4 + c]);
            if (v < 0 || v > 255) r.fail("color component out of 0..255: " + f[4 + c]);
            pt.landmark.color[c] = static_cast<double>(v) / 255.0;
        }
        pt.landmark.reproj_err = r.real(f[7]);
        if (pt.landmark.reproj_err < 0.0) r.fail("negative reprojection error");
        for (std::size_t m = 8; m < f.size(); m += 2) {
            const long long img = r.integer(f[m]);
            r.integer(f[m + 1]);
            if (img < 0 || !pose_ids.count(static_cast<PoseId>(img)))
                throw IntegrityError("points3D.txt:" + std::to_string(line.number) +
                                     ": track references missing image " + f[m]);
            pt.track.push_back(static_cast<PoseId>(img));
        }
        pt.landmark.track_len = static_cast<std::uint32_t>(pt.track.size());
        model.points.push_back(std::move(pt));
    }

    model.bounds = bounding_box(model);
    model.validate();
    return model;
}

void write_colmap_text(const SceneModel& model, const std::string& dir_path) {
    model.validate();
    const fs::path dir(dir_path);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir_path + ": " + ec.message());

    // per-image observation lists give each track entry its POINT2D_IDX
    std::unordered_map<PoseId, std::size_t> pose_index;
    for (std::size_t k = 0; k < model.poses.size(); ++k) pose_index[model.poses[k].id] = k;
    std::vector<std::vector<std::pair<Vec2, std::size_t>>> obs(model.poses.size());
    std::vector<std::vector<std::size_t>> point2d_idx(model.points.size());
    for (std::size_t p = 0; p < model.points.size(); ++p) {
        for (auto id : model.points[p].track) {
            const auto k = pose_index.at(id);
            const Vec3 xc = model.poses[k].pose.to_camera(model.points[p].landmark.position);
            const Vec2 px = std::abs(xc.z()) > 1e-12 ? model.intrinsics.project(xc) : Vec2::Zero();
            point2d_idx[p].push_back(obs[k].size());
            obs[k].push_back({px, p + 1});
        }
    }

    std::ostringstream cams;
    cams << "# Camera list with one line of data per camera:\n"
         << "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n"
         << "# Number of cameras: 1\n";
    const auto& c = model.intrinsics;
    cams << "1 PINHOLE " << c.width << ' ' << c.height << ' ' << fmt12(c.fx) << ' ' << fmt12(c.fy)
         << ' ' << fmt12(c.cx) << ' ' << fmt12(c.cy) << '\n';

    std::ostringstream imgs;
    imgs << "# Image list with two lines of data per image:\n"
         << "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n"
         << "#   POINTS2D[] as (X, Y, POINT3D_ID)\n"
         << "# Number of images: " << model.poses.size() << '\n';
    for (std::size_t k = 0; k < model.poses.size(); ++k) {
        const auto& mp = model.poses[k];
        const Mat3 r_cw = mp.pose.orientation.to_rotation().transpose();
        const Quat q = Quat::from_rotation(r_cw);
        const Vec3 t = -(r_cw * mp.pose.position);
        imgs << mp.id << ' ' << fmt12(q.w()) << ' ' << fmt12(q.x()) << ' ' << fmt12(q.y()) << ' '
             << fmt12(q.z()) << ' ' << fmt12(t.x()) << ' ' << fmt12(t.y()) << ' ' << fmt12(t.z())
             << " 1 pose_" << mp.id << ".png\n";
        bool first = true;
        for (const auto& [px, pid] : obs[k]) {
            if (!first) imgs << ' ';
            first = false;
            imgs << fmt12(px.x()) << ' ' << fmt12(px.y()) << ' ' << pid;
        }
        imgs << '\n';
    }

    std::ostringstream pts;
    pts << "# 3D point list with one line of data per point:\n"
        << "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n"
        << "# Number of points: " << model.points.size() << '\n';
    for (std::size_t p = 0; p < model.points.size(); ++p) {
        const auto& l = model.points[p].landmark;
        pts << p + 1 << ' ' << fmt12(l.position.x()) << ' ' << fmt12(l.position.y()) << ' '
            << fmt12(l.position.z());
        for (int ch = 0; ch < 3; ++ch)
            pts << ' ' << static_cast<int>(std::lround(std::clamp(l.color[ch], 0.0, 1.0) * 255.0));
        pts << ' ' << fmt12(l.reproj_err);
        for (std::size_t m = 0; m < model.points[p].track.size(); ++m)
            pts << ' ' << model.points[p].track[m] << ' ' << point2d_idx[p][m];
        pts << '\n';
    }

    write_text_file((dir / "cameras.txt").string(), cams.str());
    write_text_file((dir / "images.txt").string(), imgs.str());
    write_text_file((dir / "points3D.txt").string(), pts.str());
}

namespace {

json scene_to_json(const SceneModel& m) {
    json poses = json::array();
    for (const auto& p : m.poses) {
        json jp = to_json(p.pose);
        jp["id"] = p.id;
        poses.push_back(std::move(jp));
    }
    json landmarks = json::array();
    for (const auto& p : m.points) {
        landmarks.push_back({{"position", vec3_to_json(p.landmark.position)},
                             {"color", vec3_to_json(p.landmark.color)},
                             {"reproj_err", p.landmark.reproj_err},
                             {"track", p.track}});
    }
    json occ = json::array();
    for (const auto& b : m.occluders) occ.push_back(to_json(b));
    return {{"schema_version", kSceneSchemaVersion},
            {"intrinsics", to_json(m.intrinsics)},
            {"bounds", to_json(m.bounds)},
            {"poses", std::move(poses)},
            {"landmarks", std::move(landmarks)},
            {"occluders", std::move(occ)}};
}

SceneModel scene_from_json(const json& j) {
    const int version = j.at("schema_version").get<int>();
    if (version != kSceneSchemaVersion) throw VersionError(version, kSceneSchemaVersion);
    SceneModel m;
    m.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    if (j.contains("bounds")) m.bounds = box_from_json(j.at("bounds"));
    for (const auto& jp : j.at("poses"))
        m.poses.push_back({jp.at("id").get<PoseId>(), pose_from_json(jp)});
    for (const auto& jl : j.at("landmarks")) {
        MapPoint pt;
        pt.landmark.position = vec3_from_json(jl.at("position"));
        pt.landmark.color = vec3_from_json(jl.at("color"));
        pt.landmark.reproj_err = jl.at("reproj_err").get<double>();
        pt.track = jl.at("track").get<std::vector<PoseId>>();
        pt.landmark.track_len = static_cast<std::uint32_t>(pt.track.size());
        m.points.push_back(std::move(pt));
    }
    if (j.contains("occluders"))
        for (const auto& jb : j.at("occluders")) m.occluders.push_back(box_from_json(jb));
    if (!j.contains("bounds")) m.bounds = bounding_box(m);
    m.validate();
    return m;
}

}  // namespace

SceneModel load_scene(const std::string& path) {
    const json j = read_json_file(path);
    try {
        return scene_from_json(j);
    } catch (const json::exception& e) {
        throw ParseError(path, 0, std::string("invalid scene file: ") + e.what());
    }
}

void save_scene(const SceneModel& model, const std::string& path) {
    model.validate();
    write_text_file(path, scene_to_json(model).dump(1) + "\n");
}

SceneModel sparsify(const SceneModel& model, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("sparsify fraction must be in [0, 1]");
    const std::size_t m = model.poses.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (std::size_t k = m; k > 1; --k) std::swap(order[k - 1], order[rng.next_below(k)]);
    const auto n_remove =
        std::min(m, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(m) + 1e-9)));

    std::unordered_set<PoseId> removed;
    for (std::size_t k = 0; k < n_remove; ++k) removed.insert(model.poses[order[k]].id);

    SceneModel out;
    out.intrinsics = model.intrinsics;
    out.occluders = model.occluders;
    out.bounds = model.bounds;
    for (const auto& p : model.poses)
        if (!removed.count(p.id)) out.poses.push_back(p);
    for (const auto& p : model.points) {
        MapPoint q = p;
        q.track.clear();
        for (auto id : p.track)
            if (!removed.count(id)) q.track.push_back(id);
        if (q.track.empty() && !p.track.empty()) continue;
        q.landmark.track_len = static_cast<std::uint32_t>(q.track.size());
        out.points.push_back(std::move(q));
    }
    return out;
}

}  // namespace viewloc

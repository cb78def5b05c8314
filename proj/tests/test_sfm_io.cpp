#include "doctest.h"

#include "support.hpp"
#include "viewloc/errors.hpp"
#include "viewloc/sfm_io.hpp"

#include <fstream>
#include <set>

using namespace viewloc;

namespace {

const std::string kFixtures = std::string(VIEWLOC_FIXTURES) + "/colmap/";

void check_scene_close(const SceneModel& a, const SceneModel& b, double tol) {
    REQUIRE(a.poses.size() == b.poses.size());
    REQUIRE(a.points.size() == b.points.size());
    CHECK(a.intrinsics == b.intrinsics);
    for (std::size_t k = 0; k < a.poses.size(); ++k) {
        CHECK(a.poses[k].id == b.poses[k].id);
        CHECK((a.poses[k].pose.position - b.poses[k].pose.position).norm() <= tol);
        CHECK(pose_error(a.poses[k].pose, b.poses[k].pose).r_err <= 1e-7);  // degrees
        const auto qa = a.poses[k].pose.orientation, qb = b.poses[k].pose.orientation;
        CHECK(std::abs(qa.w() - qb.w()) + std::abs(qa.x() - qb.x()) + std::abs(qa.y() - qb.y()) +
                  std::abs(qa.z() - qb.z()) <=
              4 * tol);
    }
    for (std::size_t k = 0; k < a.points.size(); ++k) {
        const auto &la = a.points[k].landmark, &lb = b.points[k].landmark;
        CHECK((la.position - lb.position).norm() <= tol);
        CHECK((la.color - lb.color).norm() <= tol);
        CHECK(std::abs(la.reproj_err - lb.reproj_err) <= tol);
        CHECK(la.track_len == lb.track_len);
        CHECK(a.points[k].track == b.points[k].track);
    }
}

std::size_t data_lines(const std::string& path) {
    std::ifstream in(path);
    std::string s;
    std::size_t n = 0;
    while (std::getline(in, s))
        if (!s.empty() && s[0] != '#') ++n;
    return n;
}

}  // namespace

TEST_CASE("parse hand-written COLMAP fixture") {
    const SceneModel m = parse_colmap_text(kFixtures + "valid");
    REQUIRE(m.poses.size() == 2);
    REQUIRE(m.points.size() == 2);
    CHECK(m.intrinsics.fx == 320.0);
    CHECK(m.intrinsics.cy == 240.0);
    const auto& l = m.points[0].landmark;
    CHECK(l.reproj_err == 1.5);
    CHECK(l.color == Vec3(1, 0, 0));
    CHECK(l.track_len == 2);
    CHECK(m.points[0].track == std::vector<PoseId>{1, 2});
    CHECK(m.points[1].landmark.color.y() == doctest::Approx(128.0 / 255.0));
    // image 2: R_cw is +90 deg about y, t = (1,2,3); camera center = -R_cw^T t
    const Mat3 r_cw = Quat(std::sqrt(0.5), 0, std::sqrt(0.5), 0).to_rotation();
    const Vec3 c = -(r_cw.transpose() * Vec3(1, 2, 3));
    CHECK((m.poses[1].pose.position - c).norm() < 1e-12);
    CHECK((m.poses[1].pose.orientation.to_rotation() - r_cw.transpose()).norm() < 1e-12);
    CHECK(m.poses[0].pose.position.norm() == 0.0);
}

TEST_CASE("comments-only points file gives zero landmarks") {
    const SceneModel m = parse_colmap_text(kFixtures + "comments_only");
    CHECK(m.points.empty());
    CHECK(m.poses.size() == 2);
}

TEST_CASE("malformed COLMAP lines name the file and line") {
    struct Case {
        const char* dir;
        const char* file;
        std::size_t line;
    };
    for (const Case c : {Case{"bad_camera_fields", "cameras.txt", 2}, Case{"bad_image_fields", "images.txt", 2},
                         Case{"bad_points2d", "images.txt", 3}, Case{"bad_point_number", "points3D.txt", 3},
                         Case{"bad_point_track", "points3D.txt", 2}, Case{"bad_color", "points3D.txt", 2}}) {
        CAPTURE(c.dir);
        try {
            parse_colmap_text(kFixtures + c.dir);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.file() == c.file);
            CHECK(e.line() == c.line);
            CHECK(std::string(e.what()).find(std::string(c.file) + ":" + std::to_string(c.line)) == 0);
        }
    }
    CHECK_THROWS_AS(parse_colmap_text(kFixtures + "dangling_track"), IntegrityError);
    CHECK_THROWS_AS(parse_colmap_text(kFixtures + "missing_points"), NotFoundError);
}

TEST_CASE("COLMAP text round trip on a generated scene") {
    const SceneModel scene = testing::default_mapped_scene(11, 1000);
    const auto dir = testing::temp_dir("colmap_rt");
    write_colmap_text(scene, dir.string());
    CHECK(data_lines((dir / "points3D.txt").string()) == scene.points.size());
    const SceneModel back = parse_colmap_text(dir.string());
    check_scene_close(scene, back, 1e-9);
}

TEST_CASE("COLMAP writer on an empty model and a one-pose model") {
    SceneModel empty;
    auto dir = testing::temp_dir("colmap_empty");
    write_colmap_text(empty, dir.string());
    for (const char* f : {"cameras.txt", "images.txt", "points3D.txt"})
        CHECK(data_lines((dir / f).string()) == (std::string(f) == "cameras.txt" ? 1u : 0u));
    SceneModel one;
    one.poses.push_back({4, {Vec3(0.1, 0.2, 0.3), Quat::from_axis_angle(Vec3(1, 1, 0), 0.5)}});
    MapPoint p;
    p.landmark.position = Vec3(1.5, -2.25, 3.125);
    p.landmark.color = Vec3(10, 20, 30) / 255.0;
    p.landmark.reproj_err = 0.75;
    p.landmark.track_len = 1;
    p.track = {4};
    one.points.push_back(p);
    dir = testing::temp_dir("colmap_one");
    write_colmap_text(one, dir.string());
    check_scene_close(one, parse_colmap_text(dir.string()), 1e-9);
}

TEST_CASE("scene JSON round trip is bit exact") {
    const SceneModel scene = testing::default_mapped_scene(12, 300);
    const auto dir = testing::temp_dir("scene_json");
    save_scene(scene, (dir / "s.json").string());
    const SceneModel back = load_scene((dir / "s.json").string());
    check_scene_close(scene, back, 0.0);
    REQUIRE(back.occluders.size() == scene.occluders.size());
    for (std::size_t k = 0; k < scene.occluders.size(); ++k) {
        CHECK(back.occluders[k].min_corner == scene.occluders[k].min_corner);
        CHECK(back.occluders[k].max_corner == scene.occluders[k].max_corner);
    }
    CHECK(back.bounds.max_corner == scene.bounds.max_corner);
    for (std::size_t k = 0; k < scene.poses.size(); ++k)
        CHECK(back.poses[k].pose.orientation == scene.poses[k].pose.orientation);
}

TEST_CASE("scene JSON errors") {
    const auto dir = testing::temp_dir("scene_json_err");
    const SceneModel scene = testing::default_mapped_scene(13, 100);
    const std::string path = (dir / "s.json").string();
    save_scene(scene, path);
    std::string text;
    {
        std::ifstream in(path);
        text.assign(std::istreambuf_iterator<char>(in), {});
    }
    {
        std::ofstream out((dir / "trunc.json").string());
        out << text.substr(0, text.size() / 2);
    }
    CHECK_THROWS_AS(load_scene((dir / "trunc.json").string()), ParseError);
    const auto pos = text.find("\"schema_version\": 1");
    REQUIRE(pos != std::string::npos);
    std::string v = text;
    v.replace(pos, 19, "\"schema_version\": 7");
    {
        std::ofstream out((dir / "v7.json").string());
        out << v;
    }
    try {
        load_scene((dir / "v7.json").string());
        FAIL("expected a version error");
    } catch (const VersionError& e) {
        CHECK(e.found() == 7);
        CHECK(e.expected() == 1);
        CHECK(std::string(e.what()).find("7") != std::string::npos);
    }
}

TEST_CASE("sparsify") {
    const SceneModel scene = testing::default_mapped_scene(14, 400);
    const SceneModel same = sparsify(scene, 0.0, 3);
    check_scene_close(scene, same, 0.0);
    const SceneModel none = sparsify(scene, 1.0, 3);
    CHECK(none.poses.empty());
    CHECK(none.points.empty());

    SceneModel ten;
    for (PoseId k = 0; k < 10; ++k) ten.poses.push_back({k, {Vec3(k, 0, 0), Quat::identity()}});
    CHECK(sparsify(ten, 0.5, 1).poses.size() == 5);
    CHECK(sparsify(ten, 0.3, 1).poses.size() == 7);  // floor(3) removed

    // monotone nesting under one seed, deterministic, and tracks stay consistent
    std::set<PoseId> prev;
    for (const auto& p : scene.poses) prev.insert(p.id);
    for (double f : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const SceneModel s = sparsify(scene, f, 21);
        const SceneModel again = sparsify(scene, f, 21);
        CHECK(s.poses.size() == again.poses.size());
        CHECK(s.poses.size() == scene.poses.size() - static_cast<std::size_t>(std::floor(f * scene.poses.size() + 1e-9)));
        std::set<PoseId> ids;
        for (const auto& p : s.poses) ids.insert(p.id);
        for (PoseId id : ids) CHECK(prev.count(id) == 1);
        prev = ids;
        s.validate();
        for (const auto& pt : s.points) CHECK(!pt.track.empty());
    }
}

#include "doctest.h"

#include "support.hpp"
#include "viewloc/errors.hpp"
#include "viewloc/oracle.hpp"
#include "viewloc/rng.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

using namespace viewloc;

namespace {

/// Camera at the origin looking along +x at a cloud of points spread in front of it.
SceneModel cloud_scene(int n, std::uint64_t seed) {
    SceneModel s;
    s.bounds = {Vec3(-20, -20, -20), Vec3(20, 20, 20)};
    Rng rng(seed);
    for (int k = 0; k < n; ++k) {
        MapPoint m;
        m.landmark.position = Vec3(rng.uniform(3, 8), rng.uniform(-3, 3), rng.uniform(-2, 2));
        s.points.push_back(m);
    }
    return s;
}

NoiseSpec zero_noise() {
    NoiseSpec n;
    n.pixel_sigma = 0;
    n.outlier_rate = 0;
    n.drop_rate = 0;
    return n;
}

Pose perturb(const Pose& p, Rng& rng, double t, double r_deg) {
    Vec3 d(rng.normal(), rng.normal(), rng.normal());
    Vec3 a(rng.normal(), rng.normal(), rng.normal());
    return {p.position + d.normalized() * t, p.orientation * Quat::from_axis_angle(a, deg2rad(r_deg))};
}

const Pose kTruth{Vec3::Zero(), orientation_from_yaw_pitch(0, 0)};

}  // namespace

TEST_CASE("simulate_observation noise settings") {
    const SceneModel s = cloud_scene(60, 1);
    const CameraIntrinsics k;
    NoiseSpec n = zero_noise();
    const auto exact = visible_landmarks(s, kTruth, k);
    const auto obs = simulate_observation(s, kTruth, k, n);
    REQUIRE(obs.correspondences.size() == exact.size());
    for (std::size_t i = 0; i < exact.size(); ++i) CHECK(obs.correspondences[i].pixel == exact[i].pixel);
    n.drop_rate = 1.0;
    CHECK(simulate_observation(s, kTruth, k, n).correspondences.empty());

    n = zero_noise();
    n.outlier_rate = 1.0;
    std::size_t close = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        n.seed = seed;
        for (const auto& c : simulate_observation(s, kTruth, k, n).correspondences) {
            ++total;
            for (const auto& v : exact)
                if (v.index == c.landmark && (v.pixel - c.pixel).norm() < 1e-6) ++close;
        }
    }
    CHECK(total > 1000);
    CHECK(close == 0);
    n = zero_noise();
    n.pixel_sigma = 1.0;
    n.seed = 4;
    for (const auto& c : simulate_observation(s, kTruth, k, n).correspondences) CHECK(k.in_bounds(c.pixel));
    n.drop_rate = 1.5;
    CHECK_THROWS_AS(simulate_observation(s, kTruth, k, n), ConfigError);
}

TEST_CASE("zero-noise solve recovers the pose") {
    Rng rng(2);
    const CameraIntrinsics k;
    for (int trial = 0; trial < 20; ++trial) {
        const SceneModel s = cloud_scene(30, 100 + trial);
        const auto obs = simulate_observation(s, kTruth, k, zero_noise());
        REQUIRE(obs.correspondences.size() >= 10);
        const Pose init = perturb(kTruth, rng, rng.uniform(0, 0.3), rng.uniform(0, 10));
        const auto r = solve_pose(obs, s, k, init, {}, &kTruth);
        CHECK(r.success);
        CHECK(r.t_err < 1e-6);
        CHECK(r.r_err < 1e-6);
        CHECK(r.n_inliers == obs.correspondences.size());
        for (std::size_t i = 1; i < r.cost_history.size(); ++i) CHECK(r.cost_history[i] <= r.cost_history[i - 1]);
    }
}

TEST_CASE("too few correspondences fail with infinite errors") {
    const SceneModel s = cloud_scene(5, 3);
    const CameraIntrinsics k;
    const auto obs = simulate_observation(s, kTruth, k, zero_noise());
    REQUIRE(obs.correspondences.size() == 5);
    const auto r = solve_pose(obs, s, k, kTruth, {}, &kTruth);
    CHECK_FALSE(r.success);
    CHECK(std::isinf(r.t_err));
    CHECK(std::isinf(r.r_err));
}

TEST_CASE("degenerate geometry returns a failure instead of throwing") {
    SceneModel s;
    // all points on the optical axis: rotation about it is unobservable
    for (int k = 0; k < 10; ++k) {
        MapPoint m;
        m.landmark.position = Vec3(2.0 + k, 0, 0);
        s.points.push_back(m);
    }
    const CameraIntrinsics k;
    const auto obs = simulate_observation(s, kTruth, k, zero_noise());
    LocalizationResult r;
    CHECK_NOTHROW(r = solve_pose(obs, s, k, kTruth, {}, &kTruth));
    CHECK_FALSE(r.success);
    CHECK(std::isinf(r.t_err));
}

TEST_CASE("pixel noise with 50 inliers localizes at 0.25 m / 2 deg in at least 95 percent of seeds") {
    const CameraIntrinsics k;
    NoiseSpec n = zero_noise();
    n.pixel_sigma = 1.0;
    int ok = 0;
    Rng rng(77);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const SceneModel s = cloud_scene(50, 1000 + seed);
        n.seed = seed;
        const auto obs = simulate_observation(s, kTruth, k, n);
        const auto r = solve_pose(obs, s, k, perturb(kTruth, rng, 0.3, 10), {}, &kTruth);
        ok += r.success && within(r.t_err, r.r_err, {0.25, 2.0});
    }
    MESSAGE("success rate at 0.25 m / 2 deg: " << ok << "/100");
    CHECK(ok >= 95);
}

TEST_CASE("benchmark thresholds and label threshold default") {
    const auto& th = benchmark_thresholds();
    REQUIRE(th.size() == 4);
    CHECK(th[0].t_m == 0.1);
    CHECK(th[0].r_deg == 1.0);
    CHECK(th[1].t_m == 0.25);
    CHECK(th[1].r_deg == 2.0);
    CHECK(th[2].t_m == 0.5);
    CHECK(th[2].r_deg == 5.0);
    CHECK(th[3].t_m == 5.0);
    CHECK(th[3].r_deg == 10.0);
    LabelOptions o;
    CHECK(o.label_threshold().t_m == 0.5);
    o.label_threshold_index = 4;
    CHECK_THROWS_AS(o.label_threshold(), ConfigError);
}

TEST_CASE("label_waypoint: blind cells, one-wall preference, threshold monotonicity, purity") {
    const SceneModel s = testing::one_wall_scene(5);
    LabelOptions o;
    const Waypoint wp{Vec3(4.0, 3.0, 1.5), 0.0};
    const auto a = label_waypoint(s, wp, o, {0, 0});
    const auto b = label_waypoint(s, wp, o, {0, 0});
    CHECK(a.labels == b.labels);
    CHECK((a.t_err.array() == b.t_err.array()).all());

    // landmarks only on the x-max wall: yaw 0 faces it, yaw -180 faces away
    int facing = 0, away = 0;
    for (int i = 0; i < o.grid.n_pitch; ++i) {
        facing += a.labels(i, 9);
        away += a.labels(i, 0);
        if (a.labels(i, 0) == 0) CHECK(std::isinf(a.t_err(i, 0)));
    }
    CHECK(facing > away);
    CHECK(away == 0);

    for (int i = 0; i < o.grid.n_pitch; ++i)
        for (int j = 0; j < o.grid.n_yaw; ++j) {
            int prev = 0;
            for (const auto& th : o.thresholds) {
                const int l = std::isfinite(a.t_err(i, j)) && within(a.t_err(i, j), a.r_err(i, j), th);
                CHECK(l >= prev);
                prev = l;
            }
        }
}

TEST_CASE("quality levels from dataset quartiles") {
    Eigen::MatrixXd t(1, 5), r(1, 5);
    const double inf = std::numeric_limits<double>::infinity();
    t << 0.05, 0.1, 0.2, 0.4, inf;
    r << 0.5, 1.0, 2.0, 4.0, inf;
    const Threshold th{0.5, 5.0};
    const auto q = error_quartiles({&t}, {&r}, th);
    CHECK(q[0] <= q[1]);
    CHECK(q[1] <= q[2]);
    CHECK(quality_level(0.05, 0.5, q, th) == 3);
    CHECK(quality_level(inf, inf, q, th) == 0);
    CHECK(quality_level(0.4, 4.0, q, th) == 0);
    for (int k = 0; k < 4; ++k) {
        const int l = quality_level(t(0, k), r(0, k), q, th);
        CHECK(l >= 0);
        CHECK(l <= 3);
    }
}

TEST_CASE("generate_dataset: heights, shapes, determinism, job independence") {
    const SceneModel s = testing::default_mapped_scene(6, 500);
    DatasetOptions o;
    o.n_waypoints_per_scene = 4;
    o.seed = 9;
    const auto a = generate_dataset({s}, o);
    o.jobs = 4;
    const auto b = generate_dataset({s}, o);
    REQUIRE(a.size() == 4);
    const auto dir = testing::temp_dir("dataset");
    write_dataset((dir / "a.jsonl").string(), a);
    write_dataset((dir / "b.jsonl").string(), b);
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
    for (const auto& t : a) {
        CHECK(t.waypoint.position.z() >= 0.4);
        CHECK(t.waypoint.position.z() <= 2.0);
        CHECK(t.labels.rows() == 6);
        CHECK(t.labels.cols() == 18);
        for (const auto& l : t.landmarks) {
            CHECK(l.track_len >= 2);
            CHECK(l.reproj_err <= 2.0);
            CHECK(l.position.cwiseAbs().maxCoeff() <= 5.0);
        }
    }
    const auto back = read_dataset((dir / "a.jsonl").string());
    REQUIRE(back.size() == a.size());
    CHECK(back[2].labels == a[2].labels);
    CHECK(back[2].landmarks.size() == a[2].landmarks.size());
    CHECK(back[2].poses[3].orientation == a[2].poses[3].orientation);
    CHECK((back[2].t_err.array() == a[2].t_err.array()).all());

    o.n_classes = 4;
    o.jobs = 1;
    const auto c = generate_dataset({s}, o);
    for (const auto& t : c) CHECK((t.labels.array() >= 0 && t.labels.array() <= 3).all());

    SceneModel unmapped = s;
    unmapped.poses.clear();
    CHECK_THROWS_AS(generate_dataset({unmapped}, o), ConfigError);
}

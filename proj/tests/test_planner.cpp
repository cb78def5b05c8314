#include "doctest.h"

#include "support.hpp"
#include "viewloc/planner.hpp"
#include "viewloc/rng.hpp"

#include <cmath>

using namespace viewloc;

namespace {

LocMap random_scores(const ViewGrid& g, Rng& rng) {
    Eigen::MatrixXd v(g.n_pitch, g.n_yaw);
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = rng.uniform();
    return {g, v};
}

GridCell brute_argmin(const LocMap& C, GridCell prev, double lambda, double sp, double sy) {
    GridCell best{0, 0};
    double best_cost = INFINITY;
    for (int i = 0; i < C.grid.n_pitch; ++i)
        for (int j = 0; j < C.grid.n_yaw; ++j) {
            const auto a = cell_to_angles(C.grid, {i, j});
            const auto b = cell_to_angles(C.grid, prev);
            double dy = std::abs(a.yaw - b.yaw);
            if (dy > 180.0) dy = 360.0 - dy;
            const double d = std::hypot((a.pitch - b.pitch) / sp, dy / sy);
            const double cost = 1.0 - C.values(i, j) + lambda * d;
            if (cost < best_cost) {
                best_cost = cost;
                best = {i, j};
            }
        }
    return best;
}

double signed_yaw_delta(double from, double to) {
    double d = std::fmod(to - from + 540.0, 360.0) - 180.0;
    return d;
}

}  // namespace

TEST_CASE("interpolation") {
    auto one = interpolate_waypoints({Vec3(1, 2, 3)}, 0.2);
    REQUIRE(one.size() == 1);
    CHECK(one[0].default_yaw == 0.0);

    auto seg = interpolate_waypoints({Vec3(0, 0, 1), Vec3(0, 1, 1)}, 0.2);
    REQUIRE(seg.size() == 6);
    CHECK(seg.front().position == Vec3(0, 0, 1));
    CHECK(seg.back().position == Vec3(0, 1, 1));
    for (const auto& w : seg) CHECK(w.default_yaw == doctest::Approx(90.0));

    CHECK_THROWS_AS(interpolate_waypoints({}, 0.2), ConfigError);
    CHECK_THROWS_AS(interpolate_waypoints({Vec3::Zero()}, 0.0), ConfigError);

    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Vec3> keys;
        const int n = 2 + static_cast<int>(rng.next_below(5));
        for (int k = 0; k < n; ++k) keys.emplace_back(rng.uniform(0, 8), rng.uniform(0, 6), rng.uniform(0.5, 2));
        const double spacing = rng.uniform(0.05, 0.5);
        const auto wps = interpolate_waypoints(keys, spacing);
        for (std::size_t k = 0; k + 1 < wps.size(); ++k)
            CHECK((wps[k + 1].position - wps[k].position).norm() <= spacing + 1e-12);
        // every keypoint appears
        for (const auto& key : keys) {
            bool found = false;
            for (const auto& w : wps) found = found || w.position == key;
            CHECK(found);
        }
        // a joint takes the heading of the segment that leaves it
        for (std::size_t k = 1; k < wps.size(); ++k) {
            const Vec3 d = wps[k].position - wps[k - 1].position;
            if (d.head<2>().norm() > 1e-9)
                CHECK(std::abs(signed_yaw_delta(rad2deg(std::atan2(d.y(), d.x())), wps[k - 1].default_yaw)) < 1e-6);
        }
    }
}

TEST_CASE("mixed cost hand example and ties") {
    ViewGrid g;
    g.n_pitch = 1;
    g.pitch_min = 0.0;
    g.n_yaw = 3;
    g.yaw_step = 120.0;
    Eigen::MatrixXd c(1, 3);
    c << 0.9, 0.2, 0.6;
    const LocMap C{g, c};
    const Eigen::MatrixXd m = mixed_cost(C, {0, 0}, 0.1, 20.0, 120.0);
    CHECK(m(0, 0) == doctest::Approx(0.1));
    CHECK(m(0, 1) == doctest::Approx(0.9));
    CHECK(m(0, 2) == doctest::Approx(0.5));
    CHECK(argmin_cell(m) == GridCell{0, 0});

    const LocMap uniform = LocMap::constant(ViewGrid{}, 0.4);
    CHECK(argmin_cell(mixed_cost(uniform, {4, 11}, 0.3, 20, 20)) == GridCell{4, 11});
    CHECK(argmin_cell(mixed_cost(uniform, {4, 11}, 0.0, 20, 20)) == GridCell{0, 0});
}

TEST_CASE("greedy selection against brute force and limit cases") {
    Rng rng(9);
    const ViewGrid g;
    PlanConfig cfg;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Waypoint> wps(6);
        std::vector<LocMap> scores;
        for (int k = 0; k < 6; ++k) scores.push_back(random_scores(g, rng));
        cfg.lambda = rng.uniform(0.0, 2.0);
        const auto t = select_viewpoints(wps, scores, cfg, true);
        REQUIRE(t.selected.size() == 6);
        CHECK(t.selected[0] == scores[0].argmax());
        for (std::size_t k = 1; k < 6; ++k) {
            CHECK(t.selected[k] == brute_argmin(scores[k], t.selected[k - 1], cfg.lambda, 20, 20));
            CHECK(t.costs[k] == t.cost_maps[k].minCoeff());
        }
    }
    std::vector<LocMap> scores;
    for (int k = 0; k < 10; ++k) scores.push_back(random_scores(g, rng));
    cfg.lambda = 0.0;
    const auto free = select_viewpoints(std::vector<Waypoint>(10), scores, cfg);
    for (int k = 0; k < 10; ++k) CHECK(free.selected[k] == scores[k].argmax());
    // scaling scores leaves the lambda-0 choice unchanged
    std::vector<LocMap> scaled;
    for (const auto& s : scores) scaled.push_back({g, 0.37 * s.values});
    CHECK(select_viewpoints(std::vector<Waypoint>(10), scaled, cfg).selected == free.selected);
    cfg.lambda = 1e6;
    const auto frozen = select_viewpoints(std::vector<Waypoint>(10), scores, cfg);
    for (int k = 0; k < 10; ++k) CHECK(frozen.selected[k] == scores[0].argmax());
}

TEST_CASE("larger lambda never moves farther from the previous cell") {
    Rng rng(12);
    const ViewGrid g;
    for (int trial = 0; trial < 500; ++trial) {
        const LocMap C = random_scores(g, rng);
        const GridCell prev{static_cast<int>(rng.next_below(6)), static_cast<int>(rng.next_below(18))};
        const double l1 = rng.uniform(0, 1), l2 = l1 + rng.uniform(0, 1);
        const auto c1 = argmin_cell(mixed_cost(C, prev, l1, 20, 20));
        const auto c2 = argmin_cell(mixed_cost(C, prev, l2, 20, 20));
        CHECK(grid_distance(g, c2, prev, 20, 20) <= grid_distance(g, c1, prev, 20, 20) + 1e-12);
    }
}

TEST_CASE("plan_viewpoints: scorer independence of positions, forward-facing, error wrapping") {
    const std::vector<Vec3> keys{Vec3(1, 1, 1), Vec3(3, 1, 1), Vec3(3, 2, 1.2)};
    PlanConfig cfg;
    Rng rng(4);
    std::vector<LocMap> maps;
    for (int k = 0; k < 64; ++k) maps.push_back(random_scores(cfg.grid, rng));
    const Scorer s{[&](const Waypoint&, std::size_t k) { return maps.at(k); }, false};
    const auto a = plan_viewpoints(keys, cfg, s);
    cfg.lambda = 5.0;
    cfg.jobs = 3;
    const auto b = plan_viewpoints(keys, cfg, s);
    REQUIRE(a.waypoints.size() == b.waypoints.size());
    for (std::size_t k = 0; k < a.waypoints.size(); ++k) CHECK(a.waypoints[k].position == b.waypoints[k].position);
    CHECK(a.selected != b.selected);

    cfg.scorer = ScorerKind::ForwardFacing;
    const auto f = plan_viewpoints(keys, cfg, Scorer{});
    CHECK(f.selected.front() == forward_facing(0.0, cfg.grid));
    CHECK(f.selected.back() == forward_facing(90.0, cfg.grid));
    for (double c : f.costs) CHECK(c == 0.0);

    cfg.scorer = ScorerKind::Model;
    const Scorer bad{[](const Waypoint&, std::size_t k) -> LocMap {
                         if (k == 7) throw NumericError("boom");
                         return LocMap::constant(ViewGrid{}, 0.5);
                     },
                     false};
    try {
        plan_viewpoints(keys, cfg, bad);
        FAIL("expected a waypoint error");
    } catch (const WaypointError& e) {
        CHECK(e.index() == 7);
    }
    cfg.lambda = -1.0;
    CHECK_THROWS_AS(plan_viewpoints(keys, cfg, s), ConfigError);
}

TEST_CASE("trajectory CSV") {
    PlanConfig cfg;
    Trajectory t;
    t.waypoints = {{Vec3(0.5, 1, 2), 0}, {Vec3(1, 1, 2), 0}};
    t.selected = {{3, 9}, {0, 0}};
    t.costs = {0.25, 1.0};
    CHECK(trajectory_to_csv(t, cfg.grid) ==
          "step,x,y,z,pitch_deg,yaw_deg,cost\n0,0.5,1,2,0,0,0.25\n1,1,1,2,-60,-180,1\n");
    CHECK(plan_config_from_json(to_json(cfg)).lambda == cfg.lambda);
}

TEST_CASE("two-wall scene: oracle scorer turns from the start wall to the end wall") {
    SceneSpec spec;
    spec.room_extent = Vec3(20.0, 4.0, 3.0);
    spec.n_landmarks = 1200;
    spec.n_occluders = 0;
    spec.wall_richness = {1.0, 1.0, 0.0, 0.0, 0.0, 0.0};
    spec.seed = 21;
    SceneModel scene = generate_scene(spec);
    SweepOptions sw;
    sw.seed = 21;
    build_mapping_sweep(scene, sw);

    LabelOptions lo;
    PlanConfig cfg;
    cfg.spacing = 1.0;
    cfg.scorer = ScorerKind::OracleLabels;
    const std::vector<Vec3> keys{Vec3(3.0, 2.0, 1.5), Vec3(17.0, 2.0, 1.5)};
    const Scorer s = oracle_scorer(scene, lo, 21);

    cfg.lambda = 0.0;
    const auto free = plan_viewpoints(keys, cfg, s);
    const double first = cell_to_angles(cfg.grid, free.selected.front()).yaw;
    const double last = cell_to_angles(cfg.grid, free.selected.back()).yaw;
    MESSAGE("lambda 0: first yaw " << first << ", last yaw " << last);
    CHECK(std::abs(first) > 90.0);
    CHECK(std::abs(last) < 90.0);

    cfg.lambda = 0.1;
    const auto smooth = plan_viewpoints(keys, cfg, s);
    int sign = 0;
    bool monotone = true;
    for (std::size_t k = 1; k < smooth.selected.size(); ++k) {
        const double d = signed_yaw_delta(cell_to_angles(cfg.grid, smooth.selected[k - 1]).yaw,
                                          cell_to_angles(cfg.grid, smooth.selected[k]).yaw);
        if (d == 0.0) continue;
        const int sg = d > 0 ? 1 : -1;
        if (sign != 0 && sg != sign) monotone = false;
        sign = sg;
    }
    CHECK(monotone);
    auto total_turn = [&](const Trajectory& t) {
        double s = 0.0;
        for (std::size_t k = 1; k < t.selected.size(); ++k)
            s += grid_distance(cfg.grid, t.selected[k - 1], t.selected[k], cfg.sigma_pitch, cfg.sigma_yaw);
        return s;
    };
    MESSAGE("total turn: lambda 0 " << total_turn(free) << ", lambda 0.1 " << total_turn(smooth));
    CHECK(total_turn(smooth) < total_turn(free));
}

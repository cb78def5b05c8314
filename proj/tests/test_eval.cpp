#include "doctest.h"

#include "support.hpp"
#include "viewloc/eval.hpp"
#include "viewloc/rng.hpp"

#include <fstream>
#include <iterator>
#include <limits>

using namespace viewloc;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

CellErrors random_cells(Rng& rng) {
    CellErrors c{Eigen::MatrixXd(6, 18), Eigen::MatrixXd(6, 18)};
    for (Eigen::Index k = 0; k < c.t_err.size(); ++k) {
        const bool fail = rng.uniform() < 0.3;
        c.t_err(k) = fail ? kInf : std::exp(rng.uniform(-4, 2));
        c.r_err(k) = fail ? kInf : std::exp(rng.uniform(-2, 3));
    }
    return c;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("success rates on a hand-counted fixture") {
    const std::vector<PoseError> e{{0.05, 0.5}, {0.3, 3.0}, {10.0, 20.0}};
    const auto r = success_rates(e, benchmark_thresholds());
    REQUIRE(r.size() == 4);
    CHECK(r[0] == 33.33);
    CHECK(r[1] == 33.33);
    CHECK(r[2] == 66.67);
    CHECK(r[3] == 66.67);
    const std::vector<PoseError> fails(5, PoseError{kInf, kInf});
    for (double v : success_rates(fails, benchmark_thresholds())) CHECK(v == 0.0);
    const std::vector<PoseError> exact(4, PoseError{0.0, 0.0});
    for (double v : success_rates(exact, benchmark_thresholds())) CHECK(v == 100.0);
    // both bounds are inclusive
    CHECK(success_rates({{0.1, 1.0}}, benchmark_thresholds())[0] == 100.0);
    CHECK_THROWS_AS(success_rates({}, benchmark_thresholds()), ConfigError);
    CHECK_THROWS_AS(upper_bound({}, benchmark_thresholds()), ConfigError);
}

TEST_CASE("upper bound dominates every selection and rates are monotone in the threshold") {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<CellErrors> wps;
        std::vector<GridCell> cells;
        const int n = 1 + static_cast<int>(rng.next_below(15));
        for (int k = 0; k < n; ++k) {
            wps.push_back(random_cells(rng));
            cells.push_back({static_cast<int>(rng.next_below(6)), static_cast<int>(rng.next_below(18))});
        }
        const auto ub = upper_bound(wps, benchmark_thresholds());
        const auto sel = success_rates(selected_errors(wps, cells), benchmark_thresholds());
        for (std::size_t t = 0; t < ub.size(); ++t) CHECK(ub[t] >= sel[t]);
        for (std::size_t t = 1; t < ub.size(); ++t) {
            CHECK(ub[t] >= ub[t - 1]);
            CHECK(sel[t] >= sel[t - 1]);
        }
    }
}

TEST_CASE("average errors over successes") {
    const std::vector<PoseError> e{{0.1, 1.0}, {0.3, 3.0}, {kInf, kInf}, {7.0, 1.0}};
    const auto a = avg_errors_successful(e, {0.5, 5.0});
    CHECK(a.t_err == doctest::Approx(0.2));
    CHECK(a.r_err == doctest::Approx(2.0));
    CHECK_THROWS_AS(avg_errors_successful({{kInf, kInf}}, {0.5, 5.0}), ConfigError);

    const auto r = make_report("x", e, benchmark_thresholds());
    CHECK(r.n_total == 4);
    CHECK(r.n_success == std::vector<std::size_t>{1, 1, 2, 2});
    REQUIRE(r.has_avg);
    CHECK(r.avg.t_err == doctest::Approx(0.2));
    const json j = to_json(r);
    CHECK(j.at("per_waypoint")[2][0].is_null());
    const std::string csv = reports_to_csv({r});
    CHECK(csv.rfind("policy,0.1m/1deg,0.25m/2deg,0.5m/5deg,5m/10deg,n_total", 0) == 0);
    CHECK(reports_to_text({r}).find("50.00") != std::string::npos);
    const auto none = make_report("y", {{kInf, kInf}}, benchmark_thresholds());
    CHECK_FALSE(none.has_avg);
    CHECK(to_json(none).at("avg_t_err").is_null());
}

TEST_CASE("heatmap layout, occluder handling, output files") {
    SceneSpec spec;
    spec.room_extent = Vec3(4.0, 3.0, 3.0);
    spec.n_landmarks = 50;
    spec.n_occluders = 1;
    spec.seed = 3;
    const SceneModel scene = generate_scene(spec);
    HeatmapOptions o;
    o.spacing = 0.5;
    o.height = 0.5;
    const WaypointScorer constant = [](const Waypoint&, std::size_t) { return LocMap::constant(ViewGrid{}, 0.7); };
    const Heatmap h = global_heatmap(constant, scene, o);
    CHECK(h.values.rows() == 7);
    CHECK(h.values.cols() == 9);
    int absent = 0;
    for (Eigen::Index r = 0; r < h.values.rows(); ++r)
        for (Eigen::Index c = 0; c < h.values.cols(); ++c) {
            const Vec3 p(h.x0 + c * h.spacing, h.y0 + r * h.spacing, h.height);
            bool inside = false;
            for (const auto& b : scene.occluders) inside = inside || b.contains(p);
            if (inside) {
                CHECK(std::isnan(h.values(r, c)));
                ++absent;
            } else {
                CHECK(h.values(r, c) == doctest::Approx(0.7));
            }
        }
    MESSAGE(absent << " samples inside the occluder");

    // top-k mean of a map whose best five cells are 1, 0.9, 0.8, 0.7, 0.6
    const WaypointScorer ramp = [](const Waypoint& wp, std::size_t) {
        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(6, 18);
        for (int k = 0; k < 5; ++k) v(k, 2 * k) = 1.0 - 0.1 * k;
        v(5, 17) = wp.position.x() * 0.0;
        return LocMap(ViewGrid{}, v);
    };
    const Heatmap hr = global_heatmap(ramp, scene, o);
    for (Eigen::Index k = 0; k < hr.values.size(); ++k)
        if (!std::isnan(hr.values(k))) CHECK(hr.values(k) == doctest::Approx(0.8));

    const auto dir = testing::temp_dir("heatmap");
    write_heatmap(h, (dir / "h.csv").string(), (dir / "h.pgm").string(), (dir / "m.pgm").string());
    const std::string csv = slurp((dir / "h.csv").string());
    CHECK((absent == 0 || csv.find("nan") != std::string::npos));
    const std::string mask = slurp((dir / "m.pgm").string());
    const std::string header = "P5\n9 7\n255\n";
    REQUIRE(mask.size() == header.size() + 63);
    int zeros = 0;
    for (std::size_t k = header.size(); k < mask.size(); ++k) zeros += mask[k] == 0 ? 1 : 0;
    CHECK(zeros == absent);
    o.top_k = 0;
    CHECK_THROWS_AS(global_heatmap(constant, scene, o), ConfigError);
}

TEST_CASE("sparsification sweep") {
    const SceneModel scene = testing::default_mapped_scene(5, 600);
    const auto wps = sample_waypoints(scene, 3, 0.5, 1.8, 0.3, 7);
    SparsifyOptions o;
    o.seed = 4;
    const SelectionPolicy forward = [](const SceneModel&, const Waypoint&, std::size_t) { return GridCell{3, 9}; };
    std::vector<double> fr{0.9, 0.0, 0.5};
    const auto rows = sparsification_sweep(scene, wps, fr, forward, o);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].fraction == 0.0);
    CHECK(rows[2].fraction == 0.9);
    CHECK(rows[0].n_poses == scene.poses.size());
    CHECK(rows[0].n_landmarks == scene.points.size());
    CHECK(rows[1].n_poses < rows[0].n_poses);
    CHECK(rows[2].n_poses < rows[1].n_poses);
    for (const auto& r : rows)
        for (std::size_t t = 0; t < r.policy_rates.size(); ++t) CHECK(r.upper_bound_rates[t] >= r.policy_rates[t]);

    // fraction 0 is the un-sparsified evaluation
    std::vector<CellErrors> cells;
    for (std::size_t k = 0; k < wps.size(); ++k) {
        const auto l = label_waypoint(scene, wps[k], o.label, {o.scene_id, k});
        cells.push_back({l.t_err, l.r_err});
    }
    CHECK(rows[0].upper_bound_rates == upper_bound(cells, o.label.thresholds));
    CHECK(rows[0].policy_rates ==
          success_rates(selected_errors(cells, std::vector<GridCell>(wps.size(), GridCell{3, 9})), o.label.thresholds));

    o.jobs = 3;
    const auto par = sparsification_sweep(scene, wps, fr, forward, o);
    for (std::size_t k = 0; k < rows.size(); ++k) CHECK(par[k].policy_rates == rows[k].policy_rates);
    const std::string csv = sparsify_rows_to_csv(rows, o.label.thresholds);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

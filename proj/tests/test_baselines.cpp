#include "doctest.h"

#include "support.hpp"
#include "viewloc/baselines.hpp"
#include "viewloc/errors.hpp"
#include "viewloc/rng.hpp"

#include <Eigen/Eigenvalues>

using namespace viewloc;

namespace {

std::vector<Vec3> random_points(int n, Rng& rng) {
    std::vector<Vec3> out;
    for (int k = 0; k < n; ++k) out.emplace_back(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    return out;
}

}  // namespace

TEST_CASE("information matrix closed forms") {
    const Vec3 c(1, 2, 3);
    CHECK(fif_info_from_points(c, {}) == Mat3::Zero());
    CHECK(fif_info_from_points(c, {c}) == Mat3::Zero());
    for (FifMetric m : {FifMetric::MinEigenvalue, FifMetric::Determinant, FifMetric::Trace})
        CHECK(fif_score(Mat3::Zero(), m) == 0.0);

    // one landmark constrains only the two directions orthogonal to the bearing
    const Mat3 one = fif_info_from_points(c, {c + Vec3(0, 0, 2)});
    CHECK(Eigen::FullPivLU<Mat3>(one).rank() == 2);
    CHECK(fif_score(one, FifMetric::MinEigenvalue) == doctest::Approx(0.0));
    CHECK(fif_score(one, FifMetric::Trace) == doctest::Approx(0.5));

    // unit points along the axes: sum (I - e e^T) = 2 I; both signs double it
    std::vector<Vec3> axes;
    for (int a = 0; a < 3; ++a) axes.push_back(c + Vec3::Unit(a));
    const Mat3 i2 = fif_info_from_points(c, axes);
    CHECK((i2 - 2.0 * Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(fif_score(i2, FifMetric::MinEigenvalue) == doctest::Approx(2.0));
    CHECK(fif_score(i2, FifMetric::Trace) == doctest::Approx(6.0));
    CHECK(fif_score(i2, FifMetric::Determinant) == doctest::Approx(8.0));
}

TEST_CASE("information matrix properties on random inputs") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 c(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        auto pts = random_points(1 + static_cast<int>(rng.next_below(20)), rng);
        const Mat3 info = fif_info_from_points(c, pts);
        CHECK((info - info.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        const auto eig = Eigen::SelfAdjointEigenSolver<Mat3>(info).eigenvalues();
        CHECK(eig(0) > -1e-12);

        // adding a landmark never lowers any metric
        auto more = pts;
        more.push_back(random_points(1, rng).front());
        const Mat3 bigger = fif_info_from_points(c, more);
        CHECK(fif_score(bigger, FifMetric::Trace) >= fif_score(info, FifMetric::Trace));
        CHECK(fif_score(bigger, FifMetric::MinEigenvalue) >= fif_score(info, FifMetric::MinEigenvalue) - 1e-12);

        // rotating the whole configuration about the center preserves the metrics
        const Mat3 r = Quat(rng.normal(), rng.normal(), rng.normal(), rng.normal()).to_rotation();
        std::vector<Vec3> rotated;
        for (const auto& p : pts) rotated.push_back(c + r * (p - c));
        const Mat3 ri = fif_info_from_points(c, rotated);
        CHECK((ri - r * info * r.transpose()).cwiseAbs().maxCoeff() < 1e-10);
        for (FifMetric m : {FifMetric::MinEigenvalue, FifMetric::Determinant, FifMetric::Trace})
            CHECK(std::abs(fif_score(ri, m) - fif_score(info, m)) <= 1e-9 * std::abs(fif_score(info, m)) + 1e-12);
    }
}

TEST_CASE("FIF map over a one-wall scene prefers the wall") {
    const SceneModel scene = testing::one_wall_scene(11);
    const Waypoint wp{Vec3(4.0, 3.0, 1.5), 0.0};
    const ViewGrid g;
    for (FifMetric m : {FifMetric::MinEigenvalue, FifMetric::Trace}) {
        const LocMap map = fif_locmap(scene, wp, g, m, scene.intrinsics);
        CHECK((map.values.array() >= 0.0).all());
        const auto best = cell_to_angles(g, map.argmax());
        CHECK(std::abs(best.yaw) <= 40.0);
        // looking straight away from the wall sees nothing
        CHECK(map.values(3, 0) == 0.0);
    }
}

TEST_CASE("forward-facing cell") {
    const ViewGrid g;
    CHECK(forward_facing(0.0, g) == GridCell{3, 9});
    CHECK(forward_facing(90.0, g) == GridCell{3, 13});
    CHECK(forward_facing(-180.0, g) == GridCell{3, 0});
    CHECK(forward_facing(179.0, g) == GridCell{3, 0});
    CHECK(forward_facing(-95.0, g) == GridCell{3, 4});
    CHECK(fif_metric_from_string("det") == FifMetric::Determinant);
    CHECK(std::string(to_string(FifMetric::MinEigenvalue)) == "mineig");
    CHECK_THROWS_AS(fif_metric_from_string("max"), ConfigError);
}

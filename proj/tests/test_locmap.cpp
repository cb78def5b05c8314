#include "doctest.h"

#include "support.hpp"
#include "viewloc/errors.hpp"
#include "viewloc/locmap.hpp"
#include "viewloc/rng.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

using namespace viewloc;

namespace {

LocMap random_map(std::uint64_t seed) {
    Rng rng(seed);
    const ViewGrid g;
    Eigen::MatrixXd v(g.n_pitch, g.n_yaw);
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = rng.uniform();
    return {g, v};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("upsampling keeps sample directions and grid geometry") {
    const LocMap m = random_map(1);
    for (int f : {2, 4}) {
        const LocMap u = upsample_locmap(m, f);
        CHECK(u.values.rows() == 6 * f);
        CHECK(u.values.cols() == 18 * f);
        CHECK(u.grid.pitch_min == m.grid.pitch_min);
        CHECK(u.grid.yaw_min == m.grid.yaw_min);
        CHECK(u.grid.pitch_step * f == m.grid.pitch_step);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 18; ++j) {
                CHECK(u.values(i * f, j * f) == m.values(i, j));
                // the upsampled cell and the source cell are the same direction
                const auto a = cell_to_angles(u.grid, {i * f, j * f});
                const auto b = cell_to_angles(m.grid, {i, j});
                CHECK(a.pitch == doctest::Approx(b.pitch));
                CHECK(a.yaw == doctest::Approx(b.yaw));
            }
        CHECK(u.values.minCoeff() >= m.values.minCoeff());
        CHECK(u.values.maxCoeff() <= m.values.maxCoeff());
    }
    CHECK_THROWS_AS(upsample_locmap(m, 3), ConfigError);
}

TEST_CASE("upsampling constant maps and the yaw seam") {
    const LocMap c = LocMap::constant(ViewGrid{}, 0.375);
    CHECK((upsample_locmap(c, 4).values.array() == 0.375).all());

    // values between the last and first yaw columns interpolate across the seam
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(6, 18);
    v.col(17).setConstant(1.0);
    const LocMap u = upsample_locmap({ViewGrid{}, v}, 2);
    for (int i = 0; i < 12; i += 2) {
        CHECK(u.values(i, 34) == 1.0);
        CHECK(u.values(i, 35) == doctest::Approx(0.5));
        CHECK(u.values(i, 0) == 0.0);
    }
    // a map that is linear in pitch stays linear
    Eigen::MatrixXd p(6, 18);
    for (int i = 0; i < 6; ++i) p.row(i).setConstant(i / 5.0);
    const LocMap up = upsample_locmap({ViewGrid{}, p}, 2);
    for (int i = 0; i + 1 < 12; ++i) CHECK(up.values(i, 3) == doctest::Approx(i / 10.0));
}

TEST_CASE("argmax, normalization, shape validation") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(6, 18);
    v(2, 5) = 1.0;
    v(3, 1) = 1.0;
    const LocMap m{ViewGrid{}, v};
    CHECK(m.argmax() == GridCell{2, 5});
    const LocMap n = normalize_minmax(random_map(2));
    CHECK(n.values.minCoeff() == 0.0);
    CHECK(n.values.maxCoeff() == 1.0);
    CHECK((normalize_minmax(LocMap::constant(ViewGrid{}, 3.0)).values.array() == 0.0).all());
    CHECK_THROWS_AS(LocMap(ViewGrid{}, Eigen::MatrixXd::Zero(5, 18)), ConfigError);
}

TEST_CASE("CSV and PGM output") {
    const LocMap m = random_map(3);
    const std::string csv = locmap_to_csv(m);
    std::istringstream in(csv);
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string cell;
        int j = 0;
        while (std::getline(ls, cell, ',')) {
            CHECK(std::stod(cell) == m.values(rows, j));
            ++j;
        }
        CHECK(j == 18);
        ++rows;
    }
    CHECK(rows == 6);

    const auto dir = testing::temp_dir("locmap");
    Eigen::MatrixXd v(2, 3);
    v << 0.0, 0.5, 1.0, -1.0, 2.0, 0.2;
    write_pgm(v, (dir / "m.pgm").string());
    const std::string pgm = slurp((dir / "m.pgm").string());
    const std::string header = "P5\n3 2\n255\n";
    REQUIRE(pgm.size() == header.size() + 6);
    CHECK(pgm.substr(0, header.size()) == header);
    const std::string px = pgm.substr(header.size());
    CHECK(static_cast<unsigned char>(px[0]) == 0);
    CHECK(static_cast<unsigned char>(px[1]) == 128);
    CHECK(static_cast<unsigned char>(px[2]) == 255);
    CHECK(static_cast<unsigned char>(px[3]) == 0);
    CHECK(static_cast<unsigned char>(px[4]) == 255);
    CHECK(static_cast<unsigned char>(px[5]) == 51);
}

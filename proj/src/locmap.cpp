#include "viewloc/locmap.hpp"

#include "viewloc/errors.hpp"
#include "viewloc/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace viewloc {

LocMap::LocMap(ViewGrid g, Eigen::MatrixXd v) : grid(g), values(std::move(v)) {
    if (values.rows() != grid.n_pitch || values.cols() != grid.n_yaw)
        throw ConfigError("LocMap values shape does not match its grid");
}

LocMap LocMap::constant(const ViewGrid& g, double v) {
    return {g, Eigen::MatrixXd::Constant(g.n_pitch, g.n_yaw, v)};
}

GridCell LocMap::argmax() const {
    GridCell best{0, 0};
    for (int i = 0; i < values.rows(); ++i)
        for (int j = 0; j < values.cols(); ++j)
            if (values(i, j) > values(best.i, best.j)) best = {i, j};
    return best;
}

LocMap upsample_locmap(const LocMap& map, int factor) {
    if (factor != 2 && factor != 4) throw ConfigError("upsample factor must be 2 or 4");
    ViewGrid g = map.grid;
    g.n_pitch *= factor;
    g.n_yaw *= factor;
    g.pitch_step /= factor;
    g.yaw_step /= factor;
    const int h = map.grid.n_pitch, w = map.grid.n_yaw;
    Eigen::MatrixXd out(g.n_pitch, g.n_yaw);
    for (int i = 0; i < g.n_pitch; ++i) {
        const int i0 = i / factor;
        const double ti = i0 + 1 < h ? static_cast<double>(i % factor) / factor : 0.0;
        const int i1 = std::min(i0 + 1, h - 1);
        for (int j = 0; j < g.n_yaw; ++j) {
            const int j0 = j / factor;
            const int j1 = (j0 + 1) % w;
            const double tj = static_cast<double>(j % factor) / factor;
            const auto& v = map.values;
            const double top = v(i0, j0) + tj * (v(i0, j1) - v(i0, j0));
            const double bottom = v(i1, j0) + tj * (v(i1, j1) - v(i1, j0));
            out(i, j) = top + ti * (bottom - top);
        }
    }
    return {g, std::move(out)};
}

LocMap normalize_minmax(const LocMap& map) {
    const double lo = map.values.minCoeff();
    const double hi = map.values.maxCoeff();
    if (!(hi > lo)) return LocMap::constant(map.grid, 0.0);
    return {map.grid, ((map.values.array() - lo) / (hi - lo)).matrix()};
}

std::string locmap_to_csv(const LocMap& map) {
    std::ostringstream ss;
    char buf[40];
    for (int i = 0; i < map.values.rows(); ++i) {
        for (int j = 0; j < map.values.cols(); ++j) {
            if (j) ss << ',';
            std::snprintf(buf, sizeof buf, "%.17g", map.values(i, j));
            ss << buf;
        }
        ss << '\n';
    }
    return ss.str();
}

void write_locmap_csv(const LocMap& map, const std::string& path) { write_text_file(path, locmap_to_csv(map)); }

void write_pgm(const Eigen::MatrixXd& values, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << "P5\n" << values.cols() << ' ' << values.rows() << "\n255\n";
    for (Eigen::Index i = 0; i < values.rows(); ++i)
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            const double v = std::isfinite(values(i, j)) ? std::clamp(values(i, j), 0.0, 1.0) : 0.0;
            out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
        }
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace viewloc

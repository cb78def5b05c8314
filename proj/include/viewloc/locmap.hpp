#pragma once

#include "viewloc/geom.hpp"

#include <Eigen/Core>

#include <string>

namespace viewloc {

/// Per-direction values over a ViewGrid: rows = pitch, columns = yaw.
struct LocMap {
    ViewGrid grid;
    Eigen::MatrixXd values;

    LocMap() = default;
    LocMap(ViewGrid g, Eigen::MatrixXd v);
    static LocMap constant(const ViewGrid& g, double v);

    double operator()(GridCell c) const { return values(c.i, c.j); }
    /// Row-major first maximum.
    GridCell argmax() const;
};

/// Bilinear upsampling by `factor` (2 or 4): yaw wraps circularly, pitch is
/// clamped at the top border. Original sample directions keep their values.
LocMap upsample_locmap(const LocMap& map, int factor);

/// Min-max normalization to [0, 1]; a constant map becomes all zeros.
LocMap normalize_minmax(const LocMap& map);

/// H rows x W columns, comma-separated, 17 significant digits.
std::string locmap_to_csv(const LocMap& map);
void write_locmap_csv(const LocMap& map, const std::string& path);
/// Binary 8-bit PGM (P5), pixel = round(255 * clamp(v, 0, 1)).
void write_pgm(const Eigen::MatrixXd& values, const std::string& path);

}  // namespace viewloc

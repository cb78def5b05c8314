#pragma once

#include "viewloc/geom.hpp"
#include "viewloc/locmap.hpp"
#include "viewloc/scene.hpp"

#include <string>
#include <vector>

namespace viewloc {

enum class FifMetric { MinEigenvalue, Determinant, Trace };

const char* to_string(FifMetric m);
/// Accepts mineig, det, trace.
FifMetric fif_metric_from_string(const std::string& s);

/// Bearing-model information sum of (I - b b^T) / d^2 from `center` to each point.
/// Points at the center itself are skipped.
Mat3 fif_info_from_points(const Vec3& center, const std::vector<Vec3>& points);

/// Information of the landmarks visible from the camera at (wp, cell).
Mat3 fif_info_matrix(const SceneModel& scene, const Waypoint& wp, GridCell cell, const ViewGrid& grid,
                     const CameraIntrinsics& intrinsics);

double fif_score(const Mat3& info, FifMetric metric);

/// Raw (unnormalized) metric per cell.
LocMap fif_locmap(const SceneModel& scene, const Waypoint& wp, const ViewGrid& grid, FifMetric metric,
                  const CameraIntrinsics& intrinsics);

/// Level-pitch cell closest to the direction of travel.
GridCell forward_facing(double heading_yaw_deg, const ViewGrid& grid);

}  // namespace viewloc

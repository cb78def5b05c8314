#pragma once

#include "viewloc/scene.hpp"

#include <cstdint>
#include <string>

namespace viewloc {

inline constexpr int kSceneSchemaVersion = 1;

/// Reads a COLMAP text model (cameras.txt, images.txt, points3D.txt).
///
/// World-to-camera image poses are converted to camera-to-world; colors are
/// mapped from 0..255 to [0, 1]; tracks come from the points3D track lists.
/// Only PINHOLE / SIMPLE_PINHOLE cameras are accepted, and all images must
/// share one camera.
///
/// Throws NotFoundError for a missing file, ParseError (file + line) for a
/// malformed line, IntegrityError for a dangling track reference.
SceneModel parse_colmap_text(const std::string& dir_path);

/// Writes a COLMAP text model with 12 significant digits. Occluders and
/// bounds are not part of the format and are dropped.
void write_colmap_text(const SceneModel& model, const std::string& dir_path);

/// Single-file JSON scene: schema_version, intrinsics, bounds, poses, landmarks, occluders.
/// Round trips are bit-exact.
SceneModel load_scene(const std::string& path);
void save_scene(const SceneModel& model, const std::string& path);

/// Removes floor(fraction * M) mapping poses chosen by one seeded permutation
/// (so larger fractions remove supersets), prunes them from every track, and
/// drops landmarks whose track becomes empty.
SceneModel sparsify(const SceneModel& model, double fraction, std::uint64_t seed);

}  // namespace viewloc

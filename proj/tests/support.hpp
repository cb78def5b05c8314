#pragma once

#include "viewloc/geom.hpp"
#include "viewloc/scene.hpp"
#include "viewloc/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

namespace testing {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("viewloc_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline double rel_diff(double a, double b) {
    const double s = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / s;
}

/// Room with landmarks only on the x-max wall, swept from a few anchors.
inline viewloc::SceneModel one_wall_scene(std::uint64_t seed, int n_landmarks = 600) {
    viewloc::SceneSpec spec;
    spec.n_landmarks = n_landmarks;
    spec.n_occluders = 0;
    spec.wall_richness = {0.0, 1.0, 0.0, 0.0, 0.0, 0.0};
    spec.seed = seed;
    auto scene = viewloc::generate_scene(spec);
    viewloc::SweepOptions sw;
    sw.seed = seed;
    viewloc::build_mapping_sweep(scene, sw);
    return scene;
}

inline viewloc::SceneModel default_mapped_scene(std::uint64_t seed, int n_landmarks = 800) {
    viewloc::SceneSpec spec;
    spec.n_landmarks = n_landmarks;
    spec.seed = seed;
    auto scene = viewloc::generate_scene(spec);
    viewloc::SweepOptions sw;
    sw.seed = seed;
    viewloc::build_mapping_sweep(scene, sw);
    return scene;
}

}  // namespace testing

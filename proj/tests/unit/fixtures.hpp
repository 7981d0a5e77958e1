#pragma once

#include "isac/metrics.hpp"
#include "isac/rng.hpp"
#include "isac/scene.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace isac::testing {

inline Scene small_scene(std::uint64_t seed, int users = 2, int targets = 1, ArrayGeometry tx = {3, 2}) {
    SceneDims dims;
    dims.tx = tx;
    dims.rx = {3, 2};
    dims.users = users;
    dims.targets = targets;
    dims.slots = 16;
    return sample_scene(seed, dims, ScenePowers{});
}

inline CMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    CounterRng rng(seed, 9);
    std::normal_distribution<double> n(0.0, 1.0);
    CMatrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = cd(n(rng), n(rng));
    return m;
}

/// Random beamformer scaled onto the power sphere.
inline Beamformer random_beamformer(const Scene& scene, int streams, std::uint64_t seed) {
    CMatrix w = random_matrix(scene.num_tx(), scene.num_users() + streams, seed);
    w *= std::sqrt(scene.power_budget) / w.norm();
    return Beamformer::from_stacked(w, scene.num_users(), scene.power_budget);
}

}  // namespace isac::testing

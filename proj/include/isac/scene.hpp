#pragma once

#include "isac/types.hpp"

#include <cstdint>
#include <vector>

namespace isac {

/// Uniform planar array with half-wavelength spacing. Elements are ordered
/// horizontal-major: index = h * n_vertical + v, matching a_h (x) a_v.
struct ArrayGeometry {
    int n_horizontal = 1;
    int n_vertical = 1;

    int size() const { return n_horizontal * n_vertical; }
    void validate() const;

    /// Closest-to-square factorization with n_horizontal >= n_vertical
    /// (20 -> 5x4, 16 -> 4x4, 8 -> 4x2).
    static ArrayGeometry closest_square(int elements);

    friend bool operator==(const ArrayGeometry&, const ArrayGeometry&) = default;
};

struct Target {
    double azimuth = 0.0;    // rad, [-pi, pi]
    double elevation = 0.0;  // rad, [-pi/2, pi/2]
    cd rcs{0.1, 0.0};

    friend bool operator==(const Target&, const Target&) = default;
};

/// One random problem instance. Powers are linear (milliwatts).
struct Scene {
    ArrayGeometry tx_geometry;
    ArrayGeometry rx_geometry;
    CMatrix channels;          // N_t x K, column k is h_k
    std::vector<Target> targets;
    RVector noise_comm;        // per-user noise power, length K
    double noise_radar = 1.0;
    int slots = 1;
    double power_budget = 1.0;

    int num_tx() const { return tx_geometry.size(); }
    int num_rx() const { return rx_geometry.size(); }
    int num_users() const { return static_cast<int>(channels.cols()); }
    int num_targets() const { return static_cast<int>(targets.size()); }

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
};

/// Transmit/receive steering matrices (one column per target) and their
/// angle derivatives, plus the radar cross-sections on the diagonal of U.
struct SteeringSet {
    CMatrix tx;          // A
    CMatrix rx;          // B
    CMatrix tx_dtheta;   // dA/dtheta
    CMatrix tx_dphi;     // dA/dphi
    CMatrix rx_dtheta;   // dB/dtheta
    CMatrix rx_dphi;     // dB/dphi
    CVector rcs;         // alpha_1..alpha_M

    CMatrix rcs_diag() const { return rcs.asDiagonal(); }
    int num_targets() const { return static_cast<int>(rcs.size()); }
};

struct SteeringDerivatives {
    CVector dtheta;
    CVector dphi;
};

CVector steering_vector(const ArrayGeometry& geom, double azimuth, double elevation);
SteeringDerivatives steering_derivatives(const ArrayGeometry& geom, double azimuth, double elevation);
SteeringSet build_steering_set(const Scene& scene);

enum class ElevationSampling {
    Domain,        // elevation ~ U(-pi/2, pi/2)
    WideClipped,  // elevation ~ U(-2pi/3, 2pi/3), clipped to [-pi/2, pi/2]
};

struct SceneDims {
    ArrayGeometry tx{4, 4};
    ArrayGeometry rx{5, 4};
    int users = 4;
    int targets = 2;
    int slots = 64;
};

struct ScenePowers {
    double power_dbm = 10.0;
    double noise_radar_dbm = 0.0;
    double noise_comm_dbm = 0.0;
};

double dbm_to_linear(double dbm);

/// Rayleigh channels, random target angles and cross-sections. A pure
/// function of its arguments: channels come from stream 0 of the seed and
/// targets from stream 1, so changing K does not move the targets.
Scene sample_scene(std::uint64_t seed, const SceneDims& dims, const ScenePowers& powers,
                   ElevationSampling elevation = ElevationSampling::Domain);

}  // namespace isac

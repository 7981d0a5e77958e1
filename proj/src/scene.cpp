#include "isac/scene.hpp"

#include "isac/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace isac {

namespace {

void check_angles(double azimuth, double elevation) {
    if (!std::isfinite(azimuth) || azimuth < -kPi || azimuth > kPi)
        throw std::invalid_argument("azimuth out of [-pi, pi]: " + std::to_string(azimuth));
    if (!std::isfinite(elevation) || elevation < -kPi / 2 || elevation > kPi / 2)
        throw std::invalid_argument("elevation out of [-pi/2, pi/2]: " + std::to_string(elevation));
}

// (1/sqrt(n)) [1, e^{j pi u}, ..., e^{j pi (n-1) u}]
CVector ula_factor(int n, double u) {
    CVector v(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < n; ++i) v(i) = std::polar(scale, kPi * i * u);
    return v;
}

CVector kron(const CVector& a, const CVector& b) {
    CVector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

// j * pi * c * n (.) v with n = [0, 1, ..., len-1]
CVector index_scaled(const CVector& v, double c) {
    CVector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = cd(0.0, kPi * c * static_cast<double>(i)) * v(i);
    return out;
}

}  // namespace

void ArrayGeometry::validate() const {
    if (n_horizontal < 1 || n_vertical < 1)
        throw std::invalid_argument("array dimensions must be >= 1");
}

ArrayGeometry ArrayGeometry::closest_square(int elements) {
    if (elements < 1) throw std::invalid_argument("array size must be >= 1");
    int vertical = static_cast<int>(std::floor(std::sqrt(static_cast<double>(elements))));
    while (elements % vertical != 0) --vertical;
    return {elements / vertical, vertical};
}

void Scene::validate() const {
    tx_geometry.validate();
    rx_geometry.validate();
    if (channels.rows() != num_tx())
        throw std::invalid_argument("channel matrix must have N_t rows");
    if (!channels.allFinite()) throw std::invalid_argument("channel matrix has non-finite entries");
    if (noise_comm.size() != channels.cols())
        throw std::invalid_argument("need one communication noise power per user");
    if ((noise_comm.array() <= 0.0).any() || !noise_comm.allFinite())
        throw std::invalid_argument("communication noise powers must be positive");
    if (!(noise_radar > 0.0) || !std::isfinite(noise_radar))
        throw std::invalid_argument("radar noise power must be positive");
    if (slots < 1) throw std::invalid_argument("slots must be >= 1");
    if (!(power_budget > 0.0) || !std::isfinite(power_budget))
        throw std::invalid_argument("power budget must be positive");
    for (const auto& t : targets) {
        check_angles(t.azimuth, t.elevation);
        if (!(std::abs(t.rcs) > 0.0) || !std::isfinite(std::abs(t.rcs)))
            throw std::invalid_argument("radar cross-section must be nonzero and finite");
    }
}

CVector steering_vector(const ArrayGeometry& geom, double azimuth, double elevation) {
    geom.validate();
    check_angles(azimuth, elevation);
    const CVector ah = ula_factor(geom.n_horizontal, std::sin(azimuth) * std::sin(elevation));
    const CVector av = ula_factor(geom.n_vertical, std::cos(elevation));
    return kron(ah, av);
}

SteeringDerivatives steering_derivatives(const ArrayGeometry& geom, double azimuth, double elevation) {
    geom.validate();
    check_angles(azimuth, elevation);
    const CVector ah = ula_factor(geom.n_horizontal, std::sin(azimuth) * std::sin(elevation));
    const CVector av = ula_factor(geom.n_vertical, std::cos(elevation));

    const CVector dah_dtheta = index_scaled(ah, std::cos(azimuth) * std::sin(elevation));
    const CVector dah_dphi = index_scaled(ah, std::sin(azimuth) * std::cos(elevation));
    const CVector dav_dphi = index_scaled(av, -std::sin(elevation));

    return {kron(dah_dtheta, av), kron(dah_dphi, av) + kron(ah, dav_dphi)};
}

SteeringSet build_steering_set(const Scene& scene) {
    scene.validate();
    const int m = scene.num_targets();
    SteeringSet s;
    s.tx.resize(scene.num_tx(), m);
    s.tx_dtheta.resize(scene.num_tx(), m);
    s.tx_dphi.resize(scene.num_tx(), m);
    s.rx.resize(scene.num_rx(), m);
    s.rx_dtheta.resize(scene.num_rx(), m);
    s.rx_dphi.resize(scene.num_rx(), m);
    s.rcs.resize(m);
    for (int i = 0; i < m; ++i) {
        const Target& t = scene.targets[static_cast<std::size_t>(i)];
        s.tx.col(i) = steering_vector(scene.tx_geometry, t.azimuth, t.elevation);
        s.rx.col(i) = steering_vector(scene.rx_geometry, t.azimuth, t.elevation);
        const auto dtx = steering_derivatives(scene.tx_geometry, t.azimuth, t.elevation);
        const auto drx = steering_derivatives(scene.rx_geometry, t.azimuth, t.elevation);
        s.tx_dtheta.col(i) = dtx.dtheta;
        s.tx_dphi.col(i) = dtx.dphi;
        s.rx_dtheta.col(i) = drx.dtheta;
        s.rx_dphi.col(i) = drx.dphi;
        s.rcs(i) = t.rcs;
    }
    return s;
}

double dbm_to_linear(double dbm) {
    if (!std::isfinite(dbm)) throw std::invalid_argument("dBm value must be finite");
    return std::pow(10.0, dbm / 10.0);
}

Scene sample_scene(std::uint64_t seed, const SceneDims& dims, const ScenePowers& powers,
                   ElevationSampling elevation) {
    dims.tx.validate();
    dims.rx.validate();
    if (dims.users < 0) throw std::invalid_argument("number of users must be >= 0");
    if (dims.targets < 0) throw std::invalid_argument("number of targets must be >= 0");
    if (dims.slots < 1) throw std::invalid_argument("slots must be >= 1");

    Scene scene;
    scene.tx_geometry = dims.tx;
    scene.rx_geometry = dims.rx;
    scene.slots = dims.slots;
    scene.power_budget = dbm_to_linear(powers.power_dbm);
    scene.noise_radar = dbm_to_linear(powers.noise_radar_dbm);
    scene.noise_comm = RVector::Constant(dims.users, dbm_to_linear(powers.noise_comm_dbm));

    // CN(0, 1): independent real and imaginary parts with variance 1/2.
    CounterRng channel_rng(seed, 0);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    scene.channels.resize(dims.tx.size(), dims.users);
    for (Eigen::Index k = 0; k < scene.channels.cols(); ++k)
        for (Eigen::Index n = 0; n < scene.channels.rows(); ++n) {
            const double re = gauss(channel_rng);
            const double im = gauss(channel_rng);
            scene.channels(n, k) = cd(re, im);
        }

    CounterRng target_rng(seed, 1);
    const double wide = 2.0 * kPi / 3.0;
    scene.targets.reserve(static_cast<std::size_t>(dims.targets));
    for (int m = 0; m < dims.targets; ++m) {
        Target t;
        t.azimuth = -wide + 2.0 * wide * target_rng.uniform01();
        const double u = target_rng.uniform01();
        if (elevation == ElevationSampling::Domain) {
            t.elevation = -kPi / 2 + kPi * u;
        } else {
            t.elevation = std::clamp(-wide + 2.0 * wide * u, -kPi / 2, kPi / 2);
        }
        const double nu = target_rng.uniform01();
        t.rcs = std::polar(0.1 * (1.0 + 0.2 * nu), 2.0 * kPi * nu);
        scene.targets.push_back(t);
    }
    scene.validate();
    return scene;
}

}  // namespace isac

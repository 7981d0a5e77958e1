#include "isac/model.hpp"

#include <cmath>

namespace isac {

namespace {

// X^T (.) G
CMatrix ht(const CMatrix& x, const CMatrix& g) { return x.transpose().cwiseProduct(g); }

}  // namespace

ReceiveGrams ReceiveGrams::from(const SteeringSet& s) {
    ReceiveGrams g;
    g.b_b = s.rx.adjoint() * s.rx;
    g.dt_dt = s.rx_dtheta.adjoint() * s.rx_dtheta;
    g.b_dt = s.rx.adjoint() * s.rx_dtheta;
    g.dt_b = s.rx_dtheta.adjoint() * s.rx;
    g.dp_dp = s.rx_dphi.adjoint() * s.rx_dphi;
    g.b_dp = s.rx.adjoint() * s.rx_dphi;
    g.dp_b = s.rx_dphi.adjoint() * s.rx;
    g.dt_dp = s.rx_dtheta.adjoint() * s.rx_dphi;
    return g;
}

IsacModel make_model(const Scene& scene, const SteeringSet& steering) {
    IsacModel m;
    m.channels = scene.channels;
    m.tx = steering.tx;
    m.tx_dtheta = steering.tx_dtheta;
    m.tx_dphi = steering.tx_dphi;
    m.grams = ReceiveGrams::from(steering);
    m.rcs = steering.rcs;
    m.noise_comm = scene.noise_comm;
    m.noise_radar = scene.noise_radar;
    m.slots = scene.slots;
    return m;
}

IsacModel effective_model(const IsacModel& model, const CMatrix& basis) {
    IsacModel m = model;
    m.channels = basis.adjoint() * model.channels;
    m.tx = basis.adjoint() * model.tx;
    m.tx_dtheta = basis.adjoint() * model.tx_dtheta;
    m.tx_dphi = basis.adjoint() * model.tx_dphi;
    return m;
}

namespace core {

RVector user_rates(const IsacModel& model, const CMatrix& w) {
    const int k_users = model.num_users();
    if (w.rows() != model.channels.rows() || w.cols() < k_users)
        throw std::invalid_argument("beamformer dimensions do not match the channel matrix");
    const CMatrix g = model.channels.adjoint() * w;  // g(k, j) = h_k^H w_j
    RVector rates(k_users);
    for (int k = 0; k < k_users; ++k) {
        const double desired = std::norm(g(k, k));
        const double interference = g.row(k).squaredNorm() - desired + model.noise_comm(k);
        rates(k) = std::log1p(desired / interference);
    }
    return rates;
}

RMatrix fisher_matrix(const IsacModel& model, const CMatrix& w) {
    if (w.rows() != model.tx.rows())
        throw std::invalid_argument("beamformer row count does not match the transmit array");
    const int m = model.num_targets();
    const auto& g = model.grams;

    // With R_x = W W^H, X^H R_x Y = (W^H X)^H (W^H Y).
    const CMatrix ya = w.adjoint() * model.tx;
    const CMatrix yt = w.adjoint() * model.tx_dtheta;
    const CMatrix yp = w.adjoint() * model.tx_dphi;
    const CMatrix aa = ya.adjoint() * ya;
    const CMatrix at = ya.adjoint() * yt;
    const CMatrix ta = yt.adjoint() * ya;
    const CMatrix tt = yt.adjoint() * yt;
    const CMatrix ap = ya.adjoint() * yp;
    const CMatrix pa = yp.adjoint() * ya;
    const CMatrix pp = yp.adjoint() * yp;
    const CMatrix pt = yp.adjoint() * yt;

    const auto u = model.rcs.asDiagonal();
    const auto uh = model.rcs.conjugate().asDiagonal();
    auto sandwich = [&](const CMatrix& x) -> CMatrix { return u * x * uh; };

    const CMatrix f11 = ht(sandwich(aa), g.dt_dt) + ht(sandwich(at), g.b_dt) + ht(sandwich(ta), g.dt_b) +
                        ht(sandwich(tt), g.b_b);
    const CMatrix f12 = ht(sandwich(aa), g.dt_dp) + ht(sandwich(at), g.b_dp) + ht(sandwich(pa), g.dt_b) +
                        ht(sandwich(pt), g.b_b);
    const CMatrix f22 = ht(sandwich(aa), g.dp_dp) + ht(sandwich(ap), g.b_dp) + ht(sandwich(pa), g.dp_b) +
                        ht(sandwich(pp), g.b_b);
    const CMatrix f13 = ht(aa * uh, g.dt_b) + ht(at * uh, g.b_b);
    const CMatrix f23 = ht(aa * uh, g.dp_b) + ht(ap * uh, g.b_b);
    const CMatrix f33 = ht(aa, g.b_b);

    RMatrix f(4 * m, 4 * m);
    f.block(0, 0, m, m) = f11.real();
    f.block(0, m, m, m) = f12.real();
    f.block(0, 2 * m, m, m) = f13.real();
    f.block(0, 3 * m, m, m) = -f13.imag();
    f.block(m, 0, m, m) = f12.real().transpose();
    f.block(m, m, m, m) = f22.real();
    f.block(m, 2 * m, m, m) = f23.real();
    f.block(m, 3 * m, m, m) = -f23.imag();
    f.block(2 * m, 0, m, m) = f13.real().transpose();
    f.block(2 * m, m, m, m) = f23.real().transpose();
    f.block(2 * m, 2 * m, m, m) = f33.real();
    f.block(2 * m, 3 * m, m, m) = -f33.imag();
    f.block(3 * m, 0, m, m) = -f13.imag().transpose();
    f.block(3 * m, m, m, m) = -f23.imag().transpose();
    f.block(3 * m, 2 * m, m, m) = -f33.imag().transpose();
    f.block(3 * m, 3 * m, m, m) = f33.real();
    return model.fisher_scale() * f;
}

CMatrix sensing_q(const IsacModel& model, const RMatrix& phi, QMutation mutation) {
    const int m = model.num_targets();
    if (phi.rows() != 4 * m || phi.cols() != 4 * m)
        throw std::invalid_argument("Phi must be 4M x 4M");
    const auto& g = model.grams;
    const auto u = model.rcs.asDiagonal();
    const auto uh = model.rcs.conjugate().asDiagonal();
    auto blk = [&](int i, int j) -> CMatrix { return phi.block(i * m, j * m, m, m).cast<cd>(); };

    const CMatrix p11 = blk(0, 0);
    const CMatrix p12 = blk(0, 1);
    const CMatrix p22 = blk(1, 1);
    const cd j2(0.0, 2.0);
    CMatrix x13 = 2.0 * blk(0, 2) + j2 * blk(0, 3);
    if (mutation == QMutation::FlipCrossThetaAlpha) x13 = -x13;
    const CMatrix x23 = 2.0 * blk(1, 2) + j2 * blk(1, 3);
    const CMatrix x33 = blk(2, 2) + blk(3, 3) + j2 * blk(2, 3);

    // Q = T K T^H with T = [A, dA/dtheta, dA/dphi]; K collects the six
    // Phi-weighted blocks Q11, Q12, Q22, Q13, Q23, Q33 by their outer factors.
    auto sand = [&](const CMatrix& x) -> CMatrix { return uh * x * u; };
    CMatrix k = CMatrix::Zero(3 * m, 3 * m);
    // rows: left factor (A, At, Ap); cols: right factor (A^H, At^H, Ap^H)
    k.block(0, 0, m, m) = sand(p11.cwiseProduct(g.dt_dt)) + 2.0 * sand(p12.cwiseProduct(g.dt_dp)) +
                          sand(p22.cwiseProduct(g.dp_dp)) + uh * x13.cwiseProduct(g.dt_b) +
                          uh * x23.cwiseProduct(g.dp_b) + x33.cwiseProduct(g.b_b);
    k.block(m, 0, m, m) = sand(p11.cwiseProduct(g.b_dt)) + 2.0 * sand(p12.cwiseProduct(g.b_dp)) +
                          uh * x13.cwiseProduct(g.b_b);
    k.block(2 * m, 0, m, m) = sand(p22.cwiseProduct(g.b_dp)) + uh * x23.cwiseProduct(g.b_b);
    k.block(0, m, m, m) = sand(p11.cwiseProduct(g.dt_b));
    k.block(m, m, m, m) = sand(p11.cwiseProduct(g.b_b));
    k.block(0, 2 * m, m, m) = 2.0 * sand(p12.cwiseProduct(g.dt_b)) + sand(p22.cwiseProduct(g.dp_b));
    k.block(m, 2 * m, m, m) = 2.0 * sand(p12.cwiseProduct(g.b_b));
    k.block(2 * m, 2 * m, m, m) = sand(p22.cwiseProduct(g.b_b));

    CMatrix t(model.tx.rows(), 3 * m);
    t << model.tx, model.tx_dtheta, model.tx_dphi;
    return model.fisher_scale() * (t * k * t.adjoint());
}

}  // namespace core

}  // namespace isac

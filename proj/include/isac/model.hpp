#pragma once

#include "isac/scene.hpp"
#include "isac/types.hpp"

namespace isac {

/// Receive-side inner products that enter the Fisher information. They do not
/// depend on the beamformer, so solvers compute them once.
/// Naming: b = B, dt = dB/dtheta, dp = dB/dphi; x_y holds X^H Y.
struct ReceiveGrams {
    CMatrix b_b;
    CMatrix dt_dt;
    CMatrix b_dt;
    CMatrix dt_b;
    CMatrix dp_dp;
    CMatrix b_dp;
    CMatrix dp_b;
    CMatrix dt_dp;

    static ReceiveGrams from(const SteeringSet& steering);
};

/// Everything needed to evaluate rates, the FIM and their gradients for a
/// beamformer living in some n-dimensional transmit space. For the original
/// problem n = N_t; the low-dimensional solver uses the same model with every
/// transmit-side matrix replaced by its effective counterpart N^H X.
struct IsacModel {
    CMatrix channels;   // n x K
    CMatrix tx;         // n x M
    CMatrix tx_dtheta;  // n x M
    CMatrix tx_dphi;    // n x M
    ReceiveGrams grams;
    CVector rcs;
    RVector noise_comm;
    double noise_radar = 1.0;
    int slots = 1;

    int dim() const { return static_cast<int>(tx.rows() > 0 ? tx.rows() : channels.rows()); }
    int num_users() const { return static_cast<int>(channels.cols()); }
    int num_targets() const { return static_cast<int>(rcs.size()); }
    double fisher_scale() const { return 2.0 * slots / noise_radar; }
};

IsacModel make_model(const Scene& scene, const SteeringSet& steering);

/// Replaces H, A, dA/dtheta, dA/dphi with basis^H times each of them.
IsacModel effective_model(const IsacModel& model, const CMatrix& basis);

/// Debug hook used by the verification suite to check that a corrupted Q
/// assembly is caught by the adjoint identity.
enum class QMutation { None, FlipCrossThetaAlpha };

namespace core {

/// Per-user achievable rates (nats/s/Hz); the first K columns of w are the
/// communication beams, the rest are sensing streams.
RVector user_rates(const IsacModel& model, const CMatrix& w);

/// 4M x 4M real FIM, parameter order (theta, phi, Re alpha, Im alpha).
RMatrix fisher_matrix(const IsacModel& model, const CMatrix& w);

/// Q(Phi) such that tr(Phi^T F(W)) = Re tr(W W^H Q(Phi)) for symmetric Phi.
CMatrix sensing_q(const IsacModel& model, const RMatrix& phi, QMutation mutation = QMutation::None);

}  // namespace core

}  // namespace isac

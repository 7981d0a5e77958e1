#pragma once

#include "isac/metrics.hpp"
#include "isac/model.hpp"
#include "isac/sca_solver.hpp"
#include "isac/scene.hpp"

namespace isac {

/// N = [H, A, dA/dtheta, dA/dphi] with its Gram matrix N^H N and a Cholesky
/// factor of the (possibly jittered) Gram.
struct BasisSet {
    CMatrix basis;
    CMatrix gram;
    Eigen::LLT<CMatrix> factor;
    double jitter = 0.0;
    int users = 0;
    int targets = 0;

    int size() const { return static_cast<int>(basis.cols()); }
    CMatrix solve(const CMatrix& rhs) const { return factor.solve(rhs); }
};

/// P = [P_c, P_s], (K + 3M) x (K + 3M).
struct Coefficients {
    CMatrix p;
    int users = 0;

    CMatrix comm() const { return p.leftCols(users); }
    CMatrix sensing() const { return p.rightCols(p.cols() - users); }
};

/// N^H times each of H, A, dA/dtheta, dA/dphi. These are column blocks of the Gram.
struct EffectiveChannels {
    CMatrix channels;
    CMatrix tx;
    CMatrix tx_dtheta;
    CMatrix tx_dphi;
};

BasisSet build_basis(const Scene& scene, const SteeringSet& steering);
EffectiveChannels effective_channels(const BasisSet& basis);

/// tr(P P^H N^H N).
double ellipsoid_power(const BasisSet& basis, const CMatrix& p);

/// Scales G^-1 L onto tr(P P^H G) = power_budget.
CMatrix project_ellipsoid(const BasisSet& basis, const CMatrix& l, double power_budget);

struct LdStepResult {
    Coefficients next;
    double lambda = 0.0;
};

/// One closed-form update P <- scale * G^-1 (C1~ + C2~ P) on the effective
/// model. With LowDimShift::Gram, C2~ = lambda G - curvature~ and lambda
/// bounds the curvature relative to G; with LowDimShift::Identity,
/// C2~ = lambda I - curvature~.
LdStepResult ld_step(const BasisSet& basis, const IsacModel& effective, const Coefficients& p, double power_budget,
                     const Weights& weights, const SolverConfig& cfg);

/// Same loop contract as solve, iterating on P. The reported beamformer is
/// W = N P and result.coefficients holds P.
SolveResult solve_ld(const Scene& scene, const Weights& weights, const SolverConfig& cfg = {});

}  // namespace isac

#include "isac/analysis.hpp"

#include "isac/model.hpp"
#include "isac/rng.hpp"
#include "isac/sca_solver.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>

namespace isac {

double recover_multiplier(const CMatrix& w, const CMatrix& gradient) {
    const double power = w.squaredNorm();
    if (!(power > 0.0)) return 0.0;
    return std::real(w.conjugate().cwiseProduct(gradient).sum()) / (2.0 * power);
}

double recover_multiplier(const Beamformer& w, const CMatrix& gradient) {
    return recover_multiplier(w.stacked(), gradient);
}

ObsReport obs_residuals(const Scene& scene, const SteeringSet& steering, const Beamformer& w,
                        const Weights& weights) {
    w.validate(scene);
    weights.validate();
    const CMatrix wt = w.stacked();
    const auto lin = core::linearize(make_model(scene, steering), wt, weights);
    const CMatrix grad = lin.gradient(wt);

    ObsReport r;
    r.multiplier = recover_multiplier(wt, grad);
    const double grad_norm = grad.norm();
    r.stationarity = grad_norm > 0.0 ? (grad - 2.0 * r.multiplier * wt).norm() / grad_norm : 0.0;

    const auto n = wt.rows();
    const int k = w.num_users();
    if (k > 0) {
        const CMatrix system = r.multiplier * CMatrix::Identity(n, n) + lin.curvature;
        Eigen::FullPivLU<CMatrix> lu(system);
        if (!lu.isInvertible()) throw IsacError("structure system mu I + C is singular");
        const CMatrix predicted = lu.solve(lin.c1.leftCols(k));
        const double norm = w.comm.norm();
        r.comm_residual = norm > 0.0 ? (w.comm - predicted).norm() / norm : 0.0;
    }
    if (w.sensing_streams() > 0) {
        const double defect = (lin.curvature * w.sensing + r.multiplier * w.sensing).norm();
        const double mu = std::abs(r.multiplier);
        const double total = mu * wt.norm();
        const double own = mu * w.sensing.norm();
        r.sensing_residual = total > 0.0 ? defect / total : 0.0;
        r.sensing_residual_own = own > 0.0 ? defect / own : 0.0;
        r.sensing_rank = rank_check(w.sensing);
    }
    return r;
}

int rank_check(const CMatrix& w_s, double threshold_ratio) {
    if (w_s.size() == 0) return 0;
    const RVector sv = Eigen::JacobiSVD<CMatrix>(w_s).singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    return static_cast<int>((sv.array() > threshold_ratio * sv(0)).count());
}

CMatrix fd_gradient(const Scene& scene, const SteeringSet& steering, const Beamformer& w, const Weights& weights,
                    double step) {
    w.validate(scene);
    const CMatrix base = w.stacked();
    if (step == 0.0 && base.size() > 0) step = 1e-2 * std::sqrt(base.squaredNorm() / static_cast<double>(base.size()));
    if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    const int k = w.num_users();
    auto f = [&](const CMatrix& x) {
        return objective(scene, steering, Beamformer::from_stacked(x, k, w.power_budget), weights);
    };
    // Fourth-order central stencil (8 (f(+h) - f(-h)) - (f(+2h) - f(-2h))) / 12h.
    auto derivative = [&](Eigen::Index i, Eigen::Index j, cd direction) {
        auto at = [&](double t) {
            CMatrix x = base;
            x(i, j) += t * direction;
            return f(x);
        };
        return (8.0 * (at(step) - at(-step)) - (at(2.0 * step) - at(-2.0 * step))) / (12.0 * step);
    };
    CMatrix grad(base.rows(), base.cols());
    for (Eigen::Index j = 0; j < base.cols(); ++j)
        for (Eigen::Index i = 0; i < base.rows(); ++i)
            grad(i, j) = cd(derivative(i, j, 1.0), derivative(i, j, cd(0.0, 1.0)));
    return grad;
}

RMatrix fd_fim(const Scene& scene, const SteeringSet& steering, const Beamformer& w, double step, int signal_draws,
               std::uint64_t seed) {
    if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    if (signal_draws < 0) throw std::invalid_argument("signal_draws must be >= 0");
    w.validate(scene);
    const int m = scene.num_targets();
    const CMatrix wt = w.stacked();

    CMatrix second_moment;
    if (signal_draws == 0) {
        second_moment = wt * wt.adjoint();
    } else {
        CounterRng rng(seed, 4);
        std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
        second_moment = CMatrix::Zero(wt.rows(), wt.rows());
        CVector s(wt.cols());
        for (int d = 0; d < signal_draws; ++d) {
            for (Eigen::Index i = 0; i < s.size(); ++i) {
                const double re = gauss(rng);
                const double im = gauss(rng);
                s(i) = cd(re, im);
            }
            const CVector x = wt * s;
            second_moment += x * x.adjoint();
        }
        second_moment /= static_cast<double>(signal_draws);
    }

    // Echo operator G(omega) = sum_m alpha_m b(theta_m, phi_m) a(theta_m, phi_m)^H.
    struct Params {
        RVector theta, phi;
        CVector alpha;
    };
    Params base{RVector(m), RVector(m), steering.rcs};
    for (int i = 0; i < m; ++i) {
        base.theta(i) = scene.targets[static_cast<std::size_t>(i)].azimuth;
        base.phi(i) = scene.targets[static_cast<std::size_t>(i)].elevation;
    }
    auto echo = [&](const Params& p) {
        CMatrix g = CMatrix::Zero(scene.num_rx(), scene.num_tx());
        for (int i = 0; i < m; ++i)
            g += p.alpha(i) * steering_vector(scene.rx_geometry, p.theta(i), p.phi(i)) *
                 steering_vector(scene.tx_geometry, p.theta(i), p.phi(i)).adjoint();
        return g;
    };
    auto shifted = [&](int index, double delta) {
        Params p = base;
        const int block = index / std::max(m, 1);
        const int target = index % std::max(m, 1);
        switch (block) {
            case 0: p.theta(target) += delta; break;
            case 1: p.phi(target) += delta; break;
            case 2: p.alpha(target) += delta; break;
            default: p.alpha(target) += cd(0.0, delta); break;
        }
        return p;
    };

    std::vector<CMatrix> partials;
    partials.reserve(static_cast<std::size_t>(4 * m));
    for (int i = 0; i < 4 * m; ++i)
        partials.push_back((echo(shifted(i, step)) - echo(shifted(i, -step))) / (2.0 * step));

    RMatrix f(4 * m, 4 * m);
    for (int i = 0; i < 4 * m; ++i)
        for (int j = 0; j < 4 * m; ++j)
            f(i, j) = std::real((partials[static_cast<std::size_t>(i)].adjoint() *
                                 partials[static_cast<std::size_t>(j)] * second_moment)
                                    .trace());
    return (2.0 * scene.slots / scene.noise_radar) * f;
}

void VerificationReport::add(std::string name, double value, double threshold, bool pass, std::string detail) {
    records.push_back({std::move(name), value, threshold, pass, std::move(detail)});
}

bool VerificationReport::passed() const {
    return std::all_of(records.begin(), records.end(), [](const CheckRecord& r) { return r.pass; });
}

int VerificationReport::failures() const {
    return static_cast<int>(std::count_if(records.begin(), records.end(), [](const CheckRecord& r) { return !r.pass; }));
}

}  // namespace isac

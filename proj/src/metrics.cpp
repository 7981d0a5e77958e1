#include "isac/metrics.hpp"

#include "isac/model.hpp"

#include <cmath>
#include <string>

namespace isac {

CMatrix Beamformer::stacked() const {
    CMatrix w(comm.rows(), comm.cols() + sensing.cols());
    w << comm, sensing;
    return w;
}

bool Beamformer::on_sphere(double rel_tol) const {
    return std::abs(power() - power_budget) <= rel_tol * power_budget;
}

Beamformer Beamformer::from_stacked(const CMatrix& w, int users, double power_budget) {
    if (users < 0 || users > w.cols()) throw std::invalid_argument("user count exceeds beamformer columns");
    Beamformer b;
    b.comm = w.leftCols(users);
    b.sensing = w.rightCols(w.cols() - users);
    b.power_budget = power_budget;
    return b;
}

void Beamformer::validate(const Scene& scene) const {
    if (comm.rows() != scene.num_tx() || sensing.rows() != scene.num_tx())
        throw std::invalid_argument("beamformer must have N_t rows");
    if (comm.cols() != scene.num_users())
        throw std::invalid_argument("beamformer must have one communication column per user");
    if (!comm.allFinite() || !sensing.allFinite())
        throw std::invalid_argument("beamformer has non-finite entries");
}

void Weights::validate() const {
    if (!(comm >= 0.0) || !(sensing >= 0.0) || !std::isfinite(comm) || !std::isfinite(sensing))
        throw std::invalid_argument("weights must be finite and nonnegative");
    if (comm == 0.0 && sensing == 0.0) throw std::invalid_argument("weights cannot both be zero");
}

double user_rate(const Scene& scene, const Beamformer& w, int k) {
    w.validate(scene);
    if (k < 0 || k >= scene.num_users()) throw std::invalid_argument("user index out of range");
    const CVector hk = scene.channels.col(k);
    const double desired = std::norm(hk.dot(w.comm.col(k)));
    const double total = (hk.adjoint() * w.comm).squaredNorm() + (hk.adjoint() * w.sensing).squaredNorm();
    return std::log1p(desired / (total - desired + scene.noise_comm(k)));
}

double sum_rate(const Scene& scene, const Beamformer& w) {
    double total = 0.0;
    for (int k = 0; k < scene.num_users(); ++k) total += user_rate(scene, w, k);
    return total;
}

FisherInfo fim(const Scene& scene, const SteeringSet& steering, const Beamformer& w) {
    w.validate(scene);
    return {core::fisher_matrix(make_model(scene, steering), w.stacked())};
}

double default_fisher_jitter(const FisherInfo& fi) {
    const auto n = fi.matrix.rows();
    return n == 0 ? 0.0 : 1e-10 * fi.matrix.trace() / static_cast<double>(n);
}

RMatrix fisher_inverse(const FisherInfo& fi, std::optional<double> jitter) {
    const auto n = fi.matrix.rows();
    if (n == 0) return RMatrix(0, 0);
    if (!fi.matrix.allFinite()) throw SingularFisherError("FIM has non-finite entries");

    auto try_invert = [&](double shift) -> std::optional<RMatrix> {
        const RMatrix shifted = fi.matrix + shift * RMatrix::Identity(n, n);
        Eigen::LLT<RMatrix> llt(shifted);
        if (llt.info() != Eigen::Success) return std::nullopt;
        // LLT only looks at the lower triangle; reject factors with a
        // vanishing pivot, which signal an unidentifiable parameter.
        const RVector diag = llt.matrixLLT().diagonal();
        if (!(diag.minCoeff() > 0.0) || diag.minCoeff() <= 1e-7 * diag.maxCoeff()) return std::nullopt;
        return RMatrix(llt.solve(RMatrix::Identity(n, n)));
    };

    if (jitter) {
        if (!(*jitter >= 0.0)) throw std::invalid_argument("jitter must be nonnegative");
        if (auto inv = try_invert(*jitter)) return *inv;
    } else {
        if (auto inv = try_invert(0.0)) return *inv;
        const double shift = default_fisher_jitter(fi);
        if (shift > 0.0)
            if (auto inv = try_invert(shift)) return *inv;
    }
    throw SingularFisherError("FIM is singular (trace " + std::to_string(fi.matrix.trace()) + ")");
}

double crlb_trace(const FisherInfo& fi, std::optional<double> jitter) {
    return fisher_inverse(fi, jitter).trace();
}

double objective(const Scene& scene, const SteeringSet& steering, const Beamformer& w, const Weights& weights) {
    weights.validate();
    double value = 0.0;
    if (weights.comm != 0.0) value += weights.comm * sum_rate(scene, w);
    if (weights.sensing != 0.0) value -= weights.sensing * crlb_trace(fim(scene, steering, w));
    return value;
}

}  // namespace isac

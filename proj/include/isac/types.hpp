#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace isac {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Base class for numerical failures raised by the library. Input validation
/// problems are reported with std::invalid_argument instead.
class IsacError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The Fisher information matrix could not be factorized even after jitter,
/// usually because two targets coincide or the beamformer is zero.
class SingularFisherError : public IsacError {
public:
    using IsacError::IsacError;
};

/// The low-dimensional basis [H, A, dA/dtheta, dA/dphi] has a Gram matrix that
/// cannot be factorized even after jitter.
class RankDeficientBasisError : public IsacError {
public:
    using IsacError::IsacError;
};

/// Raised by solvers in strict mode when the iteration cap is reached before
/// the objective change falls below tolerance.
class NonConvergenceError : public IsacError {
public:
    using IsacError::IsacError;
};

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace isac

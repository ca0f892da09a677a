#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>

#include "types.hpp"

namespace pinn_spectral {

/// Jitter ladder for symmetric positive (semi-)definite solves: the matrix is
/// tried as given, then with tau * I added for tau = 1e-12 * trace/n, growing by
/// a factor of 10 up to 1e-6 * trace/n.
struct JitterPolicy {
    double start = 1e-12;
    double stop = 1e-6;
    double factor = 10.0;
};

/// Cholesky factor of A + jitter * I.
class SpdSolver {
public:
    SpdSolver() = default;

    SpdSolver(const Matrix& a, const std::string& what = "SPD solve", JitterPolicy policy = {}) {
        if (a.rows() != a.cols() || a.rows() == 0) throw DomainError(what + ": matrix must be square and non-empty");
        if (!a.allFinite()) throw DomainError(what + ": matrix has non-finite entries");
        const double n = static_cast<double>(a.rows());
        const double scale = std::max(std::abs(a.trace()) / n, std::numeric_limits<double>::min());
        llt_.compute(a);
        if (llt_.info() == Eigen::Success) return;
        for (double rel = policy.start; rel <= policy.stop * (1.0 + 1e-9); rel *= policy.factor) {
            jitter_ = rel * scale;
            Matrix shifted = a;
            shifted.diagonal().array() += jitter_;
            llt_.compute(shifted);
            if (llt_.info() == Eigen::Success) return;
        }
        Eigen::LDLT<Matrix> ldlt(a);
        const double rcond = ldlt.rcond();
        throw IllConditionedError(what + ": factorization failed after jitter escalation",
                                  rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity());
    }

    double jitter() const { return jitter_; }
    Eigen::Index size() const { return llt_.matrixLLT().rows(); }

    template <typename Rhs>
    auto solve(const Eigen::MatrixBase<Rhs>& b) const {
        return llt_.solve(b);
    }

    /// 1 / (reciprocal condition number estimate) of the factored matrix.
    double condition_estimate() const {
        const double r = llt_.rcond();
        return r > 0.0 ? 1.0 / r : std::numeric_limits<double>::infinity();
    }

private:
    Eigen::LLT<Matrix> llt_;
    double jitter_ = 0.0;
};

/// Lower-triangle-to-full symmetrization; throws if the asymmetry exceeds tol * max|a|.
inline Matrix symmetrized(const Matrix& a, double tol, const std::string& what) {
    const double scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    if (asym > tol * scale) {
        throw DomainError(what + ": matrix not symmetric (relative asymmetry " + std::to_string(asym / scale) + ")");
    }
    return 0.5 * (a + a.transpose());
}

}  // namespace pinn_spectral

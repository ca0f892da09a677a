#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>

#include "gpr.hpp"
#include "linalg.hpp"
#include "operators.hpp"

namespace pinn_spectral {

/// How L is applied to K on a grid: closed-form kernel derivatives, or the
/// finite-difference matrix D from both sides (D K D^T). Auto picks the former
/// for the Gaussian-type families.
enum class OperatorRealization { Auto, Analytic, Grid };

inline OperatorRealization operator_realization_from_string(const std::string& s) {
    if (s == "auto") return OperatorRealization::Auto;
    if (s == "analytic") return OperatorRealization::Analytic;
    if (s == "grid") return OperatorRealization::Grid;
    throw DomainError("unknown operator realization '" + s + "'");
}

inline OperatorRealization resolve(OperatorRealization r, const KernelSpec& spec) {
    if (r != OperatorRealization::Auto) return r;
    return detail::is_gaussian_type(spec.family) ? OperatorRealization::Analytic : OperatorRealization::Grid;
}

/// Prior covariance conditioned on noisy zero data on a weighted boundary set:
///   Khat(x, y) = K(x, y) - K(x, Z) M K(Z, y),
///   M = V^{1/2} (V^{1/2} K_ZZ V^{1/2} + eta^{-1} I)^{-1} V^{1/2},
/// with V the boundary probability weights. eta = 0 leaves K unchanged.
class BoundaryCorrectedKernel {
public:
    BoundaryCorrectedKernel(KernelSpec spec, PointSet boundary, Vector weights, double eta)
        : spec_(spec), boundary_(std::move(boundary)), weights_(std::move(weights)), eta_(eta) {
        spec_.validate();
        if (!(eta_ >= 0.0) || !std::isfinite(eta_)) throw DomainError("boundary eta must be finite and >= 0");
        if (weights_.size() != boundary_.cols()) throw DomainError("one weight per boundary point required");
        if (eta_ > 0.0 && boundary_.cols() == 0) throw DomainError("eta_boundary > 0 needs boundary points");
        const Eigen::Index m = boundary_.cols();
        if (eta_ == 0.0 || m == 0) return;
        const Vector sv = weights_.cwiseSqrt();
        Matrix inner = sv.asDiagonal() * eval_gram(spec_, boundary_) * sv.asDiagonal();
        inner.diagonal().array() += 1.0 / eta_;
        const SpdSolver solver(inner, "boundary correction");
        m_ = sv.asDiagonal() * solver.solve(Matrix(sv.asDiagonal()));
        m_ = 0.5 * (m_ + m_.transpose());
    }

    bool trivial() const { return m_.size() == 0; }
    const Matrix& correction() const { return m_; }
    const KernelSpec& spec() const { return spec_; }
    const PointSet& boundary() const { return boundary_; }

    /// [L_left Khat L_right^dagger](rows, cols); null operators are identities.
    Matrix gram(const LinearDiffOp* left, const LinearDiffOp* right, const PointSet& rows, const PointSet& cols) const {
        Matrix out = operator_gram(spec_, left, right, rows, cols);
        if (trivial()) return out;
        const Matrix lk = operator_gram(spec_, left, nullptr, rows, boundary_);
        const Matrix kr = (left == right && &rows == &cols) ? Matrix(lk.transpose())
                                                            : operator_gram(spec_, nullptr, right, boundary_, cols);
        out.noalias() -= lk * m_ * kr;
        return out;
    }

    /// M g: the boundary weights that turn boundary data into its correction.
    Vector response(const Vector& g) const {
        if (g.size() != boundary_.cols()) throw DomainError("boundary data has wrong length");
        if (trivial()) return Vector::Zero(g.size());
        return m_ * g;
    }

private:
    KernelSpec spec_;
    PointSet boundary_;
    Vector weights_;
    double eta_;
    Matrix m_;
};

inline BoundaryCorrectedKernel boundary_corrected_kernel(const KernelSpec& spec, const DomainGrid& grid,
                                                         double eta_boundary) {
    return {spec, grid.boundary, grid.boundary_measure_weights(), eta_boundary};
}

/// Khat on the bulk nodes of the grid.
inline Matrix compute_khat(const KernelSpec& spec, const DomainGrid& grid, double eta_boundary) {
    return boundary_corrected_kernel(spec, grid, eta_boundary).gram(nullptr, nullptr, grid.bulk, grid.bulk);
}

/// [L Khat L^dagger] on the bulk nodes.
inline Matrix lkhatl_matrix(const LinearDiffOp& op, const KernelSpec& spec, const DomainGrid& grid,
                            double eta_boundary, OperatorRealization how = OperatorRealization::Auto) {
    const auto bck = boundary_corrected_kernel(spec, grid, eta_boundary);
    if (resolve(how, spec) == OperatorRealization::Analytic) return bck.gram(&op, &op, grid.bulk, grid.bulk);
    // D F (D F)^T with Khat = F F^T, so rounding in Khat cannot turn into
    // negative eigenvalues amplified by |D|^2.
    const SparseMatrix d = differentiation_matrix(op, grid);
    Eigen::SelfAdjointEigenSolver<Matrix> es(bck.gram(nullptr, nullptr, grid.bulk, grid.bulk));
    if (es.info() != Eigen::Success) throw IllConditionedError("lkhatl_matrix: eigensolver failed", 0.0);
    const Matrix df = d * (es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal());
    Matrix out = df * df.transpose();
    return 0.5 * (out + out.transpose());
}

/// Eigenpairs of an integral operator under the bulk probability measure.
/// eigfuns.col(k) is orthonormal in the weighted inner product sum_i w_i f_i g_i.
struct SpectralDecomposition {
    Vector eigvals;
    Matrix eigfuns;
    Vector weights;
    Eigen::Index retained = 0;  // modes with eigval >= 1e-12 * eigvals[0]
    Vector coeffs;              // projections of the attached source
    double source_residual = 0.0;

    Eigen::Index size() const { return eigvals.size(); }

    Vector project(const Vector& f) const {
        if (f.size() != weights.size()) throw DomainError("grid function has wrong length");
        return eigfuns.transpose() * (weights.asDiagonal() * f);
    }

    double inner(const Vector& f, const Vector& g) const { return (weights.array() * f.array() * g.array()).sum(); }

    /// Stores c_k = <phi_k, src> and the weighted norm of src outside the retained span.
    void attach_source(const Vector& src) {
        coeffs = project(src);
        const Vector kept = eigfuns.leftCols(retained) * coeffs.head(retained);
        const Vector rest = src - kept;
        source_residual = std::sqrt(std::max(0.0, inner(rest, rest)));
    }
};

/// Nystrom eigendecomposition of a symmetric kernel matrix `a` on nodes with
/// probability weights w: eigensolve W^{1/2} a W^{1/2}, map back by W^{-1/2}.
inline SpectralDecomposition nystrom(const Matrix& a, const Vector& w) {
    if (a.rows() != a.cols() || a.rows() != w.size()) throw DomainError("nystrom: size mismatch");
    if ((w.array() <= 0.0).any()) throw DomainError("nystrom: weights must be positive");
    const Vector sw = w.cwiseSqrt();
    const Matrix m = symmetrized(sw.asDiagonal() * a * sw.asDiagonal(), 1e-8, "nystrom");
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success) throw IllConditionedError("nystrom: eigensolver failed", 0.0);
    const Eigen::Index n = m.rows();
    SpectralDecomposition dec;
    dec.weights = w;
    dec.eigvals = es.eigenvalues().reverse();
    dec.eigfuns = sw.cwiseInverse().asDiagonal() * es.eigenvectors().rowwise().reverse();
    const double top = dec.eigvals[0];
    if (top > 0.0 && dec.eigvals[n - 1] < -1e-10 * top) {
        throw DomainError("nystrom: operator has a negative eigenvalue " + std::to_string(dec.eigvals[n - 1]) +
                          " below -1e-10 * leading eigenvalue");
    }
    dec.retained = 0;
    while (dec.retained < n && dec.eigvals[dec.retained] >= 1e-12 * top && top > 0.0) ++dec.retained;
    return dec;
}

inline SpectralDecomposition eig_lkhatl(const LinearDiffOp& op, const KernelSpec& spec, const DomainGrid& grid,
                                        double eta_boundary, OperatorRealization how = OperatorRealization::Auto) {
    return nystrom(lkhatl_matrix(op, spec, grid, eta_boundary, how), grid.measure_weights());
}

/// Eigenbasis of K itself under the bulk measure.
inline SpectralDecomposition eig_kernel(const KernelSpec& spec, const DomainGrid& grid) {
    return nystrom(eval_gram(spec, grid.bulk), grid.measure_weights());
}

/// phi_hat = phi - eta_d int [L Khat](x, z) g(z) dmu_d(z) = phi - [LK](x, Z) M g.
inline Vector augmented_source(const ProblemData& problem, const DomainGrid& grid, double eta_boundary,
                               OperatorRealization how = OperatorRealization::Auto) {
    Vector phi = problem.source ? grid.evaluate(problem.source) : Vector::Zero(grid.size());
    if (eta_boundary == 0.0 || grid.boundary_size() == 0 || !problem.boundary) return phi;
    const auto bck = boundary_corrected_kernel(problem.kernel, grid, eta_boundary);
    const Vector u = bck.response(grid.evaluate_boundary(problem.boundary));
    if (resolve(how, problem.kernel) == OperatorRealization::Analytic) {
        phi -= operator_gram(problem.kernel, &problem.op, nullptr, grid.bulk, grid.boundary) * u;
    } else {
        phi -= differentiation_matrix(problem.op, grid) * (eval_gram(problem.kernel, grid.bulk, grid.boundary) * u);
    }
    return phi;
}

/// Lf - phi = -sum_k c_k / (1 + lambda_k eta) phi_k. Modes below the truncation
/// threshold pass with unit weight.
inline Vector discrepancy_filter(const SpectralDecomposition& dec, const Vector& phi_hat, double eta_bulk) {
    if (!(eta_bulk >= 0.0) || !std::isfinite(eta_bulk)) throw DomainError("discrepancy_filter: eta must be >= 0");
    const Vector c = dec.project(phi_hat);
    const Eigen::Index r = dec.retained;
    const Vector kept = dec.eigfuns.leftCols(r) * c.head(r);
    Vector filtered = phi_hat - kept;
    Vector scaled = c.head(r);
    for (Eigen::Index k = 0; k < r; ++k) scaled[k] /= 1.0 + dec.eigvals[k] * eta_bulk;
    filtered += dec.eigfuns.leftCols(r) * scaled;
    return -filtered;
}

/// Same quantity by a linear solve: -eta^{-1} (eta^{-1} I + A W)^{-1} phi_hat.
inline Vector discrepancy_filter_direct(const Matrix& lkhatl, const Vector& weights, const Vector& phi_hat,
                                        double eta_bulk) {
    if (!(eta_bulk >= 0.0) || !std::isfinite(eta_bulk)) throw DomainError("discrepancy_filter: eta must be >= 0");
    if (eta_bulk == 0.0) return -phi_hat;
    Matrix a = lkhatl * weights.asDiagonal();
    a.diagonal().array() += 1.0 / eta_bulk;
    return -(a.partialPivLu().solve(phi_hat)) / eta_bulk;
}

/// Q_n = sum_k c_k^2 / (1 + lambda_k eta) / sum_k c_k^2 over the attached source.
inline double figure_of_merit_qn(const SpectralDecomposition& dec, double eta_bulk) {
    if (dec.coeffs.size() != dec.size()) throw DomainError("figure_of_merit_qn: no source attached");
    if (!(eta_bulk >= 0.0) || !std::isfinite(eta_bulk)) throw DomainError("figure_of_merit_qn: eta must be >= 0");
    const double total = dec.coeffs.squaredNorm();
    if (!(total > 0.0)) throw DomainError("figure_of_merit_qn: augmented source is zero");
    double num = 0.0;
    for (Eigen::Index k = 0; k < dec.size(); ++k) {
        const double lam = k < dec.retained ? dec.eigvals[k] : 0.0;
        num += dec.coeffs[k] * dec.coeffs[k] / (1.0 + lam * eta_bulk);
    }
    return num / total;
}

/// A_0 .. A_n with A_k = sum_{j<k} <phi_j, f>^2 / <f, f>.
inline Vector cumulative_spectral_curve(const SpectralDecomposition& dec, const Vector& f) {
    const double norm2 = dec.inner(f, f);
    if (!(norm2 > 0.0)) throw DomainError("cumulative_spectral: zero function");
    const Vector c = dec.project(f);
    Vector a(dec.size() + 1);
    a[0] = 0.0;
    for (Eigen::Index k = 0; k < dec.size(); ++k) a[k + 1] = a[k] + c[k] * c[k] / norm2;
    return a;
}

inline double cumulative_spectral(const SpectralDecomposition& dec, const Vector& f, Eigen::Index k) {
    if (k < 0 || k > dec.size()) throw DomainError("cumulative_spectral: k out of range");
    return cumulative_spectral_curve(dec, f)[k];
}

/// Smallest k with A_k >= level, or -1 if never reached.
inline Eigen::Index spectral_crossing(const Vector& curve, double level) {
    for (Eigen::Index k = 0; k < curve.size(); ++k)
        if (curve[k] >= level) return k;
    return -1;
}

}  // namespace pinn_spectral

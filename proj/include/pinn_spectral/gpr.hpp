#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "kernels.hpp"
#include "linalg.hpp"
#include "operators.hpp"

namespace pinn_spectral {

using ScalarField = std::function<double(PointRef)>;

/// A linear PDE L[f] = phi on the bulk, f = g on the boundary, with a GP prior.
struct ProblemData {
    ScalarField source;
    ScalarField boundary;
    LinearDiffOp op;
    KernelSpec kernel;
};

/// Collocation points with their noise levels; eta = n / sigma^2 is derived.
struct CollocationSet {
    PointSet bulk;
    PointSet boundary;
    double sigma2_bulk = 1.0;
    double sigma2_boundary = 1.0;

    Eigen::Index n_bulk() const { return bulk.cols(); }
    Eigen::Index n_boundary() const { return boundary.cols(); }
    double eta_bulk() const { return static_cast<double>(n_bulk()) / sigma2_bulk; }
    double eta_boundary() const { return static_cast<double>(n_boundary()) / sigma2_boundary; }

    int dim() const { return static_cast<int>(n_bulk() > 0 ? bulk.rows() : boundary.rows()); }

    void validate() const {
        if (n_bulk() + n_boundary() < 1) throw DomainError("CollocationSet: need at least one point");
        if (n_bulk() > 0 && n_boundary() > 0 && bulk.rows() != boundary.rows()) {
            throw DomainError("CollocationSet: bulk and boundary dimensions differ");
        }
        if (n_bulk() > 0) require_positive(sigma2_bulk, "sigma2_bulk");
        if (n_boundary() > 0) require_positive(sigma2_boundary, "sigma2_boundary");
        if (!bulk.allFinite() || !boundary.allFinite()) throw DomainError("CollocationSet: non-finite point");
    }
};

enum class SamplingScheme {
    Iid,        // independent uniform draws
    Stratified  // one uniform draw per equal-width stratum along the first axis
};

inline SamplingScheme sampling_scheme_from_string(const std::string& s) {
    if (s == "iid") return SamplingScheme::Iid;
    if (s == "stratified") return SamplingScheme::Stratified;
    throw DomainError("unknown sampling scheme '" + s + "'");
}

inline const char* to_string(SamplingScheme s) { return s == SamplingScheme::Iid ? "iid" : "stratified"; }

/// Uniform collocation draws on the bulk and on the data faces of `geometry`.
/// Boundary faces are picked with probability proportional to their measure.
inline CollocationSet sample_collocation(const BoxGeometry& geometry, Eigen::Index n_bulk, Eigen::Index n_boundary,
                                         std::uint64_t seed, double sigma2_bulk = 1.0, double sigma2_boundary = 1.0,
                                         SamplingScheme scheme = SamplingScheme::Iid) {
    geometry.validate();
    if (n_bulk < 0 || n_boundary < 0 || n_bulk + n_boundary < 1) {
        throw DomainError("sample_collocation: need n_bulk + n_boundary >= 1");
    }
    if (n_boundary > 0 && geometry.faces.empty()) throw DomainError("sample_collocation: geometry has no data faces");
    const int d = geometry.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    CollocationSet c;
    c.sigma2_bulk = sigma2_bulk;
    c.sigma2_boundary = sigma2_boundary;
    c.bulk.resize(d, n_bulk);
    for (Eigen::Index i = 0; i < n_bulk; ++i) {
        for (int a = 0; a < d; ++a) {
            double u = unit(rng);
            if (a == 0 && scheme == SamplingScheme::Stratified) u = (static_cast<double>(i) + u) / n_bulk;
            c.bulk(a, i) = geometry.lo[a] + u * (geometry.hi[a] - geometry.lo[a]);
        }
    }
    std::vector<double> face_w;
    for (const auto& f : geometry.faces) face_w.push_back(geometry.face_measure(f));
    std::discrete_distribution<std::size_t> pick(face_w.begin(), face_w.end());
    c.boundary.resize(d, n_boundary);
    for (Eigen::Index i = 0; i < n_boundary; ++i) {
        const auto& f = geometry.faces[geometry.faces.size() == 1 ? 0 : pick(rng)];
        for (int a = 0; a < d; ++a) {
            if (a == f.axis) {
                c.boundary(a, i) = f.upper ? geometry.hi[a] : geometry.lo[a];
            } else {
                c.boundary(a, i) = geometry.lo[a] + unit(rng) * (geometry.hi[a] - geometry.lo[a]);
            }
        }
    }
    return c;
}

/// Joint prior covariance of (L f(bulk), f(boundary)), noise diagonal and targets.
struct KpinnSystem {
    Matrix k_pinn;
    Vector noise;
    Vector y;
};

inline KpinnSystem assemble_kpinn(const ProblemData& problem, const CollocationSet& colloc) {
    colloc.validate();
    problem.kernel.validate();
    const Eigen::Index nb = colloc.n_bulk();
    const Eigen::Index nd = colloc.n_boundary();
    const LinearDiffOp* L = &problem.op;
    KpinnSystem s;
    s.k_pinn.resize(nb + nd, nb + nd);
    s.noise.resize(nb + nd);
    s.y.resize(nb + nd);
    if (nb > 0) {
        if (!problem.source) throw DomainError("assemble_kpinn: problem has no source term");
        s.k_pinn.topLeftCorner(nb, nb) = operator_gram(problem.kernel, L, L, colloc.bulk, colloc.bulk);
        s.noise.head(nb).setConstant(colloc.sigma2_bulk);
        for (Eigen::Index i = 0; i < nb; ++i) s.y[i] = problem.source(colloc.bulk.col(i));
    }
    if (nd > 0) {
        if (!problem.boundary) throw DomainError("assemble_kpinn: problem has no boundary data");
        s.k_pinn.bottomRightCorner(nd, nd) = eval_gram(problem.kernel, colloc.boundary, colloc.boundary);
        s.noise.tail(nd).setConstant(colloc.sigma2_boundary);
        for (Eigen::Index i = 0; i < nd; ++i) s.y[nb + i] = problem.boundary(colloc.boundary.col(i));
    }
    if (nb > 0 && nd > 0) {
        s.k_pinn.topRightCorner(nb, nd) = operator_gram(problem.kernel, L, nullptr, colloc.bulk, colloc.boundary);
        s.k_pinn.bottomLeftCorner(nd, nb) = s.k_pinn.topRightCorner(nb, nd).transpose();
    }
    if (!s.y.allFinite()) throw DomainError("assemble_kpinn: source or boundary data is not finite");
    return s;
}

/// Posterior mean of the GP conditioned on the collocation data.
class GprModel {
public:
    GprModel(ProblemData problem, CollocationSet colloc) : problem_(std::move(problem)), colloc_(std::move(colloc)) {
        KpinnSystem s = assemble_kpinn(problem_, colloc_);
        s.k_pinn.diagonal() += s.noise;
        const SpdSolver solver(s.k_pinn, "gpr_predict");
        jitter_ = solver.jitter();
        alpha_ = solver.solve(s.y);
    }

    /// Covariances between f(x*) and the observed vector (L f(bulk), f(boundary)).
    Matrix cross_covariance(const PointSet& x_star) const {
        const Eigen::Index nb = colloc_.n_bulk();
        const Eigen::Index nd = colloc_.n_boundary();
        Matrix k(x_star.cols(), nb + nd);
        if (nb > 0) k.leftCols(nb) = operator_gram(problem_.kernel, nullptr, &problem_.op, x_star, colloc_.bulk);
        if (nd > 0) k.rightCols(nd) = eval_gram(problem_.kernel, x_star, colloc_.boundary);
        return k;
    }

    Vector predict(const PointSet& x_star) const {
        if (x_star.cols() == 0) return Vector();
        if (x_star.rows() != colloc_.dim()) throw DomainError("gpr_predict: query dimension mismatch");
        return cross_covariance(x_star) * alpha_;
    }

    /// Posterior mean of L f at the given points.
    Vector predict_operator(const PointSet& x_star) const {
        const Eigen::Index nb = colloc_.n_bulk();
        const Eigen::Index nd = colloc_.n_boundary();
        Matrix k(x_star.cols(), nb + nd);
        const LinearDiffOp* L = &problem_.op;
        if (nb > 0) k.leftCols(nb) = operator_gram(problem_.kernel, L, L, x_star, colloc_.bulk);
        if (nd > 0) k.rightCols(nd) = operator_gram(problem_.kernel, L, nullptr, x_star, colloc_.boundary);
        return k * alpha_;
    }

    const Vector& weights() const { return alpha_; }
    double jitter() const { return jitter_; }

private:
    ProblemData problem_;
    CollocationSet colloc_;
    Vector alpha_;
    double jitter_ = 0.0;
};

inline Vector gpr_predict(const ProblemData& problem, const CollocationSet& colloc, const PointSet& x_star) {
    return GprModel(problem, colloc).predict(x_star);
}

}  // namespace pinn_spectral

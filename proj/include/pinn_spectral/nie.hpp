#pragma once

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "gpr.hpp"
#include "linalg.hpp"
#include "operators.hpp"

namespace pinn_spectral {

/// Half-line problem f' = 0 on x > 0, f(0) = g0, with the cosine kernel of length l.
/// eta_bulk and eta_boundary are in Green's-function units (see toy_config_from_collocation).
struct ToyConfig {
    double l = 1.0;
    double g0 = 2.5;
    double eta_bulk = 1024.0;
    double eta_boundary = 8192.0;
    double x_max = 512.0;
    double k_max = 0.0;  // 0 selects max(12 / l, 20 kappa)
    int n_k = 20001;

    double kappa() const { return 1.0 / std::sqrt(0.5 * l * l + eta_bulk); }

    double effective_k_max() const { return k_max > 0.0 ? k_max : std::max(12.0 / l, 20.0 * kappa()); }

    void validate() const {
        require_positive(l, "ToyConfig.l");
        require_positive(x_max, "ToyConfig.x_max");
        if (!std::isfinite(g0)) throw DomainError("ToyConfig.g0 must be finite");
        if (!(eta_bulk >= 0.0) || !std::isfinite(eta_bulk)) throw DomainError("ToyConfig.eta_bulk must be >= 0");
        if (!(eta_boundary >= 0.0) || !std::isfinite(eta_boundary)) {
            throw DomainError("ToyConfig.eta_boundary must be >= 0");
        }
        if (k_max != 0.0 && !(k_max * l >= 12.0)) throw DomainError("ToyConfig: k_max * l must be >= 12");
        if (n_k < 3) throw DomainError("ToyConfig.n_k must be >= 3");
    }
};

/// Scale of the cosine kernel's half-line spectrum, sigma_a2 sqrt(2 pi) / (2 sigma_w).
inline double toy_spectral_scale(const KernelSpec& spec) {
    return spec.sigma_a2 * std::sqrt(2.0 * std::numbers::pi) / (2.0 * std::sqrt(spec.sigma_w2));
}

/// Toy parameters for n_bulk points with noise sigma2_bulk drawn uniformly on
/// [0, x_max] and n_boundary points with noise sigma2_boundary at the origin.
/// The data densities per unit length, n/(sigma2 x_max) and n_b/sigma2_b, are
/// multiplied by the spectral scale of the kernel.
inline ToyConfig toy_config_from_collocation(const KernelSpec& spec, double n_bulk, double sigma2_bulk,
                                             double n_boundary, double sigma2_boundary, double x_max, double g0) {
    if (spec.family != KernelFamily::CosineFeature) {
        throw UnsupportedFamilyError("toy problem is defined for the CosineFeature kernel");
    }
    require_positive(sigma2_bulk, "sigma2_bulk");
    require_positive(sigma2_boundary, "sigma2_boundary");
    require_positive(x_max, "x_max");
    const double a = toy_spectral_scale(spec);
    ToyConfig cfg;
    cfg.l = 1.0 / std::sqrt(spec.sigma_w2);
    cfg.g0 = g0;
    cfg.x_max = x_max;
    cfg.eta_bulk = a * n_bulk / (sigma2_bulk * x_max);
    cfg.eta_boundary = a * n_boundary / sigma2_boundary;
    return cfg;
}

/// G(x, x') = (1/pi) int cos(kx) cos(kx') / (exp((kl)^2/2) + eta k^2) dk over
/// [-k_max, k_max]; trapezoid rule with interval halving until the relative
/// change is below 1e-8.
inline double greens_function_toy(const ToyConfig& cfg, double x, double xp) {
    cfg.validate();
    if (!(x >= 0.0) || !(xp >= 0.0) || !std::isfinite(x) || !std::isfinite(xp)) {
        throw DomainError("greens_function_toy: arguments must be finite and >= 0");
    }
    const double k_max = cfg.effective_k_max();
    const double ll = cfg.l * cfg.l;
    auto integrand = [&](double k) {
        return std::cos(k * x) * std::cos(k * xp) / (std::exp(0.5 * k * k * ll) + cfg.eta_bulk * k * k);
    };
    // Even integrand: 2 * int_0^k_max.
    long intervals = (cfg.n_k - 1) / 2;
    double h = k_max / static_cast<double>(intervals);
    double sum = 0.5 * (integrand(0.0) + integrand(k_max));
    double abs_sum = std::abs(sum);
    for (long i = 1; i < intervals; ++i) {
        const double v = integrand(i * h);
        sum += v;
        abs_sum += std::abs(v);
    }
    double estimate = h * sum;
    constexpr int kMaxRefinements = 10;
    for (int r = 0; r < kMaxRefinements; ++r) {
        double mid = 0.0;
        double abs_mid = 0.0;
        for (long i = 0; i < intervals; ++i) {
            const double v = integrand((i + 0.5) * h);
            mid += v;
            abs_mid += std::abs(v);
        }
        sum += mid;
        abs_sum += abs_mid;
        intervals *= 2;
        h *= 0.5;
        const double refined = h * sum;
        const double scale = h * abs_sum;
        const double change = std::abs(refined - estimate);
        estimate = refined;
        if (change <= 1e-8 * std::max(std::abs(refined), 1e-8 * scale)) return 2.0 * estimate / std::numbers::pi;
    }
    throw QuadratureError("greens_function_toy: no convergence after refinement cap");
}

/// (kappa/2)(exp(-kappa|x-x'|) + exp(-kappa|x+x'|)), kappa = 1/sqrt(l^2/2 + eta).
inline double greens_single_pole(const ToyConfig& cfg, double x, double xp) {
    const double k = cfg.kappa();
    return 0.5 * k * (std::exp(-k * std::abs(x - xp)) + std::exp(-k * std::abs(x + xp)));
}

/// The single-pole form is reliable when kappa l is small.
inline bool single_pole_regime(const ToyConfig& cfg) { return cfg.kappa() * cfg.l <= 0.3; }

struct ToyPrediction {
    Vector f;
    double delta = 0.0;
    double g00 = 0.0;
};

/// f(x) = Delta G(x, 0) with Delta = eta_b g0 / (1 + G(0,0) eta_b).
inline ToyPrediction toy_predict(const ToyConfig& cfg, const Vector& x_star) {
    cfg.validate();
    for (Eigen::Index i = 0; i < x_star.size(); ++i) {
        if (!(x_star[i] >= 0.0)) throw DomainError("toy_predict: query points must be >= 0");
    }
    ToyPrediction p;
    p.g00 = greens_function_toy(cfg, 0.0, 0.0);
    p.delta = cfg.eta_boundary * cfg.g0 / (1.0 + p.g00 * cfg.eta_boundary);
    p.f.resize(x_star.size());
    parallel_for(0, x_star.size(), [&](long i) { p.f[i] = p.delta * greens_function_toy(cfg, x_star[i], 0.0); });
    return p;
}

struct NieSolution {
    DomainGrid grid;
    Vector f0_vals;
    double delta = std::numeric_limits<double>::quiet_NaN();
    double residual_norm = 0.0;
    double jitter = 0.0;
};

namespace detail {

// Pieces of the discretized action on a grid: D realizes L, W and V are the
// bulk/boundary probability weights, S selects boundary nodes.
struct NieDiscretization {
    Matrix k;  // K + jitter I
    SparseMatrix d;
    Vector w;
    Vector v;
    Vector phi;
    Vector g;
    std::vector<Eigen::Index> boundary_nodes;
    double jitter = 0.0;
    SpdSolver prior;
};

inline NieDiscretization discretize_nie(const ProblemData& problem, const DomainGrid& grid, bool need_source = true) {
    NieDiscretization s;
    s.k = eval_gram(problem.kernel, grid.bulk);
    s.prior = SpdSolver(s.k, "nie grid kernel");
    s.jitter = s.prior.jitter();
    s.k.diagonal().array() += s.jitter;
    s.d = differentiation_matrix(problem.op, grid);
    s.w = grid.measure_weights();
    s.v = grid.boundary_measure_weights();
    s.boundary_nodes = grid.boundary_nodes;
    if (need_source) {
        s.phi = problem.source ? grid.evaluate(problem.source) : Vector::Zero(grid.size());
        s.g = problem.boundary ? grid.evaluate_boundary(problem.boundary) : Vector::Zero(grid.boundary_size());
    }
    return s;
}

}  // namespace detail

/// Grid discretization of
///   f(x) + eta_b int (Lf - phi)(y) [LK](y, x) dmu(y) + eta_d int (f - g)(z) K(z, x) dmu_d(z) = 0,
/// i.e. f + eta_b K D^T W (D f - phi) + eta_d K S^T V (S f - g) = 0, solved by dense LU.
inline NieSolution nie_solve_grid(const ProblemData& problem, const DomainGrid& grid, double eta_bulk,
                                  double eta_boundary) {
    if (!(eta_bulk >= 0.0) || !(eta_boundary >= 0.0) || !std::isfinite(eta_bulk) || !std::isfinite(eta_boundary)) {
        throw DomainError("nie_solve_grid: eta values must be finite and >= 0");
    }
    if (!problem.op.constant_coefficients()) throw DomainError("nie_solve_grid: operator must have constant coefficients");
    if (eta_boundary > 0.0 && grid.boundary_size() == 0) throw DomainError("nie_solve_grid: grid has no boundary nodes");
    const auto s = detail::discretize_nie(problem, grid);
    const Eigen::Index n = grid.size();
    const Eigen::Index m = grid.boundary_size();

    // B = K D^T W (dense n x n); C = K S^T V (n x m).
    Matrix b = s.k * s.d.transpose();
    b *= s.w.asDiagonal();
    Matrix c(n, m);
    for (Eigen::Index j = 0; j < m; ++j) c.col(j) = s.k.col(s.boundary_nodes[j]) * s.v[j];

    Matrix a = eta_bulk * (b * s.d);
    a.diagonal().array() += 1.0;
    for (Eigen::Index j = 0; j < m; ++j) a.col(s.boundary_nodes[j]) += eta_boundary * c.col(j);
    Vector rhs = eta_bulk * (b * s.phi);
    if (m > 0) rhs += eta_boundary * (c * s.g);

    NieSolution sol;
    sol.grid = grid;
    sol.jitter = s.jitter;
    Eigen::PartialPivLU<Matrix> lu(a);
    sol.f0_vals = lu.solve(rhs);
    if (!sol.f0_vals.allFinite()) {
        throw IllConditionedError("nie_solve_grid: singular system", std::numeric_limits<double>::infinity());
    }
    sol.residual_norm = (a * sol.f0_vals - rhs).cwiseAbs().maxCoeff();
    if (m > 0) {
        double mismatch = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) mismatch += s.v[j] * (s.g[j] - sol.f0_vals[s.boundary_nodes[j]]);
        sol.delta = eta_boundary * mismatch;
    }
    return sol;
}

/// Discrete first-order action
///   S[f] = (eta_b/2) sum_i w_i (Df - phi)_i^2 + (eta_d/2) sum_j v_j (f_j - g_j)^2 + (1/2) f^T (K + jitter)^{-1} f,
/// whose stationary point is the nie_solve_grid solution. The measure weights of
/// the prior term cancel between the operator K and its inverse.
inline double effective_action(const ProblemData& problem, const DomainGrid& grid, double eta_bulk,
                               double eta_boundary, const Vector& f_vals) {
    if (f_vals.size() != grid.size()) throw DomainError("effective_action: grid function has wrong length");
    if (!f_vals.allFinite()) throw DomainError("effective_action: non-finite grid function");
    const auto s = detail::discretize_nie(problem, grid);
    const Vector r = s.d * f_vals - s.phi;
    double action = 0.5 * eta_bulk * (s.w.array() * r.array().square()).sum();
    for (Eigen::Index j = 0; j < grid.boundary_size(); ++j) {
        const double e = f_vals[s.boundary_nodes[j]] - s.g[j];
        action += 0.5 * eta_boundary * s.v[j] * e * e;
    }
    action += 0.5 * f_vals.dot(s.prior.solve(f_vals));
    return action;
}

struct ActionDerivative {
    double value = 0.0;  // dS/de of S[f + e h] at e = 0
    Vector direction;    // h = (K + jitter) r
};

/// Derivative of effective_action at f along h = (K + jitter) r. The prior
/// term h^T (K + jitter)^{-1} f reduces to r^T f, so no solve is needed.
inline ActionDerivative action_derivative(const ProblemData& problem, const DomainGrid& grid, double eta_bulk,
                                          double eta_boundary, const Vector& f_vals, const Vector& r) {
    if (f_vals.size() != grid.size() || r.size() != grid.size()) {
        throw DomainError("action_derivative: grid function has wrong length");
    }
    const auto s = detail::discretize_nie(problem, grid);
    ActionDerivative out;
    out.direction = s.k * r;
    const Vector res = s.d * f_vals - s.phi;
    const Vector dh = s.d * out.direction;
    out.value = eta_bulk * (s.w.array() * res.array() * dh.array()).sum() + r.dot(f_vals);
    for (Eigen::Index j = 0; j < grid.boundary_size(); ++j) {
        const Eigen::Index node = s.boundary_nodes[j];
        out.value += eta_boundary * s.v[j] * (f_vals[node] - s.g[j]) * out.direction[node];
    }
    return out;
}

/// Same action with sigma^2 inputs: eta = n / sigma^2 per data set.
inline double effective_action(const ProblemData& problem, const DomainGrid& grid, double n_bulk,
                               double n_boundary, double sigma2_bulk, double sigma2_boundary, const Vector& f_vals) {
    require_positive(sigma2_bulk, "sigma2_bulk");
    require_positive(sigma2_boundary, "sigma2_boundary");
    return effective_action(problem, grid, n_bulk / sigma2_bulk, n_boundary / sigma2_boundary, f_vals);
}

}  // namespace pinn_spectral

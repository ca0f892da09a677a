#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "parallel.hpp"
#include "stencils.hpp"
#include "types.hpp"

namespace pinn_spectral {

enum class KernelFamily { CosineFeature, SineFeature, SquaredExponential, ErfArcsine };

inline const char* to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::CosineFeature: return "CosineFeature";
        case KernelFamily::SineFeature: return "SineFeature";
        case KernelFamily::SquaredExponential: return "SquaredExponential";
        case KernelFamily::ErfArcsine: return "ErfArcsine";
    }
    return "?";
}

inline KernelFamily kernel_family_from_string(const std::string& s) {
    if (s == "CosineFeature") return KernelFamily::CosineFeature;
    if (s == "SineFeature") return KernelFamily::SineFeature;
    if (s == "SquaredExponential") return KernelFamily::SquaredExponential;
    if (s == "ErfArcsine") return KernelFamily::ErfArcsine;
    throw DomainError("unknown kernel family '" + s + "'");
}

/// NNGP covariance family plus its hyperparameters.
///
/// All families are isotropic in the input. The Gaussian-type families use the
/// frequency variance sigma_w2 directly, so sigma_w2 = 1/l^2 reproduces a
/// length scale l. ErfArcsine appends a bias coordinate of variance bias_var.
struct KernelSpec {
    KernelFamily family = KernelFamily::CosineFeature;
    double l = 1.0;
    double sigma_a2 = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    double sigma_w2 = 1.0;
    double bias_var = 1.0;

    /// sigma_w2 = 1/l^2 and sigma_a2 = 1/sqrt(2 pi l^2).
    static KernelSpec with_defaults(KernelFamily family, double l = 1.0) {
        require_positive(l, "length scale");
        KernelSpec s;
        s.family = family;
        s.l = l;
        s.sigma_w2 = 1.0 / (l * l);
        s.sigma_a2 = 1.0 / std::sqrt(2.0 * std::numbers::pi * l * l);
        return s;
    }

    void validate() const {
        require_positive(l, "length scale l");
        require_positive(sigma_a2, "sigma_a2");
        require_positive(sigma_w2, "sigma_w2");
        if (!(bias_var >= 0.0) || !std::isfinite(bias_var)) {
            throw DomainError("bias_var must be non-negative and finite");
        }
    }

    bool has_feature_map() const { return family != KernelFamily::SquaredExponential; }

    bool operator==(const KernelSpec&) const = default;
};

/// Scales the initialization standard deviations of both layers by alpha.
inline KernelSpec scale_initialization(KernelSpec spec, double alpha) {
    require_positive(alpha, "alpha");
    spec.sigma_w2 *= alpha * alpha;
    spec.sigma_a2 *= alpha * alpha;
    return spec;
}

namespace detail {

// n-th derivative of exp(-s u^2 / 2): (-sqrt(s))^n He_n(sqrt(s) u) exp(-s u^2 / 2).
inline double gaussian_derivative(int n, double s, double u) {
    const double r = std::sqrt(s);
    const double z = r * u;
    double he_prev = 1.0;
    double he = z;
    if (n == 0) {
        he = 1.0;
    } else {
        for (int k = 1; k < n; ++k) {
            const double next = z * he - k * he_prev;
            he_prev = he;
            he = next;
        }
    }
    return std::pow(-r, n) * he * std::exp(-0.5 * s * u * u);
}

inline double erf_arcsine(const KernelSpec& spec, PointRef x, PointRef y) {
    const double sw = spec.sigma_w2;
    const double b = spec.bias_var;
    const double dot = sw * x.dot(y) + b;
    const double nx = 1.0 + 2.0 * (sw * x.squaredNorm() + b);
    const double ny = 1.0 + 2.0 * (sw * y.squaredNorm() + b);
    double arg = 2.0 * dot / std::sqrt(nx * ny);
    arg = std::clamp(arg, -1.0, 1.0);
    return spec.sigma_a2 * (2.0 / std::numbers::pi) * std::asin(arg);
}

inline bool is_gaussian_type(KernelFamily f) { return f != KernelFamily::ErfArcsine; }

}  // namespace detail

/// Closed-form covariance K(x, y).
inline double eval_kernel(const KernelSpec& spec, PointRef x, PointRef y) {
    if (x.size() != y.size()) throw DomainError("eval_kernel: dimension mismatch");
    require_finite(x, "eval_kernel");
    require_finite(y, "eval_kernel");
    const double s = spec.sigma_w2;
    switch (spec.family) {
        case KernelFamily::CosineFeature:
            return 0.5 * spec.sigma_a2 *
                   (std::exp(-0.5 * s * (x - y).squaredNorm()) + std::exp(-0.5 * s * (x + y).squaredNorm()));
        case KernelFamily::SineFeature:
            return 0.5 * spec.sigma_a2 *
                   (std::exp(-0.5 * s * (x - y).squaredNorm()) - std::exp(-0.5 * s * (x + y).squaredNorm()));
        case KernelFamily::SquaredExponential:
            return spec.sigma_a2 * std::exp(-0.5 * s * (x - y).squaredNorm());
        case KernelFamily::ErfArcsine:
            return detail::erf_arcsine(spec, x, y);
    }
    return 0.0;
}

inline double eval_kernel(const KernelSpec& spec, double x, double y) {
    Eigen::Matrix<double, 1, 1> a{x};
    Eigen::Matrix<double, 1, 1> b{y};
    return eval_kernel(spec, a, b);
}

enum class DerivativeMode { Auto, FiniteDifference };

/// Largest total derivative order served analytically / by nested differences.
inline constexpr int kMaxAnalyticOrder = 8;
inline constexpr int kMaxFiniteDifferenceOrder = 4;

namespace detail {

inline double analytic_kernel_derivative(const KernelSpec& spec, std::span<const int> ax, std::span<const int> ay,
                                         PointRef x, PointRef y) {
    const double s = spec.sigma_w2;
    double diff = 1.0;
    double sum = 1.0;
    for (Eigen::Index d = 0; d < x.size(); ++d) {
        const int a = ax[d];
        const int b = ay[d];
        const double sign = (b % 2 == 0) ? 1.0 : -1.0;
        diff *= sign * gaussian_derivative(a + b, s, x[d] - y[d]);
        sum *= gaussian_derivative(a + b, s, x[d] + y[d]);
    }
    switch (spec.family) {
        case KernelFamily::CosineFeature: return 0.5 * spec.sigma_a2 * (diff + sum);
        case KernelFamily::SineFeature: return 0.5 * spec.sigma_a2 * (diff - sum);
        case KernelFamily::SquaredExponential: return spec.sigma_a2 * diff;
        case KernelFamily::ErfArcsine: break;
    }
    throw CapabilityError("no analytic derivatives registered for ErfArcsine");
}

// Nested central differences, 4th-order accurate per coordinate, with step
// h = eps^(1/(order+2)) * l.
inline double fd_kernel_derivative(const KernelSpec& spec, std::span<const int> ax, std::span<const int> ay,
                                   PointRef x, PointRef y) {
    const Eigen::Index d = x.size();
    int total = 0;
    struct Slot {
        bool on_x;
        Eigen::Index coord;
        Stencil stencil;
    };
    std::vector<Slot> slots;
    for (Eigen::Index k = 0; k < d; ++k) {
        if (ax[k] > 0) slots.push_back({true, k, central_stencil(ax[k], 4)});
        if (ay[k] > 0) slots.push_back({false, k, central_stencil(ay[k], 4)});
        total += ax[k] + ay[k];
    }
    if (total == 0) return eval_kernel(spec, x, y);
    const double h = std::pow(std::numeric_limits<double>::epsilon(), 1.0 / (total + 2)) * spec.l;
    Point xs = x;
    Point ys = y;
    std::vector<std::size_t> idx(slots.size(), 0);
    double acc = 0.0;
    while (true) {
        double w = 1.0;
        xs = x;
        ys = y;
        for (std::size_t k = 0; k < slots.size(); ++k) {
            const auto& sl = slots[k];
            w *= sl.stencil.weights[idx[k]];
            const double shift = sl.stencil.offsets[idx[k]] * h;
            (sl.on_x ? xs : ys)[sl.coord] += shift;
        }
        if (w != 0.0) acc += w * eval_kernel(spec, xs, ys);
        std::size_t k = 0;
        for (; k < slots.size(); ++k) {
            if (++idx[k] < slots[k].stencil.weights.size()) break;
            idx[k] = 0;
        }
        if (k == slots.size()) break;
    }
    return acc / std::pow(h, total);
}

}  // namespace detail

/// Mixed partial derivative d^ax/dx d^ay/dy K(x, y) for multi-indices ax, ay.
/// Gaussian-type families are differentiated in closed form; ErfArcsine (or
/// mode == FiniteDifference) uses nested central differences.
inline double kernel_derivative(const KernelSpec& spec, std::span<const int> ax, std::span<const int> ay,
                                PointRef x, PointRef y, DerivativeMode mode = DerivativeMode::Auto) {
    if (x.size() != y.size() || static_cast<Eigen::Index>(ax.size()) != x.size() ||
        static_cast<Eigen::Index>(ay.size()) != y.size()) {
        throw DomainError("kernel_derivative: dimension mismatch");
    }
    require_finite(x, "kernel_derivative");
    require_finite(y, "kernel_derivative");
    int total = 0;
    for (int a : ax) total += a;
    for (int b : ay) total += b;
    const bool analytic = mode == DerivativeMode::Auto && detail::is_gaussian_type(spec.family);
    if (analytic) {
        if (total > kMaxAnalyticOrder) {
            throw CapabilityError("kernel derivative of total order " + std::to_string(total) +
                                  " exceeds the analytic limit");
        }
        return detail::analytic_kernel_derivative(spec, ax, ay, x, y);
    }
    if (total > kMaxFiniteDifferenceOrder) {
        throw CapabilityError("kernel derivative of total order " + std::to_string(total) +
                              " exceeds the finite-difference limit");
    }
    return detail::fd_kernel_derivative(spec, ax, ay, x, y);
}

/// Kernel matrix K(rows_i, cols_j). When rows and cols are the same object the
/// result is filled from its upper triangle and is exactly symmetric.
template <typename Entry>
Matrix assemble_matrix(const PointSet& rows, const PointSet& cols, bool symmetric, Entry&& entry) {
    const Eigen::Index n = rows.cols();
    const Eigen::Index m = cols.cols();
    Matrix out(n, m);
    parallel_for(0, n, [&](long i) {
        const Eigen::Index j0 = symmetric ? i : 0;
        for (Eigen::Index j = j0; j < m; ++j) out(i, j) = entry(rows.col(i), cols.col(j));
    });
    if (symmetric) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < i; ++j) out(i, j) = out(j, i);
    }
    return out;
}

inline Matrix eval_gram(const KernelSpec& spec, const PointSet& rows, const PointSet& cols) {
    spec.validate();
    if (rows.cols() == 0 || cols.cols() == 0) throw DomainError("eval_gram: empty point list");
    if (rows.rows() != cols.rows()) throw DomainError("eval_gram: dimension mismatch");
    const bool symmetric = rows.cols() == cols.cols() && (&rows == &cols || rows == cols);
    return assemble_matrix(rows, cols, symmetric,
                           [&](const auto& x, const auto& y) { return eval_kernel(spec, x, y); });
}

inline Matrix eval_gram(const KernelSpec& spec, const PointSet& pts) { return eval_gram(spec, pts, pts); }

enum class Activation { Cos, Sin, Erf };

/// Two-layer random network f(x) = sum_c a_c act(w_c . x + b_c).
struct RandomFeatureNet {
    Activation activation = Activation::Cos;
    Vector a;          // C output weights
    Matrix w;          // d x C input weights
    Vector b;          // C biases (zero unless Erf)

    Eigen::Index width() const { return a.size(); }

    double feature(Eigen::Index c, PointRef x) const {
        const double z = w.col(c).dot(x) + b[c];
        switch (activation) {
            case Activation::Cos: return std::cos(z);
            case Activation::Sin: return std::sin(z);
            case Activation::Erf: return std::erf(z);
        }
        return 0.0;
    }

    double operator()(PointRef x) const {
        if (x.size() != w.rows()) throw DomainError("RandomFeatureNet: dimension mismatch");
        double f = 0.0;
        for (Eigen::Index c = 0; c < width(); ++c) f += a[c] * feature(c, x);
        return f;
    }
};

namespace detail {

inline Activation activation_for(const KernelSpec& spec) {
    switch (spec.family) {
        case KernelFamily::CosineFeature: return Activation::Cos;
        case KernelFamily::SineFeature: return Activation::Sin;
        case KernelFamily::ErfArcsine: return Activation::Erf;
        case KernelFamily::SquaredExponential: break;
    }
    throw UnsupportedFamilyError(std::string("kernel family ") + to_string(spec.family) +
                                 " has no finite feature map");
}

// Draw order per neuron: a_c, then w_c (d coordinates), then b_c for Erf.
struct NeuronSampler {
    std::mt19937_64 rng;
    std::normal_distribution<double> normal{0.0, 1.0};
    double sd_a, sd_w, sd_b;
    bool with_bias;

    NeuronSampler(const KernelSpec& spec, Eigen::Index width, std::uint64_t seed)
        : rng(seed),
          sd_a(std::sqrt(spec.sigma_a2 / static_cast<double>(width))),
          sd_w(std::sqrt(spec.sigma_w2)),
          sd_b(std::sqrt(spec.bias_var)),
          with_bias(spec.family == KernelFamily::ErfArcsine) {}

    template <typename WCol>
    void draw(double& a, WCol&& w, double& b) {
        a = sd_a * normal(rng);
        for (Eigen::Index k = 0; k < w.size(); ++k) w[k] = sd_w * normal(rng);
        b = with_bias ? sd_b * normal(rng) : 0.0;
    }
};

}  // namespace detail

/// Draws a_c ~ N(0, sigma_a2 / C), w_c ~ N(0, sigma_w2 I_d) (and b_c ~ N(0, bias_var)
/// for Erf) from a 64-bit Mersenne twister seeded with `seed`.
inline RandomFeatureNet sample_network(const KernelSpec& spec, Eigen::Index width, std::uint64_t seed,
                                       Eigen::Index dim = 1) {
    spec.validate();
    if (width < 1) throw DomainError("sample_network: width must be >= 1");
    if (dim < 1) throw DomainError("sample_network: input dimension must be >= 1");
    RandomFeatureNet net;
    net.activation = detail::activation_for(spec);
    net.a.resize(width);
    net.w.resize(dim, width);
    net.b.resize(width);
    detail::NeuronSampler sampler(spec, width, seed);
    for (Eigen::Index c = 0; c < width; ++c) sampler.draw(net.a[c], net.w.col(c), net.b[c]);
    return net;
}

struct MonteCarloEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    long samples = 0;
};

/// Per-neuron estimate of K(x, y) from a single network: mean of C a_c^2 phi_c(x) phi_c(y).
inline MonteCarloEstimate feature_covariance(const RandomFeatureNet& net, PointRef x, PointRef y) {
    const Eigen::Index C = net.width();
    double mean = 0.0;
    double m2 = 0.0;
    for (Eigen::Index c = 0; c < C; ++c) {
        const double s = static_cast<double>(C) * net.a[c] * net.a[c] * net.feature(c, x) * net.feature(c, y);
        const double delta = s - mean;
        mean += delta / static_cast<double>(c + 1);
        m2 += delta * (s - mean);
    }
    const double var = C > 1 ? m2 / static_cast<double>(C - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(C)), static_cast<long>(C)};
}

/// Sample mean of f(x) f(y) over n_nets independent networks of width C.
inline MonteCarloEstimate monte_carlo_kernel(const KernelSpec& spec, PointRef x, PointRef y, Eigen::Index width,
                                             long n_nets, std::uint64_t seed) {
    spec.validate();
    detail::activation_for(spec);
    if (x.size() != y.size()) throw DomainError("monte_carlo_kernel: dimension mismatch");
    require_finite(x, "monte_carlo_kernel");
    require_finite(y, "monte_carlo_kernel");
    if (width < 1 || n_nets < 2) throw DomainError("monte_carlo_kernel: need width >= 1 and n_nets >= 2");
    if (static_cast<double>(width) * static_cast<double>(n_nets) < 1000.0) {
        throw DomainError("monte_carlo_kernel: C * n_nets must be >= 1000");
    }
    RandomFeatureNet neuron;
    neuron.activation = detail::activation_for(spec);
    neuron.a.resize(1);
    neuron.w.resize(x.size(), 1);
    neuron.b.resize(1);
    detail::NeuronSampler sampler(spec, width, seed);
    double mean = 0.0;
    double m2 = 0.0;
    for (long n = 0; n < n_nets; ++n) {
        double fx = 0.0;
        double fy = 0.0;
        for (Eigen::Index c = 0; c < width; ++c) {
            sampler.draw(neuron.a[0], neuron.w.col(0), neuron.b[0]);
            fx += neuron.a[0] * neuron.feature(0, x);
            fy += neuron.a[0] * neuron.feature(0, y);
        }
        const double s = fx * fy;
        const double delta = s - mean;
        mean += delta / static_cast<double>(n + 1);
        m2 += delta * (s - mean);
    }
    const double var = m2 / static_cast<double>(n_nets - 1);
    return {mean, std::sqrt(var / static_cast<double>(n_nets)), static_cast<long>(width) * n_nets};
}

}  // namespace pinn_spectral

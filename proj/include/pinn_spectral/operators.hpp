#pragma once

#include <Eigen/Sparse>

#include <functional>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "kernels.hpp"
#include "stencils.hpp"

namespace pinn_spectral {

using CoefficientFn = std::function<double(PointRef)>;

/// coeff(x) * d^orders f(x). A term without a coefficient function is constant.
struct DiffTerm {
    std::vector<int> orders;
    double constant = 1.0;
    CoefficientFn coeff;

    bool is_constant() const { return !coeff; }
    double coefficient(PointRef x) const { return coeff ? coeff(x) : constant; }
    int order() const {
        int s = 0;
        for (int o : orders) s += o;
        return s;
    }
};

/// Linear differential operator L[f] = sum_t coeff_t(x) d^{alpha_t} f(x).
class LinearDiffOp {
public:
    LinearDiffOp() = default;

    LinearDiffOp(int dim, std::vector<DiffTerm> terms) : dim_(dim), terms_(std::move(terms)) {
        if (dim_ < 1) throw DomainError("LinearDiffOp: dimension must be >= 1");
        if (terms_.empty()) throw DomainError("LinearDiffOp: at least one term required");
        for (const auto& t : terms_) {
            if (static_cast<int>(t.orders.size()) != dim_) {
                throw DomainError("LinearDiffOp: multi-index length must equal the dimension");
            }
            for (int o : t.orders)
                if (o < 0) throw DomainError("LinearDiffOp: negative derivative order");
        }
    }

    static LinearDiffOp identity(int dim) { return {dim, {{std::vector<int>(dim, 0), 1.0, {}}}}; }

    /// coeff * d^order / dx_axis^order.
    static LinearDiffOp partial(int dim, int axis, int order, double coeff = 1.0) {
        std::vector<int> orders(dim, 0);
        orders.at(axis) = order;
        return {dim, {{orders, coeff, {}}}};
    }

    int dim() const { return dim_; }
    const std::vector<DiffTerm>& terms() const { return terms_; }

    int order() const {
        int s = 0;
        for (const auto& t : terms_) s = std::max(s, t.order());
        return s;
    }

    bool constant_coefficients() const {
        for (const auto& t : terms_)
            if (!t.is_constant()) return false;
        return true;
    }

    bool is_identity() const {
        return terms_.size() == 1 && terms_[0].order() == 0 && terms_[0].is_constant() && terms_[0].constant == 1.0;
    }

    LinearDiffOp operator+(const LinearDiffOp& other) const {
        if (other.dim_ != dim_) throw DomainError("LinearDiffOp: dimension mismatch");
        auto t = terms_;
        t.insert(t.end(), other.terms_.begin(), other.terms_.end());
        return {dim_, std::move(t)};
    }

    LinearDiffOp operator*(double s) const {
        auto t = terms_;
        for (auto& term : t) {
            if (term.coeff) {
                auto f = term.coeff;
                term.coeff = [f, s](PointRef x) { return s * f(x); };
            } else {
                term.constant *= s;
            }
        }
        return {dim_, std::move(t)};
    }

private:
    int dim_ = 1;
    std::vector<DiffTerm> terms_;
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Finite-difference realization of L on a uniform grid: central stencils of the
/// given accuracy in the interior, one-sided stencils of the same accuracy at edges.
inline SparseMatrix differentiation_matrix(const LinearDiffOp& op, const DomainGrid& grid, int accuracy = 4) {
    if (op.dim() != grid.dim()) throw DomainError("differentiation_matrix: dimension mismatch");
    const int d = grid.dim();
    const Eigen::Index n = grid.size();
    std::vector<Eigen::Triplet<double>> triplets;
    std::vector<Eigen::Index> strides(d);
    for (int a = 0; a < d; ++a) strides[a] = grid.stride(a);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto idx = grid.multi_index(k);
        for (const auto& term : op.terms()) {
            const double c = term.coefficient(grid.bulk.col(k));
            if (c == 0.0) continue;
            std::vector<Stencil> st(d);
            double scale = c;
            for (int a = 0; a < d; ++a) {
                st[a] = node_stencil(idx[a], grid.axes[a].n, term.orders[a], accuracy);
                scale /= std::pow(grid.axes[a].spacing(), term.orders[a]);
            }
            std::vector<std::size_t> pos(d, 0);
            while (true) {
                double w = scale;
                Eigen::Index col = k;
                for (int a = 0; a < d; ++a) {
                    w *= st[a].weights[pos[a]];
                    col += st[a].offsets[pos[a]] * strides[a];
                }
                if (w != 0.0) triplets.emplace_back(k, col, w);
                int a = 0;
                for (; a < d; ++a) {
                    if (++pos[a] < st[a].weights.size()) break;
                    pos[a] = 0;
                }
                if (a == d) break;
            }
        }
    }
    SparseMatrix D(n, n);
    D.setFromTriplets(triplets.begin(), triplets.end());
    return D;
}

inline Vector apply_to_function(const LinearDiffOp& op, const Vector& f_vals, const DomainGrid& grid,
                                int accuracy = 4) {
    if (f_vals.size() != grid.size()) throw DomainError("apply_to_function: grid function has wrong length");
    return differentiation_matrix(op, grid, accuracy) * f_vals;
}

enum class KernelSide { Left, Right, Both };

/// [L_left K L_right^dagger](x, y): `left` acts on the first argument, `right` on
/// the second. A null operator is the identity.
inline double kernel_with_operators(const KernelSpec& spec, const LinearDiffOp* left, const LinearDiffOp* right,
                                    PointRef x, PointRef y, DerivativeMode mode = DerivativeMode::Auto) {
    const int d = static_cast<int>(x.size());
    if ((left && left->dim() != d) || (right && right->dim() != d)) {
        throw DomainError("kernel_with_operators: operator dimension mismatch");
    }
    struct Weighted {
        const std::vector<int>* orders;
        double coeff;
    };
    const std::vector<int> zero(d, 0);
    auto expand = [&](const LinearDiffOp* op, PointRef at) {
        std::vector<Weighted> out;
        if (!op) {
            out.push_back({&zero, 1.0});
            return out;
        }
        for (const auto& t : op->terms()) {
            const double c = t.coefficient(at);
            if (c != 0.0) out.push_back({&t.orders, c});
        }
        return out;
    };
    const auto lhs = expand(left, x);
    const auto rhs = expand(right, y);
    double acc = 0.0;
    for (const auto& l : lhs)
        for (const auto& r : rhs) acc += l.coeff * r.coeff * kernel_derivative(spec, *l.orders, *r.orders, x, y, mode);
    return acc;
}

inline double apply_to_kernel(const LinearDiffOp& op, const KernelSpec& spec, KernelSide side, PointRef x, PointRef y,
                              DerivativeMode mode = DerivativeMode::Auto) {
    spec.validate();
    switch (side) {
        case KernelSide::Left: return kernel_with_operators(spec, &op, nullptr, x, y, mode);
        case KernelSide::Right: return kernel_with_operators(spec, nullptr, &op, x, y, mode);
        case KernelSide::Both: return kernel_with_operators(spec, &op, &op, x, y, mode);
    }
    return 0.0;
}

/// Matrix of [L_left K L_right^dagger](rows_i, cols_j).
inline Matrix operator_gram(const KernelSpec& spec, const LinearDiffOp* left, const LinearDiffOp* right,
                            const PointSet& rows, const PointSet& cols, DerivativeMode mode = DerivativeMode::Auto) {
    spec.validate();
    if (rows.rows() != cols.rows()) throw DomainError("operator_gram: dimension mismatch");
    const bool same_op = (left == right) || (left && right && left->is_identity() && right->is_identity());
    const bool symmetric = same_op && rows.cols() == cols.cols() && (&rows == &cols || rows == cols);
    if ((!left || left->is_identity()) && (!right || right->is_identity())) {
        return assemble_matrix(rows, cols, symmetric,
                               [&](const auto& x, const auto& y) { return eval_kernel(spec, x, y); });
    }
    return assemble_matrix(rows, cols, symmetric, [&](const auto& x, const auto& y) {
        return kernel_with_operators(spec, left, right, x, y, mode);
    });
}

}  // namespace pinn_spectral

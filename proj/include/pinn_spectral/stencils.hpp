#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace pinn_spectral {

/// Finite-difference weights for the m-th derivative at x0 from arbitrary nodes
/// (Fornberg's recursion). Returns one weight per node.
inline std::vector<double> fornberg_weights(double x0, std::span<const double> nodes, int m) {
    const int n = static_cast<int>(nodes.size());
    if (m < 0 || n <= m) {
        throw CapabilityError("fornberg_weights: need more than " + std::to_string(m) + " nodes");
    }
    std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) {
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) {
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = c[i][m];
    return w;
}

/// Stencil on a unit-spaced lattice; scale weights by h^-order before use.
struct Stencil {
    std::vector<int> offsets;
    std::vector<double> weights;
};

/// Symmetric stencil of the given (even) accuracy order for the order-th derivative.
inline Stencil central_stencil(int order, int accuracy) {
    if (accuracy < 2 || accuracy % 2 != 0) {
        throw CapabilityError("central_stencil: accuracy order must be even and >= 2");
    }
    if (order == 0) return {{0}, {1.0}};
    const int points = 2 * ((order + 1) / 2) - 1 + accuracy;
    const int half = (points - 1) / 2;
    Stencil s;
    std::vector<double> nodes;
    for (int k = -half; k <= half; ++k) {
        s.offsets.push_back(k);
        nodes.push_back(static_cast<double>(k));
    }
    s.weights = fornberg_weights(0.0, nodes, order);
    return s;
}

/// Stencil for node `index` of an n-node uniform line: central where it fits,
/// otherwise a one-sided window of order + accuracy nodes with the same accuracy.
inline Stencil node_stencil(int index, int n, int order, int accuracy) {
    if (order == 0) return {{0}, {1.0}};
    const Stencil central = central_stencil(order, accuracy);
    const int half = static_cast<int>(central.offsets.size() - 1) / 2;
    if (index - half >= 0 && index + half <= n - 1) return central;
    const int q = order + accuracy;
    if (n < q) {
        throw CapabilityError("grid too small for stencil: " + std::to_string(n) + " nodes, need " +
                              std::to_string(q));
    }
    const int start = index < half ? 0 : n - q;
    Stencil s;
    std::vector<double> nodes;
    for (int k = 0; k < q; ++k) {
        s.offsets.push_back(start + k - index);
        nodes.push_back(static_cast<double>(start + k - index));
    }
    s.weights = fornberg_weights(0.0, nodes, order);
    return s;
}

}  // namespace pinn_spectral

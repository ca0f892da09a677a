#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "types.hpp"

namespace pinn_spectral {

/// One face of an axis-aligned box: coordinate `axis` pinned at lo (upper=false) or hi.
struct BoundaryFace {
    int axis = 0;
    bool upper = false;

    bool operator==(const BoundaryFace&) const = default;
};

/// Axis-aligned box domain with the subset of faces that carry boundary data.
/// In one dimension each face is a single point of unit measure.
struct BoxGeometry {
    Vector lo;
    Vector hi;
    std::vector<BoundaryFace> faces;

    int dim() const { return static_cast<int>(lo.size()); }

    void validate() const {
        if (lo.size() == 0 || lo.size() != hi.size()) throw DomainError("BoxGeometry: bad dimensions");
        for (Eigen::Index a = 0; a < lo.size(); ++a) {
            if (!std::isfinite(lo[a]) || !std::isfinite(hi[a]) || !(hi[a] > lo[a])) {
                throw DomainError("BoxGeometry: empty or non-finite extent on axis " + std::to_string(a));
            }
        }
        for (const auto& f : faces) {
            if (f.axis < 0 || f.axis >= dim()) throw DomainError("BoxGeometry: face axis out of range");
        }
    }

    double volume() const { return (hi - lo).prod(); }

    double face_measure(const BoundaryFace& f) const {
        double m = 1.0;
        for (int a = 0; a < dim(); ++a)
            if (a != f.axis) m *= hi[a] - lo[a];
        return m;
    }

    double boundary_measure() const {
        double m = 0.0;
        for (const auto& f : faces) m += face_measure(f);
        return m;
    }

    bool on_boundary(PointRef x, double tol = 1e-12) const {
        for (const auto& f : faces) {
            const double v = f.upper ? hi[f.axis] : lo[f.axis];
            if (std::abs(x[f.axis] - v) > tol * std::max(1.0, std::abs(v))) continue;
            bool inside = true;
            for (int a = 0; a < dim(); ++a)
                if (x[a] < lo[a] - tol || x[a] > hi[a] + tol) inside = false;
            if (inside) return true;
        }
        return false;
    }

    /// [0, x_max] with boundary data only at the origin.
    static BoxGeometry half_line(double x_max) {
        BoxGeometry g;
        g.lo = Vector::Constant(1, 0.0);
        g.hi = Vector::Constant(1, x_max);
        g.faces = {{0, false}};
        g.validate();
        return g;
    }

    static BoxGeometry interval(double a, double b, std::vector<BoundaryFace> faces = {{0, false}, {0, true}}) {
        BoxGeometry g;
        g.lo = Vector::Constant(1, a);
        g.hi = Vector::Constant(1, b);
        g.faces = std::move(faces);
        g.validate();
        return g;
    }

    /// Space-time slab [x_lo, x_hi] x [0, t_max] with walls at both x ends and the t = 0 slice.
    static BoxGeometry space_time_slab(double x_lo, double x_hi, double t_max) {
        BoxGeometry g;
        g.lo = Vector(2);
        g.hi = Vector(2);
        g.lo << x_lo, 0.0;
        g.hi << x_hi, t_max;
        g.faces = {{0, false}, {0, true}, {1, false}};
        g.validate();
        return g;
    }
};

struct GridAxis {
    double lo = 0.0;
    double hi = 1.0;
    int n = 2;

    double spacing() const { return (hi - lo) / (n - 1); }
    double node(int i) const { return i == n - 1 ? hi : lo + i * spacing(); }
};

/// Uniform tensor-product grid over a box. Bulk nodes are ordered with the first
/// axis slowest. Boundary nodes are the bulk nodes lying on the box's data faces.
/// quad_weights (trapezoid) sum to |Omega|; boundary_weights sum to |dOmega|.
struct DomainGrid {
    BoxGeometry geometry;
    std::vector<GridAxis> axes;
    PointSet bulk;
    Vector quad_weights;
    std::vector<Eigen::Index> boundary_nodes;
    PointSet boundary;
    Vector boundary_weights;

    int dim() const { return geometry.dim(); }
    Eigen::Index size() const { return bulk.cols(); }
    Eigen::Index boundary_size() const { return boundary.cols(); }

    /// Weights of the uniform probability measure 1/|Omega| on the bulk nodes.
    Vector measure_weights() const { return quad_weights / geometry.volume(); }

    /// Weights of the uniform probability measure 1/|dOmega| on the boundary nodes.
    Vector boundary_measure_weights() const {
        if (boundary_size() == 0) return Vector();
        return boundary_weights / geometry.boundary_measure();
    }

    /// Integral of grid values against the bulk probability measure.
    double integrate(const Vector& f) const { return measure_weights().dot(f); }

    double inner(const Vector& f, const Vector& g) const {
        return (measure_weights().array() * f.array() * g.array()).sum();
    }

    Vector evaluate(const std::function<double(PointRef)>& fn) const {
        Vector v(size());
        for (Eigen::Index i = 0; i < size(); ++i) v[i] = fn(bulk.col(i));
        return v;
    }

    Vector evaluate_boundary(const std::function<double(PointRef)>& fn) const {
        Vector v(boundary_size());
        for (Eigen::Index i = 0; i < boundary_size(); ++i) v[i] = fn(boundary.col(i));
        return v;
    }

    Eigen::Index stride(int axis) const {
        Eigen::Index s = 1;
        for (int a = dim() - 1; a > axis; --a) s *= axes[a].n;
        return s;
    }

    std::vector<int> multi_index(Eigen::Index flat) const {
        std::vector<int> idx(dim());
        for (int a = dim() - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(flat % axes[a].n);
            flat /= axes[a].n;
        }
        return idx;
    }
};

inline DomainGrid make_grid(const BoxGeometry& geometry, const std::vector<int>& nodes_per_axis) {
    geometry.validate();
    const int d = geometry.dim();
    if (static_cast<int>(nodes_per_axis.size()) != d) throw DomainError("make_grid: one node count per axis");
    DomainGrid g;
    g.geometry = geometry;
    Eigen::Index total = 1;
    for (int a = 0; a < d; ++a) {
        if (nodes_per_axis[a] < 2) throw DomainError("make_grid: need at least 2 nodes per axis");
        g.axes.push_back({geometry.lo[a], geometry.hi[a], nodes_per_axis[a]});
        total *= nodes_per_axis[a];
    }
    std::vector<Vector> trap(d);
    for (int a = 0; a < d; ++a) {
        const auto& ax = g.axes[a];
        trap[a] = Vector::Constant(ax.n, ax.spacing());
        trap[a][0] *= 0.5;
        trap[a][ax.n - 1] *= 0.5;
    }
    g.bulk.resize(d, total);
    g.quad_weights.resize(total);
    std::map<Eigen::Index, double> bweights;
    for (Eigen::Index k = 0; k < total; ++k) {
        const auto idx = g.multi_index(k);
        double w = 1.0;
        for (int a = 0; a < d; ++a) {
            g.bulk(a, k) = g.axes[a].node(idx[a]);
            w *= trap[a][idx[a]];
        }
        g.quad_weights[k] = w;
        for (const auto& f : geometry.faces) {
            const int edge = f.upper ? g.axes[f.axis].n - 1 : 0;
            if (idx[f.axis] != edge) continue;
            double fw = 1.0;
            for (int a = 0; a < d; ++a)
                if (a != f.axis) fw *= trap[a][idx[a]];
            bweights[k] += fw;
        }
    }
    g.boundary.resize(d, static_cast<Eigen::Index>(bweights.size()));
    g.boundary_weights.resize(static_cast<Eigen::Index>(bweights.size()));
    Eigen::Index b = 0;
    for (const auto& [node, w] : bweights) {
        g.boundary_nodes.push_back(node);
        g.boundary.col(b) = g.bulk.col(node);
        g.boundary_weights[b] = w;
        ++b;
    }
    return g;
}

}  // namespace pinn_spectral

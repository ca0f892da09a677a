#pragma once

#include <cmath>
#include <numbers>

#include "geometry.hpp"
#include "gpr.hpp"
#include "kernels.hpp"
#include "operators.hpp"

namespace pinn_spectral {

/// sin(pi x), exactly zero at integers.
inline double sin_pi(double x) {
    const double r = std::remainder(x, 2.0);
    if (r == 0.0 || std::abs(r) == 1.0) return 0.0;
    return std::sin(std::numbers::pi * r);
}

inline double cos_pi(double x) {
    const double r = std::remainder(x, 2.0);
    if (std::abs(r) == 0.5) return 0.0;
    return std::cos(std::numbers::pi * r);
}

/// f' = 0 on [0, x_max] with f(0) = g0.
inline ProblemData toy_problem(const KernelSpec& kernel, double g0) {
    ProblemData p;
    p.op = LinearDiffOp::partial(1, 0, 1);
    p.kernel = kernel;
    p.source = [](PointRef) { return 0.0; };
    p.boundary = [g0](PointRef) { return g0; };
    return p;
}

/// u_t - u_xx = phi on [-1, 1] x [0, 1]; points are (x, t).
struct HeatProblem {
    double a = 1.0 / 16.0;

    double exact(double x, double t) const { return std::exp(-t - x * x / (2.0 * a)) * sin_pi(x); }

    double source(double x, double t) const {
        const double pi = std::numbers::pi;
        const double e = std::exp(-t - x * x / (2.0 * a)) / (a * a);
        return e * (2.0 * a * pi * x * cos_pi(x) + (a + a * a * (pi * pi - 1.0) - x * x) * sin_pi(x));
    }

    static LinearDiffOp op() { return LinearDiffOp::partial(2, 1, 1) + LinearDiffOp::partial(2, 0, 2, -1.0); }

    static BoxGeometry geometry() { return BoxGeometry::space_time_slab(-1.0, 1.0, 1.0); }

    ProblemData problem(const KernelSpec& kernel) const {
        const HeatProblem self = *this;
        ProblemData p;
        p.op = op();
        p.kernel = kernel;
        p.source = [self](PointRef z) { return self.source(z[0], z[1]); };
        p.boundary = [self](PointRef z) { return self.exact(z[0], z[1]); };
        return p;
    }
};

}  // namespace pinn_spectral

#include <gtest/gtest.h>

#include <random>

#include "pinn_spectral/operators.hpp"
#include "pinn_spectral/problems.hpp"

using namespace pinn_spectral;

namespace {

Point pt(std::initializer_list<double> v) {
    Point p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) p[i++] = x;
    return p;
}

KernelSpec cosine() { return KernelSpec::with_defaults(KernelFamily::CosineFeature); }

}  // namespace

TEST(Stencil, FornbergSecondDerivativeThreePoint) {
    const std::vector<double> nodes{-1.0, 0.0, 1.0};
    const auto w = fornberg_weights(0.0, nodes, 2);
    EXPECT_NEAR(w[0], 1.0, 1e-14);
    EXPECT_NEAR(w[1], -2.0, 1e-14);
    EXPECT_NEAR(w[2], 1.0, 1e-14);
}

TEST(Stencil, FornbergFirstDerivativeFivePoint) {
    const auto s = central_stencil(1, 4);
    ASSERT_EQ(s.weights.size(), 5u);
    const std::vector<double> expected{1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12};
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(s.weights[i], expected[i], 1e-14);
}

TEST(Stencil, WeightsReproducePolynomials) {
    for (int order = 1; order <= 4; ++order) {
        const auto s = node_stencil(0, 20, order, 4);
        for (int p = 0; p < order + 4; ++p) {
            double acc = 0.0;
            for (std::size_t i = 0; i < s.offsets.size(); ++i) acc += s.weights[i] * std::pow(s.offsets[i], p);
            const double expected = (p == order) ? std::tgamma(order + 1.0) : 0.0;
            EXPECT_NEAR(acc, expected, 1e-8) << "order " << order << " power " << p;
        }
    }
}

TEST(Stencil, TooFewNodes) {
    const std::vector<double> nodes{0.0, 1.0};
    EXPECT_THROW(fornberg_weights(0.0, nodes, 2), CapabilityError);
    EXPECT_THROW(node_stencil(0, 4, 2, 4), CapabilityError);
}

TEST(ApplyToFunction, DerivativeOfSine) {
    const auto grid = make_grid(BoxGeometry::interval(0.0, 2.0 * std::numbers::pi), {201});
    const Vector f = grid.evaluate([](PointRef x) { return std::sin(x[0]); });
    const Vector df = apply_to_function(LinearDiffOp::partial(1, 0, 1), f, grid);
    const Vector exact = grid.evaluate([](PointRef x) { return std::cos(x[0]); });
    EXPECT_LT((df - exact).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(ApplyToFunction, SecondDerivativeOfQuadraticIsExact) {
    const auto grid = make_grid(BoxGeometry::interval(-1.0, 1.0), {11});
    const Vector f = grid.evaluate([](PointRef x) { return x[0] * x[0]; });
    const Vector d2 = apply_to_function(LinearDiffOp::partial(1, 0, 2), f, grid);
    for (Eigen::Index i = 0; i < d2.size(); ++i) EXPECT_NEAR(d2[i], 2.0, 1e-10);
}

TEST(ApplyToFunction, IdentityIsExact) {
    const auto grid = make_grid(BoxGeometry::interval(0.0, 1.0), {7});
    const Vector f = grid.evaluate([](PointRef x) { return std::exp(x[0]); });
    EXPECT_EQ(apply_to_function(LinearDiffOp::identity(1), f, grid), f);
}

TEST(ApplyToFunction, HeatSourceConsistency) {
    for (double a : {1.0 / 16, 1.0 / 32}) {
        HeatProblem heat{a};
        const auto grid = make_grid(heat.geometry(), {201, 101});
        const Vector u = grid.evaluate([&](PointRef x) { return heat.exact(x[0], x[1]); });
        const Vector lu = apply_to_function(heat.op(), u, grid);
        const Vector src = grid.evaluate([&](PointRef x) { return heat.source(x[0], x[1]); });
        EXPECT_LT((lu - src).cwiseAbs().maxCoeff(), 1e-4) << "a = " << a;
    }
}

TEST(ApplyToFunction, GridTooSmall) {
    const auto grid = make_grid(BoxGeometry::interval(0.0, 1.0), {4});
    EXPECT_THROW(apply_to_function(LinearDiffOp::partial(1, 0, 2), Vector::Zero(4), grid), CapabilityError);
    EXPECT_THROW(apply_to_function(LinearDiffOp::identity(1), Vector::Zero(3), grid), DomainError);
}

TEST(ApplyToFunction, Linearity) {
    const auto grid = make_grid(BoxGeometry::space_time_slab(-1.0, 1.0, 1.0), {21, 11});
    const auto op = HeatProblem{1.0 / 16}.op();
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n;
    Vector f(grid.size()), g(grid.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) {
        f[i] = n(rng);
        g[i] = n(rng);
    }
    const Vector lhs = apply_to_function(op, 2.5 * f - 0.75 * g, grid);
    const Vector rhs = 2.5 * apply_to_function(op, f, grid) - 0.75 * apply_to_function(op, g, grid);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
}

TEST(ApplyToFunction, VariableCoefficient) {
    const auto grid = make_grid(BoxGeometry::interval(0.0, 1.0), {101});
    DiffTerm t{{1}, 1.0, [](PointRef x) { return x[0]; }};
    const LinearDiffOp op(1, {t});
    const Vector f = grid.evaluate([](PointRef x) { return x[0] * x[0] * x[0]; });
    const Vector lf = apply_to_function(op, f, grid);
    for (Eigen::Index i = 0; i < lf.size(); ++i) {
        const double x = grid.bulk(0, i);
        EXPECT_NEAR(lf[i], 3.0 * x * x * x, 1e-10);
    }
}

TEST(Grid, Invariants) {
    const auto grid = make_grid(BoxGeometry::space_time_slab(-1.0, 1.0, 1.0), {9, 5});
    EXPECT_EQ(grid.size(), 45);
    EXPECT_NEAR(grid.quad_weights.sum(), 2.0, 1e-14);
    EXPECT_NEAR(grid.measure_weights().sum(), 1.0, 1e-14);
    EXPECT_NEAR(grid.boundary_weights.sum(), grid.geometry.boundary_measure(), 1e-14);
    EXPECT_NEAR(grid.geometry.boundary_measure(), 4.0, 0.0);
    EXPECT_EQ(grid.boundary_size(), 5 + 5 + 7);
    for (Eigen::Index b = 0; b < grid.boundary_size(); ++b) EXPECT_TRUE(grid.geometry.on_boundary(grid.boundary.col(b)));
    EXPECT_EQ(grid.bulk(0, grid.size() - 1), 1.0);
    EXPECT_EQ(grid.bulk(1, grid.size() - 1), 1.0);
}

TEST(Grid, HalfLineBoundaryIsOrigin) {
    const auto grid = make_grid(BoxGeometry::half_line(10.0), {11});
    ASSERT_EQ(grid.boundary_size(), 1);
    EXPECT_EQ(grid.boundary(0, 0), 0.0);
    EXPECT_EQ(grid.boundary_measure_weights()[0], 1.0);
}

TEST(Grid, InvalidGeometry) {
    EXPECT_THROW(BoxGeometry::interval(1.0, 1.0), DomainError);
    EXPECT_THROW(make_grid(BoxGeometry::interval(0.0, 1.0), {1}), DomainError);
}

TEST(ApplyToKernel, DerivativeOfCosineKernelInFirstArgument) {
    const auto op = LinearDiffOp::partial(1, 0, 1);
    const double v = apply_to_kernel(op, cosine(), KernelSide::Left, pt({0.3}), pt({0.8}));
    EXPECT_NEAR(v, -0.0318023656768279228170484, 1e-14);
}

TEST(ApplyToKernel, BothSidesOfDerivative) {
    const auto op = LinearDiffOp::partial(1, 0, 1);
    EXPECT_NEAR(apply_to_kernel(op, cosine(), KernelSide::Both, pt({0.3}), pt({0.8})), 0.154898976125030109960733,
                1e-14);
    const auto op2 = LinearDiffOp::partial(1, 0, 2);
    EXPECT_NEAR(apply_to_kernel(op2, cosine(), KernelSide::Both, pt({0.3}), pt({0.8})),
                -0.0294954143480450483355699, 1e-14);
}

TEST(ApplyToKernel, DerivativeAtOriginVanishes) {
    const auto op = LinearDiffOp::partial(1, 0, 1);
    EXPECT_NEAR(apply_to_kernel(op, cosine(), KernelSide::Left, pt({0.0}), pt({0.0})), 0.0, 1e-16);
}

TEST(ApplyToKernel, RightSideIsTransposeOfLeft) {
    const auto op = HeatProblem{1.0 / 16}.op();
    const auto k = KernelSpec::with_defaults(KernelFamily::SquaredExponential, 0.5);
    const Point x = pt({0.2, 0.4}), y = pt({-0.5, 0.9});
    EXPECT_NEAR(apply_to_kernel(op, k, KernelSide::Left, x, y), apply_to_kernel(op, k, KernelSide::Right, y, x),
                1e-14);
}

TEST(ApplyToKernel, AnalyticMatchesGridDifferentiation) {
    const auto grid = make_grid(BoxGeometry::interval(-2.0, 2.0), {401});
    const auto op = LinearDiffOp::partial(1, 0, 2) + LinearDiffOp::partial(1, 0, 1) * 0.5;
    const Point y = pt({0.4});
    const Vector kcol = grid.evaluate([&](PointRef x) { return eval_kernel(cosine(), x, y); });
    const Vector fd = apply_to_function(op, kcol, grid);
    for (Eigen::Index i = 0; i < grid.size(); i += 20) {
        EXPECT_NEAR(fd[i], apply_to_kernel(op, cosine(), KernelSide::Left, grid.bulk.col(i), y), 1e-7);
    }
}

TEST(ApplyToKernel, ErfUsesFiniteDifferences) {
    const auto k = KernelSpec::with_defaults(KernelFamily::ErfArcsine);
    const auto op = LinearDiffOp::partial(1, 0, 1);
    const double h = 1e-5;
    const double fd = (eval_kernel(k, 0.3 + h, -0.7) - eval_kernel(k, 0.3 - h, -0.7)) / (2 * h);
    EXPECT_NEAR(apply_to_kernel(op, k, KernelSide::Left, pt({0.3}), pt({-0.7})), fd, 1e-8);
}

TEST(OperatorGram, LklIsPsd) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto op = HeatProblem{1.0 / 16}.op();
    const auto k = KernelSpec::with_defaults(KernelFamily::CosineFeature, 0.5);
    for (int trial = 0; trial < 10; ++trial) {
        PointSet p(2, 15);
        for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
        const Matrix g = operator_gram(k, &op, &op, p, p);
        EXPECT_LT((g - g.transpose()).cwiseAbs().maxCoeff(), 1e-12 * g.cwiseAbs().maxCoeff());
        const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(g).eigenvalues().minCoeff();
        EXPECT_GE(lmin, -1e-10 * g.trace());
    }
}

TEST(OperatorGram, DimensionMismatch) {
    const auto op = LinearDiffOp::partial(2, 0, 1);
    EXPECT_THROW(apply_to_kernel(op, cosine(), KernelSide::Left, pt({0.0}), pt({0.0})), DomainError);
    EXPECT_THROW(LinearDiffOp(1, {{{1, 0}, 1.0, {}}}), DomainError);
}

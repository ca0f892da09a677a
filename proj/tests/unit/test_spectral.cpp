#include <gtest/gtest.h>

#include "pinn_spectral/nie.hpp"
#include "pinn_spectral/problems.hpp"
#include "pinn_spectral/spectral.hpp"

using namespace pinn_spectral;

namespace {

KernelSpec se(double l = 1.0) { return KernelSpec::with_defaults(KernelFamily::SquaredExponential, l); }

ProblemData sine_problem(const KernelSpec& k) {
    ProblemData p;
    p.op = LinearDiffOp::partial(1, 0, 1);
    p.kernel = k;
    p.source = [](PointRef x) { return std::cos(x[0]); };
    p.boundary = [](PointRef x) { return 0.2 + 0.1 * x[0]; };
    return p;
}

DomainGrid origin_grid() { return make_grid(BoxGeometry::half_line(4.0), {41}); }

}  // namespace

TEST(Khat, ZeroEtaLeavesKernelUnchanged) {
    const auto grid = origin_grid();
    const auto k = KernelSpec::with_defaults(KernelFamily::CosineFeature);
    EXPECT_EQ(compute_khat(k, grid, 0.0), eval_gram(k, grid.bulk));
    EXPECT_TRUE(boundary_corrected_kernel(k, grid, 0.0).trivial());
}

TEST(Khat, SinglePointClosedForm) {
    const auto k = KernelSpec::with_defaults(KernelFamily::CosineFeature);
    const auto grid = origin_grid();
    const double eta = 100.0;
    const Matrix kh = compute_khat(k, grid, eta);
    const double k00 = eval_kernel(k, 0.0, 0.0);
    EXPECT_NEAR(kh(0, 0), k00 / (1.0 + eta * k00), 1e-14);
    for (Eigen::Index i : {3, 10, 40}) {
        for (Eigen::Index j : {0, 7, 25}) {
            const double x = grid.bulk(0, i), y = grid.bulk(0, j);
            const double expected =
                eval_kernel(k, x, y) - eval_kernel(k, x, 0.0) * eval_kernel(k, 0.0, y) * eta / (1.0 + eta * k00);
            EXPECT_NEAR(kh(i, j), expected, 1e-14);
        }
    }
}

TEST(Khat, BoundaryVarianceScalesInverselyWithEta) {
    const auto k = KernelSpec::with_defaults(KernelFamily::CosineFeature);
    const auto grid = origin_grid();
    const double ratio = compute_khat(k, grid, 1e4)(0, 0) / compute_khat(k, grid, 8e4)(0, 0);
    EXPECT_NEAR(ratio, 8.0, 0.01);
}

TEST(Khat, SmallEtaExpansion) {
    const auto k = KernelSpec::with_defaults(KernelFamily::CosineFeature);
    const auto grid = origin_grid();
    const double eta = 1e-3;
    const Matrix kh = compute_khat(k, grid, eta);
    const double k00 = eval_kernel(k, 0.0, 0.0);
    for (Eigen::Index i : {0, 5, 20}) {
        const double x = grid.bulk(0, i), y = grid.bulk(0, 12);
        const double kk = eval_kernel(k, x, 0.0) * eval_kernel(k, 0.0, y);
        const double second_order = eval_kernel(k, x, y) - eta * kk + eta * eta * kk * k00;
        EXPECT_NEAR(kh(i, 12), second_order, 1e-10);
    }
}

TEST(Khat, PositiveSemidefiniteOnHeatGrid) {
    const auto grid = make_grid(HeatProblem::geometry(), {17, 9});
    const auto k = scale_initialization(KernelSpec::with_defaults(KernelFamily::ErfArcsine), 2.0);
    for (double eta : {1.0, 100.0, 1e4}) {
        const Matrix kh = compute_khat(k, grid, eta);
        const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(kh).eigenvalues().minCoeff();
        EXPECT_GE(lmin, -1e-10 * kh.trace()) << "eta = " << eta;
    }
}

TEST(Khat, ResponseAndErrors) {
    const auto k = KernelSpec::with_defaults(KernelFamily::CosineFeature);
    const auto bck = boundary_corrected_kernel(k, origin_grid(), 100.0);
    const double k00 = eval_kernel(k, 0.0, 0.0);
    EXPECT_NEAR(bck.response(Vector::Constant(1, 2.0))[0], 2.0 * 100.0 / (1.0 + 100.0 * k00), 1e-11);
    EXPECT_THROW(bck.response(Vector::Zero(2)), DomainError);
    EXPECT_THROW(boundary_corrected_kernel(k, origin_grid(), -1.0), DomainError);
    EXPECT_THROW(BoundaryCorrectedKernel(k, PointSet(1, 0), Vector(), 1.0), DomainError);
}

TEST(Nystrom, SquaredExponentialOnInterval) {
    const auto grid = make_grid(BoxGeometry::interval(0.0, 4.0), {81});
    const auto dec = eig_kernel(se(), grid);
    const std::vector<double> expected{0.20792351, 0.1206791, 0.0501641, 0.01554009};
    for (std::size_t k = 0; k < expected.size(); ++k) EXPECT_NEAR(dec.eigvals[k], expected[k], 1e-7);
    EXPECT_NEAR(dec.eigvals.sum(), 0.39894228040143254, 1e-12);
    for (Eigen::Index k = 1; k < dec.size(); ++k) EXPECT_LE(dec.eigvals[k], dec.eigvals[k - 1]);
}

TEST(Nystrom, WeightedOrthonormality) {
    const auto grid = make_grid(BoxGeometry::interval(0.0, 4.0), {41});
    const auto dec = eig_kernel(se(0.7), grid);
    const Matrix gram = dec.eigfuns.transpose() * grid.measure_weights().asDiagonal() * dec.eigfuns;
    EXPECT_LT((gram - Matrix::Identity(41, 41)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_GT(dec.retained, 5);
    EXPECT_LE(dec.retained, dec.size());
}

TEST(Nystrom, EigenEquation) {
    const auto grid = make_grid(BoxGeometry::interval(0.0, 4.0), {41});
    const Matrix k = eval_gram(se(), grid.bulk);
    const auto dec = nystrom(k, grid.measure_weights());
    for (Eigen::Index j = 0; j < 5; ++j) {
        const Vector lhs = k * (grid.measure_weights().asDiagonal() * dec.eigfuns.col(j));
        EXPECT_LT((lhs - dec.eigvals[j] * dec.eigfuns.col(j)).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Nystrom, Errors) {
    const Vector w = Vector::Constant(2, 0.5);
    Matrix a(2, 2);
    a << 1.0, 0.0, 0.5, 1.0;
    EXPECT_THROW(nystrom(a, w), DomainError);
    a << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(nystrom(a, w), DomainError);
    EXPECT_THROW(nystrom(Matrix::Identity(2, 2), Vector::Constant(3, 1.0 / 3)), DomainError);
    EXPECT_THROW(nystrom(Matrix::Identity(2, 2), Vector::Zero(2)), DomainError);
}

TEST(Lkhatl, AnalyticAndGridRealizationsAgree) {
    const auto grid = make_grid(BoxGeometry::interval(0.0, 2.0 * std::numbers::pi), {121});
    const auto op = LinearDiffOp::partial(1, 0, 1);
    const auto a = eig_lkhatl(op, se(), grid, 10.0, OperatorRealization::Analytic);
    const auto g = eig_lkhatl(op, se(), grid, 10.0, OperatorRealization::Grid);
    for (Eigen::Index k = 0; k < 6; ++k) EXPECT_NEAR(a.eigvals[k], g.eigvals[k], 1e-4 * a.eigvals[0]);
}

TEST(Lkhatl, HeatGridRealizationIsPsd) {
    const auto grid = make_grid(HeatProblem::geometry(), {33, 17});
    const auto k = scale_initialization(KernelSpec::with_defaults(KernelFamily::ErfArcsine), 2.0);
    EXPECT_EQ(resolve(OperatorRealization::Auto, k), OperatorRealization::Grid);
    EXPECT_EQ(resolve(OperatorRealization::Auto, se()), OperatorRealization::Analytic);
    EXPECT_NO_THROW(eig_lkhatl(HeatProblem::op(), k, grid, 100.0));
    EXPECT_THROW(operator_realization_from_string("spectral"), DomainError);
}

TEST(AugmentedSource, NoBoundaryTermGivesSource) {
    const auto grid = make_grid(BoxGeometry::interval(0.0, 3.0), {31});
    const auto p = sine_problem(se());
    const Vector phi = grid.evaluate(p.source);
    EXPECT_EQ(augmented_source(p, grid, 0.0), phi);
    auto no_g = p;
    no_g.boundary = nullptr;
    EXPECT_EQ(augmented_source(no_g, grid, 10.0), phi);
}

TEST(AugmentedSource, SubtractsBoundaryResponse) {
    const auto grid = make_grid(BoxGeometry::interval(0.0, 3.0), {31});
    const auto p = sine_problem(se());
    const double eta = 50.0;
    const auto bck = boundary_corrected_kernel(p.kernel, grid, eta);
    const Vector u = bck.response(grid.evaluate_boundary(p.boundary));
    Vector expected = grid.evaluate(p.source);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        for (Eigen::Index j = 0; j < grid.boundary_size(); ++j) {
            expected[i] -= apply_to_kernel(p.op, p.kernel, KernelSide::Left, grid.bulk.col(i), grid.boundary.col(j)) * u[j];
        }
    }
    EXPECT_LT((augmented_source(p, grid, eta, OperatorRealization::Analytic) - expected).cwiseAbs().maxCoeff(), 1e-12);
    const Vector fd = augmented_source(p, grid, eta, OperatorRealization::Grid);
    EXPECT_LT((fd - expected).cwiseAbs().maxCoeff(), 1e-4);
}

class FilterTest : public ::testing::Test {
protected:
    void SetUp() override {
        grid = make_grid(BoxGeometry::interval(0.0, 2.0 * std::numbers::pi), {61});
        problem = sine_problem(se());
        lkhatl = lkhatl_matrix(problem.op, problem.kernel, grid, eta_b);
        dec = nystrom(lkhatl, grid.measure_weights());
        phi_hat = augmented_source(problem, grid, eta_b);
        dec.attach_source(phi_hat);
    }

    DomainGrid grid;
    ProblemData problem;
    Matrix lkhatl;
    SpectralDecomposition dec;
    Vector phi_hat;
    double eta_b = 30.0;
};

TEST_F(FilterTest, ZeroEtaReturnsNegativeSource) {
    EXPECT_LT((discrepancy_filter(dec, phi_hat, 0.0) + phi_hat).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(discrepancy_filter_direct(lkhatl, grid.measure_weights(), phi_hat, 0.0), -phi_hat);
}

TEST_F(FilterTest, SingleModeIsScaled) {
    const double eta = 7.0;
    for (Eigen::Index k : {0, 2, 5}) {
        const Vector mode = dec.eigfuns.col(k);
        const Vector out = discrepancy_filter(dec, mode, eta);
        EXPECT_LT((out + mode / (1.0 + dec.eigvals[k] * eta)).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST_F(FilterTest, SpectralAndDirectAgree) {
    for (double eta : {0.5, 10.0, 1000.0}) {
        const Vector a = discrepancy_filter(dec, phi_hat, eta);
        const Vector b = discrepancy_filter_direct(lkhatl, grid.measure_weights(), phi_hat, eta);
        EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, phi_hat.cwiseAbs().maxCoeff()));
    }
    EXPECT_THROW(discrepancy_filter(dec, phi_hat, -1.0), DomainError);
}

TEST_F(FilterTest, MatchesGridNieResidual) {
    const double eta = 25.0;
    const auto sol = nie_solve_grid(problem, grid, eta, eta_b);
    const Vector residual = apply_to_function(problem.op, sol.f0_vals, grid) - grid.evaluate(problem.source);
    const Vector grid_pred = discrepancy_filter(nystrom(lkhatl_matrix(problem.op, problem.kernel, grid, eta_b,
                                                                      OperatorRealization::Grid),
                                                        grid.measure_weights()),
                                                augmented_source(problem, grid, eta_b, OperatorRealization::Grid), eta);
    const double scale = grid.evaluate(problem.source).cwiseAbs().maxCoeff();
    EXPECT_LT((residual - grid_pred).cwiseAbs().maxCoeff(), 5e-3 * scale);
}

TEST_F(FilterTest, FigureOfMerit) {
    EXPECT_NEAR(figure_of_merit_qn(dec, 0.0), 1.0, 1e-14);
    double prev = 1.0;
    for (double eta : {1.0, 10.0, 100.0, 1e4}) {
        const double q = figure_of_merit_qn(dec, eta);
        EXPECT_LT(q, prev);
        EXPECT_GT(q, 0.0);
        prev = q;
    }
    SpectralDecomposition bare = dec;
    bare.coeffs = Vector();
    EXPECT_THROW(figure_of_merit_qn(bare, 1.0), DomainError);
}

TEST_F(FilterTest, QnEqualsFilteredEnergy) {
    const double eta = 40.0;
    double num = 0.0;
    for (Eigen::Index k = 0; k < dec.size(); ++k) {
        const double lam = k < dec.retained ? dec.eigvals[k] : 0.0;
        num += dec.coeffs[k] * dec.coeffs[k] / (1.0 + lam * eta);
    }
    EXPECT_NEAR(figure_of_merit_qn(dec, eta), num / dec.coeffs.squaredNorm(), 1e-14);
}

TEST(CumulativeSpectral, MonotoneAndComplete) {
    const auto grid = make_grid(BoxGeometry::interval(-1.0, 1.0), {41});
    const auto dec = eig_kernel(se(0.5), grid);
    const Vector f = grid.evaluate([](PointRef x) { return std::exp(-x[0] * x[0]) * std::sin(3.0 * x[0]); });
    const Vector a = cumulative_spectral_curve(dec, f);
    ASSERT_EQ(a.size(), dec.size() + 1);
    EXPECT_EQ(a[0], 0.0);
    for (Eigen::Index k = 1; k < a.size(); ++k) EXPECT_GE(a[k], a[k - 1]);
    EXPECT_NEAR(a[a.size() - 1], 1.0, 1e-9);
    EXPECT_EQ(cumulative_spectral(dec, f, 3), a[3]);
    EXPECT_THROW(cumulative_spectral(dec, f, dec.size() + 1), DomainError);
    EXPECT_THROW(cumulative_spectral_curve(dec, Vector::Zero(41)), DomainError);
}

TEST(CumulativeSpectral, EigenfunctionIsCapturedByItsMode) {
    const auto grid = make_grid(BoxGeometry::interval(-1.0, 1.0), {41});
    const auto dec = eig_kernel(se(0.5), grid);
    const Vector a = cumulative_spectral_curve(dec, dec.eigfuns.col(2));
    EXPECT_NEAR(a[2], 0.0, 1e-12);
    EXPECT_NEAR(a[3], 1.0, 1e-12);
    EXPECT_EQ(spectral_crossing(a, 0.99), 3);
    EXPECT_EQ(spectral_crossing(a, 2.0), -1);
}

TEST(CumulativeSpectral, SmootherTargetsNeedFewerModes) {
    const auto grid = make_grid(BoxGeometry::interval(-1.0, 1.0), {81});
    const auto dec = eig_kernel(se(0.5), grid);
    const Vector wide = grid.evaluate([](PointRef x) { return std::exp(-x[0] * x[0] / (2.0 / 16)) * sin_pi(x[0]); });
    const Vector narrow = grid.evaluate([](PointRef x) { return std::exp(-x[0] * x[0] / (2.0 / 32)) * sin_pi(x[0]); });
    EXPECT_LT(spectral_crossing(cumulative_spectral_curve(dec, wide), 0.99),
              spectral_crossing(cumulative_spectral_curve(dec, narrow), 0.99));
}

#include <cmath>

#include <gtest/gtest.h>

#include "graphfilt/cg.hpp"
#include "graphfilt/experiments.hpp"

using namespace graphfilt;

namespace {

ArmaFilter make(std::initializer_list<double> a, std::initializer_list<double> b) {
    Vec av(static_cast<Eigen::Index>(a.size())), bv(static_cast<Eigen::Index>(b.size()));
    Eigen::Index i = 0;
    for (double v : a) av(i++) = v;
    i = 0;
    for (double v : b) bv(i++) = v;
    return ArmaFilter(av, bv);
}

ShiftOperator laplacian(std::uint64_t seed, std::size_t n = 60) {
    return normalize(build_er_graph(n, 0.15, seed), ShiftKind::normalized_laplacian);
}

}  // namespace

TEST(ArmaFilter, LeadingCoefficientMustBeOne) {
    EXPECT_THROW(make({2.0, 1.0}, {1.0}), Error);
    const auto f = ArmaFilter::normalized((Vec(2) << 2.0, 1.0).finished(), (Vec(1) << 4.0).finished());
    EXPECT_EQ(f.a()(0), 1.0);
    EXPECT_EQ(f.b()(0), 2.0);
}

TEST(ArmaResponse, HandValue) {
    const auto f = make({1.0, -0.5}, {1.0});
    CVec l(2);
    l << cplx(0.0, 0.0), cplx(1.0, 0.0);
    const CVec g = arma_response(f, l);
    EXPECT_NEAR(g(0).real(), 1.0, 1e-15);
    EXPECT_NEAR(g(1).real(), 2.0, 1e-15);
}

TEST(ArmaResponse, PoleOnGridRaisesWithIndex) {
    const auto f = make({1.0, -1.0}, {1.0});
    const auto grid = uniform_real_grid(3);
    try {
        arma_response(f, grid);
        FAIL();
    } catch (const InstabilityError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::instability);
        EXPECT_EQ(e.index(), 1);
    }
    const auto rep = check_stability(f, grid);
    EXPECT_FALSE(rep.stable);
    ASSERT_EQ(rep.offending.size(), 1u);
    EXPECT_EQ(rep.offending[0], 1);
}

TEST(ArmaResponse, ConjugateSymmetricOnDisc) {
    const auto f = make({1.0, 0.3, -0.1}, {0.5, 0.2});
    const auto grid = complex_disc_grid(40);
    const CVec g = arma_response(f, grid);
    EXPECT_NO_THROW(check_conjugate_symmetric(grid, g, 1e-12));
}

TEST(ArmaDirect, MatchesSpectralOracle) {
    const auto op = normalize(geometric_graphs(32, 6, 4).directed, ShiftKind::normalized_adjacency);
    const auto dec = eigendecompose(op);
    const auto f = make({1.0, 0.4, 0.1}, {0.7, -0.2, 0.05});
    Rng rng(1);
    const Vec x = rng.normal_vector(32);
    const Vec y = arma_apply_direct(f, op, x);
    const CVec ref = spectral_filter(dec, arma_response(f, dec.lambdas), x);
    EXPECT_LE((y.cast<cplx>() - ref).norm(), 1e-9 * ref.norm());
}

TEST(ArmaDirect, IdentityFilter) {
    const auto op = laplacian(1, 20);
    Rng rng(2);
    const Vec x = rng.normal_vector(20);
    EXPECT_EQ((arma_apply_direct(ArmaFilter(), op, x) - x).norm(), 0.0);
}

TEST(ArmaDirect, SingularDenominator) {
    // the 3-node path Laplacian has eigenvalue 1, so 1 - L is singular
    const auto op = normalize(Graph(3, {{0, 1, 1}, {1, 0, 1}, {1, 2, 1}, {2, 1, 1}}, false),
                              ShiftKind::normalized_laplacian);
    try {
        arma_apply_direct(make({1.0, -1.0}, {1.0}), op, Vec::Ones(3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::singular);
    }
}

TEST(ArmaJson, RoundTrip) {
    const auto f = make({1.0, -0.25}, {0.5, 0.125, 2.0});
    const auto back = arma_from_json(arma_to_json(f));
    EXPECT_EQ((back.a() - f.a()).norm(), 0.0);
    EXPECT_EQ((back.b() - f.b()).norm(), 0.0);
    EXPECT_THROW(arma_from_json(nlohmann::json{{"type", "arma"}, {"a", {2.0}}, {"b", {1.0}}}), Error);
}

TEST(Cg, SymmetricMatchesDirect) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto op = laplacian(seed);
        const auto f = make({1.0, 0.5, 0.1}, {1.0, -0.3});
        Rng rng(seed);
        const Vec x = rng.normal_vector(60);
        CgConfig cfg;
        cfg.epsilon = 1e-12;
        cfg.max_iter = 500;
        CgTrace tr;
        const Vec y = arma_apply_cg(f, op, x, cfg, &tr);
        const Vec ref = arma_apply_direct(f, op, x);
        EXPECT_LE((y - ref).norm(), 1e-9 * ref.norm());
        EXPECT_TRUE(tr.converged);
        EXPECT_FALSE(tr.normal_equations);
        EXPECT_EQ(tr.shift_applications, f.Q() + f.P() * tr.iterations + f.P());
    }
}

TEST(Cg, NonsymmetricUsesNormalEquations) {
    const auto op = normalize(geometric_graphs(32, 6, 9).directed, ShiftKind::normalized_adjacency);
    const auto f = make({1.0, 0.3}, {1.0, 0.5});
    Rng rng(3);
    const Vec x = rng.normal_vector(32);
    CgConfig cfg;
    cfg.epsilon = 1e-12;
    cfg.max_iter = 1000;
    CgTrace tr;
    const Vec y = arma_apply_cg(f, op, x, cfg, &tr);
    const Vec ref = arma_apply_direct(f, op, x);
    EXPECT_TRUE(tr.normal_equations);
    EXPECT_LE((y - ref).norm(), 1e-8 * ref.norm());
    EXPECT_EQ(tr.shift_applications, f.Q() + 2 * f.P() * tr.iterations + 2 * f.P());
}

TEST(Cg, IterationCapRespectedAndTraceLength) {
    const auto op = laplacian(11);
    const auto f = make({1.0, 0.8, 0.2}, {1.0});
    Rng rng(4);
    CgConfig cfg;
    cfg.epsilon = 1e-14;
    cfg.max_iter = 3;
    CgTrace tr;
    arma_apply_cg(f, op, rng.normal_vector(60), cfg, &tr);
    EXPECT_EQ(tr.iterations, 3);
    EXPECT_EQ(tr.residual_history.size(), 4u);
    EXPECT_FALSE(tr.converged);
    const auto csv = trace_to_csv(tr);
    EXPECT_EQ(csv.rfind("iter,residual_norm\n", 0), 0u);
}

TEST(Cg, ResidualReachesTolerance) {
    const auto op = laplacian(12);
    const auto f = make({1.0, 0.5}, {1.0});
    Rng rng(5);
    CgConfig cfg;
    cfg.epsilon = 1e-6;
    CgTrace tr;
    arma_apply_cg(f, op, rng.normal_vector(60), cfg, &tr);
    ASSERT_TRUE(tr.converged);
    EXPECT_LE(tr.residual_history.back(), 1e-6 * tr.residual_history.front());
}

TEST(Cg, IndefiniteDenominatorRestartsOnNormalEquations) {
    // 1 - 1.5 L has eigenvalues of both signs on the Laplacian spectrum
    const auto op = laplacian(13);
    const auto f = make({1.0, -1.5}, {1.0});
    Rng rng(6);
    const Vec x = rng.normal_vector(60);
    CgConfig cfg;
    cfg.epsilon = 1e-12;
    cfg.max_iter = 2000;
    CgTrace tr;
    const Vec y = arma_apply_cg(f, op, x, cfg, &tr);
    EXPECT_TRUE(tr.curvature_restart);
    EXPECT_TRUE(tr.normal_equations);
    const Vec ref = arma_apply_direct(f, op, x);
    EXPECT_LE((y - ref).norm(), 1e-6 * ref.norm());
}

TEST(Cg, InitialGuessAndValidation) {
    const auto op = laplacian(14);
    const auto f = make({1.0, 0.5}, {1.0});
    Rng rng(7);
    const Vec x = rng.normal_vector(60);
    const Vec ref = arma_apply_direct(f, op, x);
    CgConfig cfg;
    cfg.epsilon = 1e-12;
    cfg.y0 = ref + 1e-3 * Vec::Ones(60);
    EXPECT_LE((arma_apply_cg(f, op, x, cfg) - ref).norm(), 1e-9 * ref.norm());

    CgConfig bad;
    bad.epsilon = 0.0;
    EXPECT_THROW(arma_apply_cg(f, op, x, bad), Error);
    CgConfig wrong;
    wrong.y0 = Vec::Zero(3);
    EXPECT_THROW(arma_apply_cg(f, op, x, wrong), Error);
}

TEST(Cg, IdentitySystemConvergesInOneStep) {
    LinearMap A = [](const Vec& v) { return v; };
    LinearMap residual = [](const Vec& v) -> Vec { return Vec::Ones(3) - v; };
    Vec y = Vec::Zero(3);
    CgTrace tr;
    EXPECT_EQ(conjugate_gradient(A, residual, y, 1e-12, 10, 1, 1, tr), CgStatus::converged);
    EXPECT_EQ(tr.iterations, 1);
    EXPECT_EQ(tr.shift_applications, 2);
}

TEST(Cg, NegativeCurvatureReported) {
    LinearMap A = [](const Vec& v) { return Vec(-v); };
    LinearMap residual = [](const Vec& v) -> Vec { return Vec::Ones(3) + v; };
    Vec y = Vec::Zero(3);
    CgTrace tr;
    EXPECT_EQ(conjugate_gradient(A, residual, y, 1e-12, 10, 1, 1, tr), CgStatus::indefinite);
}

TEST(Cg, GrowingResidualRaisesDivergence) {
    // I + 100 K with K skew: positive curvature, but far from symmetric
    const Eigen::Index n = 10;
    Mat K = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        K(i, i + 1) = 1.0;
        K(i + 1, i) = -1.0;
    }
    const Mat M = Mat::Identity(n, n) + 100.0 * K;
    Rng rng(8);
    const Vec rhs = rng.normal_vector(n);
    LinearMap A = [&](const Vec& v) -> Vec { return M * v; };
    LinearMap residual = [&](const Vec& v) -> Vec { return rhs - M * v; };
    Vec y = Vec::Zero(n);
    CgTrace tr;
    try {
        conjugate_gradient(A, residual, y, 1e-14, 200, 1, 1, tr);
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::divergence);
        EXPECT_GE(e.trace().iterations, 5);
    }
}

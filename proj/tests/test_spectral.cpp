#include <cmath>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "graphfilt/experiments.hpp"
#include "graphfilt/spectral.hpp"

using namespace graphfilt;

namespace {

ShiftOperator directed_knn(std::uint64_t seed) {
    return normalize(geometric_graphs(32, 6, seed).directed, ShiftKind::normalized_adjacency);
}

}  // namespace

TEST(PairConjugates, AveragesNearConjugates) {
    CVec l(4);
    l << cplx(0.5, 0.3), cplx(1.0, 0.0), cplx(0.5, -0.3 + 1e-10), cplx(-0.2, 1e-12);
    const auto pr = pair_conjugates(l);
    ASSERT_EQ(pr.pairs.size(), 1u);
    EXPECT_EQ(pr.pairs[0].first, 0);
    EXPECT_EQ(pr.pairs[0].second, 2);
    EXPECT_EQ(l(2), std::conj(l(0)));
    EXPECT_EQ(l(3).imag(), 0.0);
    EXPECT_EQ(pr.reals.size(), 2u);
}

TEST(PairConjugates, LoneComplexValueRejected) {
    CVec l(2);
    l << cplx(0.5, 0.3), cplx(1.0, 0.0);
    try {
        pair_conjugates(l);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::conjugate_symmetry);
    }
}

TEST(Eigendecompose, SymmetricIsOrthonormal) {
    const auto op = normalize(build_er_graph(40, 0.2, 4), ShiftKind::normalized_laplacian);
    const auto dec = eigendecompose(op);
    EXPECT_TRUE(dec.symmetric);
    EXPECT_LE((dec.modes.adjoint() * dec.modes - CMat::Identity(40, 40)).norm(), 1e-10);
    EXPECT_LE(dec.residual, 1e-12);
}

TEST(Eigendecompose, DirectedReconstructsWithExactConjugates) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto op = directed_knn(seed);
        const auto dec = eigendecompose(op);
        EXPECT_LE(dec.residual, 1e-9);
        for (auto [p, q] : dec.pairing.pairs) {
            EXPECT_EQ(dec.lambdas(q), std::conj(dec.lambdas(p)));
            EXPECT_GT(dec.lambdas(p).imag(), 0.0);
            EXPECT_LE((dec.modes.col(q) - dec.modes.col(p).conjugate()).norm(), 0.0);
        }
        for (auto r : dec.pairing.reals) EXPECT_EQ(max_abs_imag(dec.modes.col(r)), 0.0);
        EXPECT_LE((dec.inv_modes * dec.modes - CMat::Identity(32, 32)).norm(), 1e-8);
    }
}

TEST(Eigendecompose, JordanBlockIsNotDiagonalizable) {
    Mat J(2, 2);
    J << 0, 1, 0, 0;
    try {
        eigendecompose(ShiftOperator::custom(J));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::non_diagonalizable);
    }
}

TEST(Gft, RoundTrip) {
    const auto dec = eigendecompose(directed_knn(3));
    Rng rng(2);
    const Vec x = rng.normal_vector(32);
    const CVec back = igft(dec, gft(dec, x));
    EXPECT_LE((back - x.cast<cplx>()).norm(), 1e-10 * x.norm());
}

TEST(Gft, RealSignalHasConjugateSpectrum) {
    const auto dec = eigendecompose(directed_knn(5));
    Rng rng(3);
    const CVec xh = gft(dec, rng.normal_vector(32));
    for (auto [p, q] : dec.pairing.pairs) EXPECT_LE(std::abs(xh(q) - std::conj(xh(p))), 1e-12);
}

TEST(SpectralFilter, AllPassIsIdentity) {
    const auto dec = eigendecompose(directed_knn(6));
    Rng rng(4);
    const Vec x = rng.normal_vector(32);
    const CVec y = spectral_filter(dec, CVec::Ones(32), x);
    EXPECT_LE((y - x.cast<cplx>()).norm(), 1e-10 * x.norm());
}

TEST(SpectralFilter, ResponseLambdaMatchesShift) {
    const auto op = directed_knn(7);
    const auto dec = eigendecompose(op);
    Rng rng(5);
    const Vec x = rng.normal_vector(32);
    const CVec y = spectral_filter(dec, dec.lambdas, x);
    EXPECT_LE((y - (op.dense() * x).cast<cplx>()).norm(), 1e-10 * x.norm());
}

TEST(OrderFrequencies, LaplacianAscendingAndPairsAdjacent) {
    const auto op = normalize(build_er_graph(30, 0.3, 1), ShiftKind::normalized_laplacian);
    const auto dec = eigendecompose(op);
    const auto perm = order_frequencies(dec, ShiftKind::normalized_laplacian);
    for (std::size_t i = 1; i < perm.size(); ++i)
        EXPECT_LE(dec.lambdas(perm[i - 1]).real(), dec.lambdas(perm[i]).real());

    const auto ddec = eigendecompose(directed_knn(8));
    const auto dperm = order_frequencies(ddec, ShiftKind::normalized_adjacency);
    EXPECT_EQ(std::set<Eigen::Index>(dperm.begin(), dperm.end()).size(), 32u);
    for (std::size_t i = 0; i < dperm.size(); ++i) {
        if (ddec.pairing.is_real(dperm[i])) continue;
        EXPECT_EQ(ddec.pairing.partner[static_cast<std::size_t>(dperm[i])], dperm[i + 1]);
        ++i;
    }
}

TEST(TotalVariation, LargestEigenvalueModeIsSmoothest) {
    const auto op = normalize(build_er_graph(30, 0.3, 2), ShiftKind::normalized_adjacency);
    const auto dec = eigendecompose(op);
    const Vec tv = total_variation(dec);
    Eigen::Index top = 0;
    dec.lambdas.real().maxCoeff(&top);
    EXPECT_NEAR(tv(top), 0.0, 1e-12);
}

TEST(UniformGrid, EndpointsAndSpacing) {
    const auto g = uniform_real_grid(5);
    EXPECT_EQ(g.lambdas(0), cplx(0.0, 0.0));
    EXPECT_EQ(g.lambdas(4), cplx(2.0, 0.0));
    EXPECT_DOUBLE_EQ(g.lambdas(1).real(), 0.5);
    EXPECT_TRUE(g.all_real());
    EXPECT_THROW(uniform_real_grid(1), Error);
}

TEST(DiscGrid, RingBudgetsSumAndProportion) {
    for (Eigen::Index N : {10, 50, 100, 101, 333}) {
        const Eigen::Index R = std::max<Eigen::Index>(2, std::llround(std::sqrt(N / std::numbers::pi)));
        const auto b = disc_ring_budgets(N, R);
        Eigen::Index sum = 0;
        for (auto v : b) sum += v;
        EXPECT_EQ(sum, N);
        for (std::size_t j = 1; j < b.size(); ++j) EXPECT_GE(b[j], b[j - 1]);
    }
}

TEST(DiscGrid, ConjugateClosedInsideUnitDisc) {
    for (Eigen::Index N : {4, 10, 100, 250}) {
        const auto g = complex_disc_grid(N);
        EXPECT_EQ(g.size(), N);
        for (Eigen::Index i = 0; i < N; ++i) {
            EXPECT_LE(std::abs(g.lambdas(i)), 1.0 + 1e-15);
            EXPECT_GT(std::abs(g.lambdas(i)), 0.0);
            const auto p = g.pairing.partner[static_cast<std::size_t>(i)];
            EXPECT_EQ(g.lambdas(p), std::conj(g.lambdas(i)));
        }
        EXPECT_EQ(static_cast<Eigen::Index>(g.pairing.reals.size() + 2 * g.pairing.pairs.size()), N);
    }
}

TEST(DiscGrid, OuterRingReachesUnitCircle) {
    const auto g = complex_disc_grid(100);
    EXPECT_NEAR(g.lambdas.cwiseAbs().maxCoeff(), 1.0, 1e-15);
}

TEST(ConjugateCheck, RejectsAsymmetricResponse) {
    const auto g = complex_disc_grid(20);
    CVec h = CVec::Ones(20);
    EXPECT_NO_THROW(check_conjugate_symmetric(g, h));
    h(g.pairing.pairs[0].first) = cplx(1.0, 0.5);
    try {
        check_conjugate_symmetric(g, h);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::conjugate_symmetry);
    }
    CVec hr = CVec::Ones(20);
    hr(g.pairing.reals[0]) = cplx(1.0, 0.1);
    EXPECT_THROW(check_conjugate_symmetric(g, hr), Error);
}

TEST(GridCsv, RoundTrip) {
    const auto g = complex_disc_grid(30);
    const auto back = grid_from_csv(grid_to_csv(g));
    ASSERT_EQ(back.size(), g.size());
    EXPECT_EQ((back.lambdas - g.lambdas).norm(), 0.0);
    EXPECT_EQ(back.pairing.pairs.size(), g.pairing.pairs.size());
}

TEST(GridCsv, InconsistentPairingRejected) {
    EXPECT_THROW(grid_from_csv("re,im,is_real,pair_index\n0.5,0.5,0,1\n0.5,0.4,0,0\n"), Error);
    EXPECT_THROW(grid_from_csv("re,im,is_real,pair_index\n0.5,0.5,1,-1\n"), Error);
    EXPECT_THROW(grid_from_csv("re,im,is_real,pair_index\n0.5,0.5,0,7\n"), Error);
}

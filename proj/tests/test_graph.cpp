#include <cmath>

#include <gtest/gtest.h>

#include "graphfilt/graph.hpp"
#include "graphfilt/graph_io.hpp"
#include "graphfilt/random.hpp"

using namespace graphfilt;

namespace {

Graph two_path() { return Graph(2, {{0, 1, 1.0}, {1, 0, 1.0}}, false); }

// Power iteration on |S| for the dominant eigenvalue magnitude (nonnegative matrices).
double power_radius(const Mat& S, int iters = 20000) {
    Vec v = Vec::Ones(S.rows());
    double lam = 0.0;
    for (int i = 0; i < iters; ++i) {
        Vec w = S * v;
        lam = w.norm() / v.norm();
        v = w / w.norm();
    }
    return lam;
}

}  // namespace

TEST(ErGraph, ProbabilityZeroHasNoEdges) {
    EXPECT_EQ(build_er_graph(4, 0.0, 1).undirected_edge_count(), 0u);
}

TEST(ErGraph, ProbabilityOneIsComplete) {
    const auto g = build_er_graph(4, 1.0, 1);
    EXPECT_EQ(g.undirected_edge_count(), 6u);
    EXPECT_FALSE(g.directed());
}

TEST(ErGraph, EdgeCountWithinThreeSigma) {
    const auto g = build_er_graph(100, 0.1, 7);
    const double mean = 0.1 * 4950.0;
    const double sigma = std::sqrt(mean * 0.9);
    EXPECT_LE(std::abs(static_cast<double>(g.undirected_edge_count()) - mean), 3.0 * sigma);
}

TEST(ErGraph, DeterministicGivenSeed) {
    const auto a = build_er_graph(30, 0.3, 42);
    const auto b = build_er_graph(30, 0.3, 42);
    ASSERT_EQ(a.edges().size(), b.edges().size());
    for (std::size_t i = 0; i < a.edges().size(); ++i) {
        EXPECT_EQ(a.edges()[i].src, b.edges()[i].src);
        EXPECT_EQ(a.edges()[i].dst, b.edges()[i].dst);
    }
}

TEST(ErGraph, RejectsInvalidProbability) {
    try {
        build_er_graph(4, 1.5, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::parameter);
    }
}

TEST(GraphInvariants, UndirectedNeedsMirroredEdges) {
    EXPECT_THROW(Graph(2, {{0, 1, 1.0}}, false), Error);
    EXPECT_THROW(Graph(2, {{0, 2, 1.0}}, true), Error);
    EXPECT_THROW(Graph(2, {{0, 1, NAN}}, true), Error);
}

TEST(KnnGraph, CollinearHandValue) {
    const auto g = build_knn_directed({{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}}, 1);
    const Mat A(g.adjacency());
    // node 0's nearest is node 1; node 1 ties between 0 and 2 and picks 0
    EXPECT_NEAR(A(0, 1), 1.0, 1e-15);
    EXPECT_GT(A(1, 0), 0.0);
    EXPECT_EQ(A(1, 2), 0.0);
    EXPECT_NEAR(A(0, 1), std::exp(-1.0) / std::sqrt(std::exp(-1.0) * std::exp(-1.0)), 1e-15);
}

TEST(KnnGraph, OutDegreeIsK) {
    Rng rng(5);
    std::vector<Point2> pts(32);
    for (auto& p : pts) p = {rng.uniform(), rng.uniform()};
    const auto g = build_knn_directed(pts, 6);
    std::vector<int> deg(32, 0);
    for (const auto& e : g.edges()) ++deg[e.src];
    for (int d : deg) EXPECT_EQ(d, 6);
}

TEST(KnnGraph, DuplicatePositionsRejected) {
    try {
        build_knn_directed({{0.0, 0.0}, {0.0, 0.0}, {1.0, 1.0}}, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::degenerate_distance);
    }
}

TEST(KnnGraph, MutualNeighborhoodsGiveSymmetricWeights) {
    // four corners of a square with k = 3: every node neighbors every other
    const auto g = build_knn_directed({{0, 0}, {1, 0}, {0, 1}, {1, 1}}, 3);
    const Mat A(g.adjacency());
    EXPECT_LE((A - A.transpose()).norm(), 1e-15);
}

TEST(Normalize, LaplacianOfTwoPath) {
    const auto op = normalize(two_path(), ShiftKind::normalized_laplacian);
    Mat expect(2, 2);
    expect << 1, -1, -1, 1;
    EXPECT_LE((op.dense() - expect).norm(), 1e-15);
    EXPECT_TRUE(op.is_symmetric());
}

TEST(Normalize, LaplacianRejectsDirectedAndIsolated) {
    EXPECT_THROW(normalize(Graph(2, {{0, 1, 1.0}}, true), ShiftKind::normalized_laplacian), Error);
    try {
        normalize(Graph(3, {{0, 1, 1.0}, {1, 0, 1.0}}, false), ShiftKind::normalized_laplacian);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::zero_degree);
    }
}

TEST(Normalize, NilpotentFallsBackToRowSum) {
    const auto op = normalize(Graph(2, {{0, 1, 3.0}}, true), ShiftKind::normalized_adjacency);
    EXPECT_TRUE(op.row_sum_fallback);
    EXPECT_DOUBLE_EQ(op.spectral_norm, 3.0);
    EXPECT_DOUBLE_EQ(op.dense()(0, 1), 1.0);
}

TEST(Normalize, ZeroMatrixRejected) {
    try {
        normalize(Graph(3, {}, true), ShiftKind::normalized_adjacency);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::zero_norm);
    }
}

TEST(Normalize, AdjacencyRadiusIsOne) {
    const auto op = normalize(build_er_graph(60, 0.2, 3), ShiftKind::normalized_adjacency);
    EXPECT_NEAR(power_radius(op.dense()), 1.0, 1e-9);
}

TEST(Normalize, ErLaplacianSpectrumInZeroTwo) {
    const auto op = normalize(build_er_graph(100, 0.1, 9), ShiftKind::normalized_laplacian);
    Eigen::SelfAdjointEigenSolver<Mat> es(op.dense());
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
    EXPECT_LE(es.eigenvalues().maxCoeff(), 2.0 + 1e-9);
}

TEST(ShiftApply, TwoPathExamples) {
    const auto op = normalize(two_path(), ShiftKind::normalized_laplacian);
    EXPECT_LE(shift_apply(op, Vec::Ones(2)).norm(), 1e-15);
    Vec x(2);
    x << 1, -1;
    Vec y = shift_apply(op, x);
    EXPECT_NEAR(y(0), 2.0, 1e-15);
    EXPECT_NEAR(y(1), -2.0, 1e-15);
}

TEST(ShiftApply, IdentityCustomOperator) {
    const auto op = ShiftOperator::custom(Mat::Identity(5, 5));
    Rng rng(1);
    const Vec x = rng.normal_vector(5);
    EXPECT_LE((shift_apply(op, x) - x).norm(), 0.0);
}

TEST(ShiftApply, MatchesDenseProduct) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto op = normalize(build_random_directed(150, 0.05, seed), ShiftKind::normalized_adjacency);
        Rng rng(seed + 10);
        const Vec x = rng.normal_vector(150);
        const Vec dense = op.dense() * x;
        EXPECT_LE((shift_apply(op, x) - dense).norm(), 1e-12 * dense.norm());
    }
}

TEST(ShiftApply, LengthMismatch) {
    const auto op = normalize(two_path(), ShiftKind::normalized_laplacian);
    try {
        shift_apply(op, Vec::Ones(3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::dimension);
    }
}

TEST(SymmetrizeMax, KeepsLargerWeight) {
    const auto g = symmetrize_max(Graph(2, {{0, 1, 0.5}, {1, 0, 2.0}}, true));
    const Mat A(g.adjacency());
    EXPECT_EQ(A(0, 1), 2.0);
    EXPECT_EQ(A(1, 0), 2.0);
}

TEST(Normality, SymmetricOperatorIsNormal) {
    const auto op = normalize(build_er_graph(20, 0.3, 2), ShiftKind::normalized_adjacency);
    EXPECT_LE(normality_residual(op), 1e-14);
}

TEST(EdgeCsv, ParsesZeroAndOneBased) {
    const auto g0 = parse_edge_csv("src,dst,weight\n0,1,2.5\n1,2,1\n", false);
    EXPECT_EQ(g0.size(), 3u);
    EXPECT_EQ(g0.edges().size(), 4u);
    const auto g1 = parse_edge_csv("src,dst,weight\n1,2,2.5\n2,3,1\n", true, true);
    EXPECT_EQ(g1.size(), 3u);
    EXPECT_EQ(Mat(g1.adjacency())(0, 1), 2.5);
}

TEST(EdgeCsv, ErrorsCarryLineNumbers) {
    try {
        parse_edge_csv("src,dst,weight\n0,1,1\n0,x,1\n", true, false, 0, "e.csv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::parse);
        EXPECT_NE(std::string(e.what()).find("e.csv:3"), std::string::npos);
    }
    EXPECT_THROW(parse_edge_csv("a,b,c\n0,1,1\n", true), Error);
    EXPECT_THROW(parse_edge_csv("src,dst,weight\n0,1\n", true), Error);
}

TEST(CoordsCsv, RoundTrip) {
    const std::vector<Point2> pts{{0.25, 1.5}, {-3.0, 2.0}};
    const auto back = parse_coords_csv(coords_to_csv(pts));
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1][0], -3.0);
    EXPECT_THROW(parse_coords_csv("id,x,y\n0,1,1\n0,2,2\n"), Error);
}

TEST(GraphJson, RoundTrip) {
    const auto g = build_er_graph(12, 0.4, 8);
    const auto back = graph_from_json(graph_to_json(g));
    EXPECT_EQ(back.size(), g.size());
    EXPECT_EQ(back.directed(), g.directed());
    EXPECT_LE((Mat(back.adjacency()) - Mat(g.adjacency())).norm(), 0.0);
    EXPECT_THROW(graph_from_json(nlohmann::json{{"n", 2}}), Error);
}

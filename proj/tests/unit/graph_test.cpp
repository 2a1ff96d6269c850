#include <accelgl/graph.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>

using namespace accelgl;

namespace {

PointMatrix random_points(int n, int d, unsigned seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    PointMatrix x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = g(rng);
    return x;
}

Eigen::MatrixXd dense(const SparseMatrix& m) { return Eigen::MatrixXd(m); }

// Naive reference: sort all other vertices by exact distance, then index.
std::vector<std::set<Eigen::Index>> naive_knn(const PointMatrix& x, int k) {
    std::vector<std::set<Eigen::Index>> out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        std::vector<std::pair<double, Eigen::Index>> d;
        for (Eigen::Index j = 0; j < x.rows(); ++j)
            if (j != i) d.emplace_back((x.row(i) - x.row(j)).squaredNorm(), j);
        std::sort(d.begin(), d.end());
        for (int m = 0; m < k; ++m) out[i].insert(d[m].second);
    }
    return out;
}

// Random labelled problem: kNN graph on Gaussian points, every fifth vertex labelled.
struct RandomProblem {
    std::shared_ptr<const WeightedGraph> graph;
    std::vector<Eigen::Index> boundary;
    std::vector<int> labels;
};

RandomProblem random_problem(int n, int k, unsigned seed) {
    RandomProblem r;
    r.graph = std::make_shared<WeightedGraph>(build_knn_graph(random_points(n, 3, seed), 6, 1.0));
    for (int i = 0; i < n; i += 5) {
        r.boundary.push_back(i);
        r.labels.push_back((i / 5) % k);
    }
    return r;
}

Eigen::MatrixXd random_rows(Eigen::Index rows, int k, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.2, 1.2);
    Eigen::MatrixXd m(rows, k);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (int j = 0; j < k; ++j) m(i, j) = u(rng);
    return m;
}

}  // namespace

TEST(Knn, EquilateralTriangleGivesHalfWeights) {
    const double sigma = 0.7;
    const double d = sigma * std::sqrt(2.0 * std::log(2.0));
    PointMatrix x(3, 2);
    x << 0.0, 0.0, d, 0.0, 0.5 * d, 0.5 * std::sqrt(3.0) * d;
    const auto g = build_knn_graph(x, 2, sigma);
    const Eigen::MatrixXd w = dense(g.weights());
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(w(i, j), i == j ? 0.0 : 0.5, 1e-14);
}

TEST(Knn, IdenticalPointsGetWeightOne) {
    PointMatrix x(2, 3);
    x << 1.0, 2.0, 3.0, 1.0, 2.0, 3.0;
    const Eigen::MatrixXd w = dense(build_knn_graph(x, 1, 0.3).weights());
    EXPECT_DOUBLE_EQ(w(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(w(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(w(0, 0), 0.0);
}

TEST(Knn, OneSidedNeighbourhoodIsHalved) {
    // A's nearest is B, B's nearest is C, C's nearest is B.
    PointMatrix x(3, 1);
    x << 0.0, 1.0, 1.5;
    const double sigma = 1.0;
    const Eigen::MatrixXd w = dense(build_knn_graph(x, 1, sigma).weights());
    EXPECT_NEAR(w(0, 1), 0.5 * std::exp(-1.0 / 2.0), 1e-15);
    EXPECT_NEAR(w(1, 2), std::exp(-0.25 / 2.0), 1e-15);
    EXPECT_EQ(w(0, 2), 0.0);
}

TEST(Knn, RejectsBadArguments) {
    const PointMatrix x = random_points(5, 2, 1);
    EXPECT_THROW(build_knn_graph(x, 5, 1.0), std::invalid_argument);
    EXPECT_THROW(build_knn_graph(x, 0, 1.0), std::invalid_argument);
    EXPECT_THROW(build_knn_graph(x, 2, 0.0), std::invalid_argument);
}

TEST(Knn, MatchesNaiveSearch) {
    PointMatrix x = random_points(700, 5, 7);
    // Duplicates and exact ties.
    x.row(10) = x.row(11);
    x.row(12) = x.row(11);
    x.row(20) = 2.0 * x.row(21);
    const int k = 7;
    const auto g = build_knn_graph(x, k, 1.0);
    const auto ref = naive_knn(x, k);
    const Eigen::MatrixXd w = dense(g.weights());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.rows(); ++j) {
            if (i == j) continue;
            const double gw = gaussian_weight((x.row(i) - x.row(j)).squaredNorm(), 1.0);
            const double expect = 0.5 * gw * (static_cast<double>(ref[i].count(j)) + static_cast<double>(ref[j].count(i)));
            ASSERT_DOUBLE_EQ(w(i, j), expect) << i << " " << j;
        }
    }
}

TEST(FullGraph, KernelAndThreshold) {
    PointMatrix x(3, 2);
    x << 0.0, 0.0, 0.0, 0.0, 100.0, 0.0;
    const Eigen::MatrixXd w = dense(build_full_graph(x, 0.2).weights());
    EXPECT_DOUBLE_EQ(w(0, 1), 1.0);
    EXPECT_EQ(w(0, 2), 0.0);
    EXPECT_EQ(w(1, 2), 0.0);
}

TEST(FullGraph, ZeroCutoffIsExactKernel) {
    const PointMatrix x = random_points(40, 2, 3, 0.3);
    const double sigma = 0.2;
    const Eigen::MatrixXd w = dense(build_full_graph(x, sigma, {0.0, 20000}).weights());
    for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 40; ++j) {
            const double expect = i == j ? 0.0 : std::exp(-(x.row(i) - x.row(j)).squaredNorm() / (2 * sigma * sigma));
            EXPECT_DOUBLE_EQ(w(i, j), expect);
        }
}

TEST(FullGraph, CutoffDropsSmallWeights) {
    const PointMatrix x = random_points(60, 2, 4, 0.5);
    const auto g = build_full_graph(x, 0.2, {1e-3, 20000});
    const Eigen::MatrixXd w = dense(g.weights());
    for (int i = 0; i < 60; ++i)
        for (int j = 0; j < 60; ++j) {
            if (i == j) continue;
            const double exact = gaussian_weight((x.row(i) - x.row(j)).squaredNorm(), 0.2);
            EXPECT_DOUBLE_EQ(w(i, j), exact >= 1e-3 ? exact : 0.0);
        }
}

TEST(FullGraph, MemoryLimitCheckedFirst) {
    const PointMatrix x = random_points(30, 2, 5);
    EXPECT_THROW(build_full_graph(x, 0.2, {1e-3, 29}), std::length_error);
}

TEST(Graph, RejectsAsymmetricOrNegative) {
    SparseMatrix w(2, 2);
    w.insert(0, 1) = 1.0;
    EXPECT_THROW(WeightedGraph{w}, std::invalid_argument);
    w.insert(1, 0) = 1.0;
    EXPECT_NO_THROW(WeightedGraph{w});
    w.coeffRef(0, 1) = -1.0;
    w.coeffRef(1, 0) = -1.0;
    EXPECT_THROW(WeightedGraph{w}, std::invalid_argument);
}

TEST(Graph, DiagonalDropped) {
    SparseMatrix w(2, 2);
    w.insert(0, 0) = 3.0;
    w.insert(0, 1) = 1.0;
    w.insert(1, 0) = 1.0;
    const WeightedGraph g(w);
    EXPECT_EQ(dense(g.weights())(0, 0), 0.0);
    EXPECT_EQ(g.nnz(), 2);
}

TEST(Laplacian, NullVectorAndPositivity) {
    const auto g = build_knn_graph(random_points(200, 3, 9), 8, 0.8);
    const SparseMatrix L = g.laplacian();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(200);
    // Zero up to the rounding of summing a row in a different order.
    const double dmax = g.degrees().maxCoeff();
    EXPECT_LE((L * ones).cwiseAbs().maxCoeff(), 4.0 * std::numeric_limits<double>::epsilon() * dmax);
    EXPECT_LT((dense(L) - dense(L).transpose()).cwiseAbs().maxCoeff(), 1e-15);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n01;
    for (int t = 0; t < 100; ++t) {
        Eigen::VectorXd v(200);
        for (auto& e : v) e = n01(rng);
        EXPECT_GE(v.dot(L * v), 0.0);
    }
}

TEST(Laplacian, QuadraticFormIsEdgeSum) {
    const auto g = build_knn_graph(random_points(50, 2, 10), 4, 1.0);
    const Eigen::MatrixXd w = dense(g.weights());
    Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(50, -1.0, 2.0);
    double s = 0.0;
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 50; ++j) s += 0.5 * w(i, j) * (u(i) - u(j)) * (u(i) - u(j));
    EXPECT_NEAR(u.dot(g.laplacian() * u), s, 1e-12 * s);
}

TEST(Problem, BlockIdentity) {
    const auto r = random_problem(120, 3, 11);
    const LabeledProblem p(r.graph, r.boundary, r.labels, 3, 1.0);
    const Eigen::MatrixXd U_int = random_rows(static_cast<Eigen::Index>(p.interior().size()), 3, 2);
    const Eigen::MatrixXd U = p.assemble(U_int);
    const double whole = (U.transpose() * (p.L() * U)).trace();
    EXPECT_NEAR(p.dirichlet_trace(U_int), whole, 1e-12 * (1.0 + std::abs(whole)));
    // Same identity per column with the explicit blocks.
    for (int c = 0; c < 3; ++c) {
        const Eigen::VectorXd ui = U_int.col(c), ub = p.U_bd().col(c), u = U.col(c);
        const double lhs = u.dot(p.L() * u);
        const double rhs = ui.dot(p.L_int() * ui) + 2.0 * ui.dot(p.L_cross() * ub) + ub.dot(p.L_bd() * ub);
        EXPECT_NEAR(lhs, rhs, 1e-12 * (1.0 + std::abs(lhs)));
    }
    EXPECT_EQ(p.interior().size() + p.boundary().size() + p.frozen().size(), 120u);
}

TEST(Problem, RejectsBadLabels) {
    const auto r = random_problem(30, 2, 12);
    EXPECT_THROW(LabeledProblem(r.graph, {0, 0}, {0, 1}, 2, 1.0), std::invalid_argument);
    EXPECT_THROW(LabeledProblem(r.graph, {0}, {2}, 2, 1.0), std::invalid_argument);
    EXPECT_THROW(LabeledProblem(r.graph, {30}, {0}, 2, 1.0), std::out_of_range);
    EXPECT_THROW(LabeledProblem(r.graph, {0}, {0, 1}, 2, 1.0), std::invalid_argument);
}

TEST(ImplicitSolve, IsolatedVertices) {
    // Interior vertices hang off the labelled vertex 0 by negligible weights,
    // so L_int vanishes to machine precision.
    SparseMatrix star(4, 4);
    for (int i = 1; i < 4; ++i) {
        star.insert(0, i) = 1e-300;
        star.insert(i, 0) = 1e-300;
    }
    const double eps = 0.5, h = 0.3;
    const LabeledProblem p(std::make_shared<WeightedGraph>(star), {0}, {0}, 2, eps);
    ASSERT_EQ(p.interior().size(), 3u);
    Eigen::MatrixXd rhs(3, 2);
    rhs << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
    const Eigen::MatrixXd out = graph_implicit_solve(p, rhs, h);
    EXPECT_LT((out - rhs / (1.0 + 2.0 * h / (eps * eps))).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ImplicitSolve, FullyIsolatedVerticesAreFrozen) {
    const LabeledProblem q(std::make_shared<WeightedGraph>(SparseMatrix(4, 4)), {0}, {0}, 2, 1.0);
    EXPECT_TRUE(q.interior().empty());
    EXPECT_EQ(q.frozen().size(), 3u);
}

TEST(ImplicitSolve, TwoVertexClosedForm) {
    // Interior pair joined by w = 1; the labelled vertex 2 is attached by a
    // negligible weight, so L_int = [[1, -1], [-1, 1]].
    SparseMatrix w(3, 3);
    w.insert(0, 1) = 1.0;
    w.insert(1, 0) = 1.0;
    w.insert(1, 2) = 1e-300;
    w.insert(2, 1) = 1e-300;
    const double eps = 0.8, h = 0.7;
    const LabeledProblem q(std::make_shared<WeightedGraph>(w), {2}, {0}, 2, eps);
    ASSERT_EQ(q.interior().size(), 2u);
    const double m = 1.0 + 2.0 * h / (eps * eps);
    const double a = m + h, b = -h, det = a * a - b * b;
    Eigen::MatrixXd rhs(2, 2);
    rhs << 1.0, -2.0, 0.5, 3.0;
    Eigen::MatrixXd expect(2, 2);
    for (int c = 0; c < 2; ++c) {
        expect(0, c) = (a * rhs(0, c) - b * rhs(1, c)) / det;
        expect(1, c) = (-b * rhs(0, c) + a * rhs(1, c)) / det;
    }
    EXPECT_LT((graph_implicit_solve(q, rhs, h) - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ImplicitSolve, DenseAndConjugateGradientsInvert) {
    const auto r = random_problem(400, 4, 13);
    const LabeledProblem p(r.graph, r.boundary, r.labels, 4, 0.7);
    const Eigen::Index n = static_cast<Eigen::Index>(p.interior().size());
    const Eigen::MatrixXd rhs = random_rows(n, 4, 3);
    const double h = 5.0;
    SparseMatrix A = h * p.L_int();
    A.diagonal().array() += 1.0 + 2.0 * h / (0.7 * 0.7);
    for (Eigen::Index threshold : {Eigen::Index{4096}, Eigen::Index{0}}) {
        GraphImplicitSolver solver(p, {threshold, 1e-10, 10000});
        EXPECT_EQ(solver.dense(), threshold > 0);
        const Eigen::MatrixXd x = solver.solve(rhs, h);
        EXPECT_LT((A * x - rhs).cwiseAbs().maxCoeff(), 1e-9);
        if (!solver.dense()) EXPECT_LE(solver.last_residual(), 1e-10);
    }
}

TEST(ImplicitSolve, ConjugateGradientFailureReportsResidual) {
    const auto r = random_problem(300, 3, 14);
    const LabeledProblem p(r.graph, r.boundary, r.labels, 3, 0.1);
    GraphImplicitSolver solver(p, {0, 1e-14, 1});
    const Eigen::MatrixXd rhs = random_rows(static_cast<Eigen::Index>(p.interior().size()), 3, 4);
    try {
        solver.solve(rhs, 1e4);
        FAIL() << "expected a solver error";
    } catch (const GraphSolveError& e) {
        EXPECT_GT(e.residual(), 1e-14);
    }
    EXPECT_THROW(solver.solve(rhs, 0.0), std::invalid_argument);
}

TEST(Simplex, Examples) {
    Eigen::MatrixXd u(3, 2);
    u << 0.25, 0.75, 0.5, 0.9, 0.0, 0.0;
    const Eigen::MatrixXd p = simplex_project_rows(u);
    EXPECT_DOUBLE_EQ(p(0, 0), 0.25);
    EXPECT_DOUBLE_EQ(p(0, 1), 0.75);
    EXPECT_NEAR(p(1, 0), 0.3, 1e-15);
    EXPECT_NEAR(p(1, 1), 0.7, 1e-15);
    EXPECT_DOUBLE_EQ(p(2, 0), 0.5);
    const Eigen::MatrixXd z = simplex_project_rows(Eigen::MatrixXd::Zero(1, 5));
    for (int j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(z(0, j), 0.2);
    EXPECT_THROW(simplex_project_rows(Eigen::MatrixXd::Zero(2, 1)), std::invalid_argument);
}

TEST(Classify, ArgmaxWithLowestIndexTies) {
    Eigen::MatrixXd u(3, 5);
    u << 0, 0, 0, 1, 0, 0.2, 0.2, 0.2, 0.2, 0.2, 0.4, 0.39, 0.21, 0, 0;
    EXPECT_EQ(classify(u), (std::vector<int>{3, 0, 0}));
}

TEST(Accuracy, Examples) {
    const std::vector<int> t{0, 1, 2, 3};
    EXPECT_EQ(accuracy(t, t), 1.0);
    EXPECT_EQ(accuracy({1, 2, 3, 0}, t), 0.0);
    EXPECT_EQ(accuracy({0, 1, 0, 0}, t), 0.5);
    EXPECT_EQ(accuracy({0, 1, 0, 0}, t, {2, 3}), 1.0);
    EXPECT_THROW(accuracy({0}, t), std::invalid_argument);
}

TEST(Energy, OneHotSingleClassIsZero) {
    const auto g = std::make_shared<WeightedGraph>(build_knn_graph(random_points(40, 2, 15), 5, 1.0));
    std::vector<Eigen::Index> bd{0, 1, 2};
    const LabeledProblem p(g, bd, {1, 1, 1}, 3, 1.0);
    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(40, 3);
    U.col(1).setOnes();
    const GraphEnergy e = graph_energy(p, U);
    EXPECT_NEAR(e.raw, 0.0, 1e-14);
    EXPECT_NEAR(e.normalized, 0.0, 1e-14);
}

TEST(Energy, TwoVertexDirichletPart) {
    SparseMatrix w(2, 2);
    w.insert(0, 1) = 1.0;
    w.insert(1, 0) = 1.0;
    const LabeledProblem p(std::make_shared<WeightedGraph>(w), {0, 1}, {0, 1}, 2, 1.0);
    EXPECT_DOUBLE_EQ(p.dirichlet_trace(Eigen::MatrixXd(0, 2)), 2.0);
    const GraphEnergy e = graph_energy(p, Eigen::MatrixXd::Identity(2, 2));
    EXPECT_DOUBLE_EQ(e.raw, 1.0);
    EXPECT_DOUBLE_EQ(e.normalized, 0.5);
}

TEST(Energy, BlocksMatchWholeMatrix) {
    for (unsigned seed = 0; seed < 5; ++seed) {
        const auto r = random_problem(90, 3, 100 + seed);
        const double eps = 0.6;
        const LabeledProblem p(r.graph, r.boundary, r.labels, 3, eps);
        const Eigen::MatrixXd U_int = random_rows(static_cast<Eigen::Index>(p.interior().size()), 3, seed);
        const Eigen::MatrixXd U = p.assemble(U_int);
        double pot = 0.0;
        for (Eigen::Index i = 0; i < U.rows(); ++i) {
            std::vector<double> row;
            for (int j = 0; j < 3; ++j) row.push_back(U(i, j));
            pot += p.potential()(row);
        }
        const double whole = 0.5 * eps * (U.transpose() * (p.L() * U)).trace() + pot / eps;
        EXPECT_NEAR(p.energy(U_int).raw, whole, 1e-10 * (1.0 + whole));
        EXPECT_GE(p.energy(U_int).raw, 0.0);
    }
}

namespace {

struct GraphRun {
    std::vector<double> energy;
    Eigen::MatrixXd U_int;
    double max_row_error = 0.0;
};

GraphRun run_graph(const LabeledProblem& p, const SchemeParams& params, int steps) {
    GraphBackend backend(p);
    auto s = at_rest(p.initial_interior());
    GraphRun out;
    const auto res = run_scheme(s, params, backend, RunOptions{steps, 1},
                                [&](const SchemeState<Eigen::MatrixXd>& st, const EnergyRecord&) {
                                    if (st.u.rows() > 0) {
                                        out.max_row_error = std::max(
                                            out.max_row_error, (st.u.rowwise().sum().array() - 1.0).abs().maxCoeff());
                                        out.max_row_error =
                                            std::max(out.max_row_error, st.v.rowwise().sum().cwiseAbs().maxCoeff());
                                    }
                                    return false;
                                });
    for (const auto& r : res.trace) out.energy.push_back(r.gl_energy);
    out.U_int = s.u;
    return out;
}

}  // namespace

TEST(GraphSchemes, GradientDescentMonotoneForAllStepSizes) {
    const auto r = random_problem(250, 3, 21);
    const LabeledProblem p(r.graph, r.boundary, r.labels, 3, 1.0);
    for (double h : {1.0, 10.0, 100.0, 1e3, 1e4}) {
        const GraphRun run = run_graph(p, SchemeParams::gradient_descent(h, 1.0), 30);
        for (std::size_t i = 1; i < run.energy.size(); ++i)
            EXPECT_LE(run.energy[i], run.energy[i - 1] + 1e-12 * std::abs(run.energy[i - 1])) << "h=" << h;
        EXPECT_LT(run.energy.back(), run.energy.front());
        EXPECT_LT(run.max_row_error, 1e-12);
    }
}

TEST(GraphSchemes, FistaKeepsRowSumsAndBoundary) {
    const auto r = random_problem(250, 4, 22);
    const LabeledProblem p(r.graph, r.boundary, r.labels, 4, 1.0);
    SchemeParams params = SchemeParams::momentum(Scheme::FISTA, 10.0, 0.0, 1.0);
    params.rho = 0.4;
    const GraphRun run = run_graph(p, params, 40);
    EXPECT_LT(run.max_row_error, 1e-12);
    const Eigen::MatrixXd U = p.assemble(run.U_int);
    for (std::size_t m = 0; m < p.boundary().size(); ++m)
        EXPECT_EQ(U.row(p.boundary()[m]), p.U_bd().row(static_cast<Eigen::Index>(m)));
}

TEST(GraphSchemes, CinemaAndNesterovRun) {
    const auto r = random_problem(120, 3, 23);
    const LabeledProblem p(r.graph, r.boundary, r.labels, 3, 1.0);
    const GraphRun c = run_graph(p, SchemeParams::momentum(Scheme::CINEMA, 0.5, 1.0, 1.0), 20);
    EXPECT_LT(c.max_row_error, 1e-12);
    const GraphRun n = run_graph(p, SchemeParams::momentum(Scheme::Nesterov, 0.05, 1.0, 1.0), 20);
    EXPECT_LT(n.max_row_error, 1e-12);
}

TEST(GraphSchemes, RelabelingEquivariance) {
    const int n = 150, k = 3;
    const PointMatrix x = random_points(n, 2, 31);
    std::vector<Eigen::Index> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(5));
    PointMatrix y(n, 2);
    for (int i = 0; i < n; ++i) y.row(perm[i]) = x.row(i);
    std::vector<Eigen::Index> bd, bd_perm;
    std::vector<int> lab;
    for (int i = 0; i < n; i += 6) {
        bd.push_back(i);
        bd_perm.push_back(perm[i]);
        lab.push_back(i % k);
    }
    const LabeledProblem a(std::make_shared<WeightedGraph>(build_knn_graph(x, 5, 0.5)), bd, lab, k, 1.0);
    const LabeledProblem b(std::make_shared<WeightedGraph>(build_knn_graph(y, 5, 0.5)), bd_perm, lab, k, 1.0);
    const auto params = SchemeParams::gradient_descent(100.0, 1.0);
    const Eigen::MatrixXd Ua = a.assemble(run_graph(a, params, 10).U_int);
    const Eigen::MatrixXd Ub = b.assemble(run_graph(b, params, 10).U_int);
    for (int i = 0; i < n; ++i) EXPECT_LT((Ua.row(i) - Ub.row(perm[i])).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(GraphSchemes, UnlabelledComponentStaysUniform) {
    // Two triangles; only the first carries labels.
    SparseMatrix w(6, 6);
    for (int base : {0, 3})
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (i != j) w.insert(base + i, base + j) = 1.0;
    const LabeledProblem p(std::make_shared<WeightedGraph>(w), {0}, {2}, 3, 1.0);
    EXPECT_EQ(p.frozen(), (std::vector<Eigen::Index>{3, 4, 5}));
    const GraphRun run = run_graph(p, SchemeParams::gradient_descent(10.0, 1.0), 20);
    const std::vector<int> labels = classify(p.assemble(run.U_int));
    EXPECT_EQ(labels, (std::vector<int>{2, 2, 2, 0, 0, 0}));
}

TEST(GraphIo, RoundTripAndPredictions) {
    const auto g = build_knn_graph(random_points(30, 2, 41), 3, 0.9);
    const auto dir = std::filesystem::temp_directory_path() / "accelgl_graph_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "g.txt").string();
    write_graph(path, g);
    const WeightedGraph h = read_graph(path);
    EXPECT_EQ(h.size(), 30);
    EXPECT_EQ(dense(h.weights()), dense(g.weights()));
    {
        std::ifstream in(path);
        Eigen::Index n = 0, nnz = 0;
        in >> n >> nnz;
        EXPECT_EQ(nnz, g.nnz());
    }
    std::ofstream(dir / "bad.txt") << "3 2\n0 1 0.5\n";
    EXPECT_THROW(read_graph((dir / "bad.txt").string()), std::runtime_error);

    Eigen::MatrixXd U(2, 2);
    U << 0.3, 0.7, 0.5, 0.5;
    write_predictions((dir / "p.csv").string(), U, {1, -1});
    std::ifstream in(dir / "p.csv");
    std::string header, l1, l2;
    std::getline(in, header);
    std::getline(in, l1);
    std::getline(in, l2);
    EXPECT_EQ(header, "index,true_label,predicted_label,max_component");
    EXPECT_EQ(l1, "0,1,1,0.69999999999999996");
    EXPECT_EQ(l2, "1,-1,0,0.5");
    std::filesystem::remove_all(dir);
}

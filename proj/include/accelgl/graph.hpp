// graph.hpp
// Weighted similarity graphs, the unnormalised graph Laplacian L = D - W and
// the multi-class Ginzburg-Landau problem with labelled (Dirichlet) vertices.
//
// A LabeledProblem splits the vertices into labelled ones (boundary) and the
// rest (interior).  The unknowns are the interior rows of U (one column per
// class); the blocks L_int, L_x and L_bd of L are kept separately, with
// f_bd = L_x U_bd and c_bd = tr(U_bd^T L_bd U_bd) / 2.  Interior vertices in
// components without any label are frozen at their initial uniform rows.
#pragma once

#include <accelgl/potentials.hpp>
#include <accelgl/schemes.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace accelgl {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct KnnProvenance {
    int k;
    double sigma;
};

struct FullThresholdedProvenance {
    double sigma;
    double cutoff;
};

struct ExplicitProvenance {};

using GraphProvenance = std::variant<KnnProvenance, FullThresholdedProvenance, ExplicitProvenance>;

class WeightedGraph {
public:
    /// Takes a symmetric, non-negative weight matrix; the diagonal is dropped.
    explicit WeightedGraph(SparseMatrix weights, GraphProvenance provenance = ExplicitProvenance{})
        : provenance_(provenance) {
        if (weights.rows() != weights.cols()) throw std::invalid_argument("weight matrix must be square");
        weights.prune([](Eigen::Index i, Eigen::Index j, double) { return i != j; });
        weights.makeCompressed();
        for (int c = 0; c < weights.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(weights, c); it; ++it)
                if (!(it.value() >= 0.0) || !std::isfinite(it.value()))
                    throw std::invalid_argument("graph weights must be finite and non-negative");
        SparseMatrix t = weights.transpose();
        if ((t - weights).norm() > 1e-12 * (1.0 + weights.norm()))
            throw std::invalid_argument("graph weights must be symmetric");
        weights_ = std::move(weights);
    }

    Eigen::Index size() const { return weights_.rows(); }
    Eigen::Index nnz() const { return weights_.nonZeros(); }
    const SparseMatrix& weights() const { return weights_; }
    const GraphProvenance& provenance() const { return provenance_; }

    Eigen::VectorXd degrees() const {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(size());
        for (int c = 0; c < weights_.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(weights_, c); it; ++it) d(it.row()) += it.value();
        return d;
    }

    /// L = D - W
    SparseMatrix laplacian() const {
        std::vector<Triplet> t;
        t.reserve(static_cast<std::size_t>(nnz() + size()));
        const Eigen::VectorXd d = degrees();
        for (int c = 0; c < weights_.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(weights_, c); it; ++it)
                t.emplace_back(it.row(), it.col(), -it.value());
        for (Eigen::Index i = 0; i < size(); ++i) t.emplace_back(i, i, d(i));
        SparseMatrix L(size(), size());
        L.setFromTriplets(t.begin(), t.end());
        return L;
    }

    /// Component id of every vertex, numbered in order of first appearance.
    std::vector<int> components() const {
        const Eigen::Index n = size();
        std::vector<int> comp(static_cast<std::size_t>(n), -1);
        std::vector<Eigen::Index> stack;
        int next = 0;
        for (Eigen::Index s = 0; s < n; ++s) {
            if (comp[s] >= 0) continue;
            comp[s] = next;
            stack.push_back(s);
            while (!stack.empty()) {
                const Eigen::Index v = stack.back();
                stack.pop_back();
                for (SparseMatrix::InnerIterator it(weights_, v); it; ++it) {
                    if (it.value() > 0.0 && comp[it.row()] < 0) {
                        comp[it.row()] = next;
                        stack.push_back(it.row());
                    }
                }
            }
            ++next;
        }
        return comp;
    }

private:
    SparseMatrix weights_;
    GraphProvenance provenance_;
};

using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline double gaussian_weight(double dist2, double sigma) { return std::exp(-dist2 / (2.0 * sigma * sigma)); }

namespace detail {

inline double squared_distance(const PointMatrix& x, Eigen::Index i, Eigen::Index j) {
    return (x.row(i) - x.row(j)).squaredNorm();
}

inline WeightedGraph symmetrize(Eigen::Index n, const std::vector<Triplet>& directed, GraphProvenance prov) {
    SparseMatrix w(n, n);
    w.setFromTriplets(directed.begin(), directed.end());
    SparseMatrix t = w.transpose();
    SparseMatrix sym = 0.5 * (w + t);
    return WeightedGraph(std::move(sym), prov);
}

}  // namespace detail

/// Directed k-nearest-neighbour graph with Gaussian weights, symmetrised as
/// (W + W^T) / 2.  The search is exact: candidate distances from blocked
/// matrix products are re-evaluated directly and ties go to the lower index.
inline WeightedGraph build_knn_graph(const PointMatrix& points, int k, double sigma) {
    const Eigen::Index n = points.rows();
    if (k < 1 || k >= n) throw std::invalid_argument("knn graph needs 1 <= k < N");
    if (!(sigma > 0.0)) throw std::invalid_argument("knn graph needs sigma > 0");
    const Eigen::VectorXd norms = points.rowwise().squaredNorm();
    const double margin = 1e-10 * (1.0 + 4.0 * norms.maxCoeff());
    const auto extra = static_cast<std::ptrdiff_t>(std::min<Eigen::Index>(n - 1, k + 8));
    const Eigen::Index block = 512;
    std::vector<Triplet> directed;
    directed.reserve(static_cast<std::size_t>(n) * k);
    std::vector<std::pair<double, Eigen::Index>> approx, exact;
    for (Eigen::Index b0 = 0; b0 < n; b0 += block) {
        const Eigen::Index rows = std::min(block, n - b0);
        const Eigen::MatrixXd gram = points.middleRows(b0, rows) * points.transpose();
        for (Eigen::Index r = 0; r < rows; ++r) {
            const Eigen::Index i = b0 + r;
            approx.clear();
            for (Eigen::Index j = 0; j < n; ++j)
                if (j != i) approx.emplace_back(norms(i) + norms(j) - 2.0 * gram(r, j), j);
            std::partial_sort(approx.begin(), approx.begin() + extra, approx.end());
            // Rounding in the expanded form is below margin; if the first
            // `extra` candidates clear the k-th by more than that, they contain
            // the exact k nearest.  Otherwise fall back to every vertex.
            exact.clear();
            const bool safe = extra == static_cast<std::ptrdiff_t>(n - 1) ||
                              approx[extra - 1].first > approx[k - 1].first + 2.0 * margin;
            const std::ptrdiff_t count = safe ? extra : static_cast<std::ptrdiff_t>(approx.size());
            for (std::ptrdiff_t m = 0; m < count; ++m)
                exact.emplace_back(detail::squared_distance(points, i, approx[m].second), approx[m].second);
            std::partial_sort(exact.begin(), exact.begin() + k, exact.end());
            for (int m = 0; m < k; ++m)
                directed.emplace_back(i, exact[m].second, gaussian_weight(exact[m].first, sigma));
        }
    }
    return detail::symmetrize(n, directed, KnnProvenance{k, sigma});
}

struct FullGraphOptions {
    double cutoff = 1e-3;
    Eigen::Index max_vertices = 20000;
};

/// All-pairs Gaussian weights; entries below the cutoff are dropped.
inline WeightedGraph build_full_graph(const PointMatrix& points, double sigma,
                                      const FullGraphOptions& opts = {}) {
    const Eigen::Index n = points.rows();
    if (!(sigma > 0.0)) throw std::invalid_argument("full graph needs sigma > 0");
    if (!(opts.cutoff >= 0.0)) throw std::invalid_argument("full graph cutoff must be >= 0");
    if (n > opts.max_vertices) {
        const double gib = static_cast<double>(n) * static_cast<double>(n) * sizeof(double) / (1024.0 * 1024 * 1024);
        throw std::length_error("full graph with " + std::to_string(n) + " vertices needs up to " +
                                std::to_string(gib) + " GiB; limit is " + std::to_string(opts.max_vertices) +
                                " vertices");
    }
    std::vector<Triplet> t;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double w = gaussian_weight(detail::squared_distance(points, i, j), sigma);
            if (w >= opts.cutoff && w > 0.0) {
                t.emplace_back(i, j, w);
                t.emplace_back(j, i, w);
            }
        }
    }
    SparseMatrix w(n, n);
    w.setFromTriplets(t.begin(), t.end());
    return WeightedGraph(std::move(w), FullThresholdedProvenance{sigma, opts.cutoff});
}

/// Coordinate-list text: "N nnz" then one "i j w" line per stored entry.
inline void write_graph(const std::string& path, const WeightedGraph& g) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write graph file " + path);
    out << std::setprecision(17);
    out << g.size() << ' ' << g.nnz() << '\n';
    const SparseMatrix& w = g.weights();
    for (int c = 0; c < w.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(w, c); it; ++it) out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

inline WeightedGraph read_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read graph file " + path);
    Eigen::Index n = 0, nnz = 0;
    if (!(in >> n >> nnz) || n < 0 || nnz < 0) throw std::runtime_error("bad graph header in " + path);
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(nnz));
    for (Eigen::Index e = 0; e < nnz; ++e) {
        Eigen::Index i = 0, j = 0;
        double w = 0.0;
        if (!(in >> i >> j >> w)) throw std::runtime_error("truncated graph file " + path);
        if (i < 0 || j < 0 || i >= n || j >= n) throw std::runtime_error("graph entry out of range in " + path);
        t.emplace_back(i, j, w);
    }
    SparseMatrix w(n, n);
    w.setFromTriplets(t.begin(), t.end());
    return WeightedGraph(std::move(w));
}

/// Adds (1 - row sum) / k to every entry so that each row sums to one.
inline Eigen::MatrixXd simplex_project_rows(Eigen::MatrixXd U) {
    if (U.cols() < 2) throw std::invalid_argument("simplex projection needs k >= 2");
    const double k = static_cast<double>(U.cols());
    const Eigen::VectorXd shift = (1.0 - U.rowwise().sum().array()) / k;
    U.colwise() += shift;
    return U;
}

/// Row-wise argmax; ties go to the lowest class index.
inline std::vector<int> classify(const Eigen::MatrixXd& U) {
    std::vector<int> labels(static_cast<std::size_t>(U.rows()));
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
        int best = 0;
        for (Eigen::Index j = 1; j < U.cols(); ++j)
            if (U(i, j) > U(i, best)) best = static_cast<int>(j);
        labels[i] = best;
    }
    return labels;
}

/// Fraction of matching labels over the indices not in exclude.
inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth,
                       const std::vector<Eigen::Index>& exclude = {}) {
    if (predicted.size() != truth.size()) throw std::invalid_argument("accuracy needs equal lengths");
    std::vector<char> skip(predicted.size(), 0);
    for (Eigen::Index i : exclude) {
        if (i < 0 || static_cast<std::size_t>(i) >= skip.size()) throw std::out_of_range("exclude index out of range");
        skip[i] = 1;
    }
    std::size_t total = 0, hit = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (skip[i]) continue;
        ++total;
        hit += predicted[i] == truth[i];
    }
    return total == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(total);
}

struct GraphEnergy {
    double raw;         // (eps/2) tr(U^T L U) + (1/eps) sum_i W(U_i)
    double normalized;  // raw / N
};

class LabeledProblem {
public:
    /// boundary[m] is labelled with class boundary_labels[m].
    LabeledProblem(std::shared_ptr<const WeightedGraph> graph, std::vector<Eigen::Index> boundary,
                   const std::vector<int>& boundary_labels, int k, double eps, double R = 2.0)
        : graph_(std::move(graph)), boundary_(std::move(boundary)), k_(k), eps_(eps), W_(k, R) {
        if (!graph_) throw std::invalid_argument("labeled problem needs a graph");
        if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
        if (boundary_.size() != boundary_labels.size())
            throw std::invalid_argument("one label per boundary vertex is required");
        const Eigen::Index n = graph_->size();
        role_.assign(static_cast<std::size_t>(n), Role::Interior);
        U_bd_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(boundary_.size()), k);
        for (std::size_t m = 0; m < boundary_.size(); ++m) {
            const Eigen::Index v = boundary_[m];
            if (v < 0 || v >= n) throw std::out_of_range("boundary index out of range");
            if (role_[v] != Role::Interior) throw std::invalid_argument("duplicate boundary index");
            if (boundary_labels[m] < 0 || boundary_labels[m] >= k)
                throw std::invalid_argument("boundary label out of range");
            role_[v] = Role::Boundary;
            U_bd_(static_cast<Eigen::Index>(m), boundary_labels[m]) = 1.0;
        }
        const std::vector<int> comp = graph_->components();
        std::vector<char> labelled(comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1, 0);
        for (Eigen::Index v : boundary_) labelled[comp[v]] = 1;
        for (Eigen::Index v = 0; v < n; ++v) {
            if (role_[v] == Role::Boundary) continue;
            if (labelled[comp[v]]) {
                role_[v] = Role::Interior;
                interior_.push_back(v);
            } else {
                role_[v] = Role::Frozen;
                frozen_.push_back(v);
            }
        }
        build_blocks();
    }

    const WeightedGraph& graph() const { return *graph_; }
    Eigen::Index size() const { return graph_->size(); }
    int classes() const { return k_; }
    double eps() const { return eps_; }
    const MultiWell& potential() const { return W_; }
    const std::vector<Eigen::Index>& boundary() const { return boundary_; }
    /// Unknown rows, in increasing vertex order.
    const std::vector<Eigen::Index>& interior() const { return interior_; }
    /// Unlabelled vertices whose component carries no label.
    const std::vector<Eigen::Index>& frozen() const { return frozen_; }
    const SparseMatrix& L() const { return L_; }
    const SparseMatrix& L_int() const { return L_int_; }
    const SparseMatrix& L_cross() const { return L_x_; }
    const SparseMatrix& L_bd() const { return L_bd_; }
    const Eigen::MatrixXd& U_bd() const { return U_bd_; }
    const Eigen::MatrixXd& f_bd() const { return f_bd_; }
    double c_bd() const { return c_bd_; }

    Eigen::MatrixXd initial_interior() const {
        return Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(interior_.size()), k_, 1.0 / k_);
    }

    /// Full N x k matrix from the interior rows; frozen rows are uniform.
    Eigen::MatrixXd assemble(const Eigen::MatrixXd& U_int) const {
        check_interior(U_int);
        Eigen::MatrixXd U = Eigen::MatrixXd::Constant(size(), k_, 1.0 / k_);
        for (std::size_t m = 0; m < interior_.size(); ++m) U.row(interior_[m]) = U_int.row(static_cast<Eigen::Index>(m));
        for (std::size_t m = 0; m < boundary_.size(); ++m) U.row(boundary_[m]) = U_bd_.row(static_cast<Eigen::Index>(m));
        return U;
    }

    Eigen::MatrixXd extract_interior(const Eigen::MatrixXd& U) const {
        if (U.rows() != size() || U.cols() != k_) throw std::invalid_argument("U has wrong shape");
        Eigen::MatrixXd out(static_cast<Eigen::Index>(interior_.size()), k_);
        for (std::size_t m = 0; m < interior_.size(); ++m) out.row(static_cast<Eigen::Index>(m)) = U.row(interior_[m]);
        return out;
    }

    /// tr(U^T L U) from the blocks: sum over classes of
    /// u_int^T L_int u_int + 2 u_int^T f_bd, plus 2 c_bd.
    double dirichlet_trace(const Eigen::MatrixXd& U_int) const {
        check_interior(U_int);
        return (U_int.transpose() * (L_int_ * U_int)).trace() + 2.0 * (U_int.array() * f_bd_.array()).sum() +
               2.0 * c_bd_;
    }

    /// Sum of W over all rows, frozen and boundary rows included.
    double potential_sum(const Eigen::MatrixXd& U_int) const {
        check_interior(U_int);
        double s = 0.0;
        std::vector<double> row(static_cast<std::size_t>(k_));
        auto add = [&](const auto& r) {
            for (int j = 0; j < k_; ++j) row[j] = r(j);
            s += W_(row);
        };
        for (Eigen::Index i = 0; i < U_int.rows(); ++i) add(U_int.row(i));
        for (Eigen::Index i = 0; i < U_bd_.rows(); ++i) add(U_bd_.row(i));
        if (!frozen_.empty()) {
            std::vector<double> uniform(static_cast<std::size_t>(k_), 1.0 / k_);
            s += static_cast<double>(frozen_.size()) * W_(uniform);
        }
        return s;
    }

    GraphEnergy energy(const Eigen::MatrixXd& U_int) const {
        const double raw = 0.5 * eps_ * dirichlet_trace(U_int) + potential_sum(U_int) / eps_;
        return {raw, raw / static_cast<double>(size())};
    }

private:
    enum class Role : std::uint8_t { Interior, Boundary, Frozen };

    void check_interior(const Eigen::MatrixXd& U_int) const {
        if (U_int.rows() != static_cast<Eigen::Index>(interior_.size()) || U_int.cols() != k_)
            throw std::invalid_argument("interior block has wrong shape");
    }

    void build_blocks() {
        L_ = graph_->laplacian();
        const Eigen::Index n = size();
        std::vector<Eigen::Index> pos(static_cast<std::size_t>(n), -1);
        for (std::size_t m = 0; m < interior_.size(); ++m) pos[interior_[m]] = static_cast<Eigen::Index>(m);
        std::vector<Eigen::Index> bpos(static_cast<std::size_t>(n), -1);
        for (std::size_t m = 0; m < boundary_.size(); ++m) bpos[boundary_[m]] = static_cast<Eigen::Index>(m);
        std::vector<Triplet> ti, tx, tb;
        for (int c = 0; c < L_.outerSize(); ++c) {
            for (SparseMatrix::InnerIterator it(L_, c); it; ++it) {
                const Eigen::Index i = it.row(), j = it.col();
                if (pos[i] >= 0 && pos[j] >= 0) ti.emplace_back(pos[i], pos[j], it.value());
                else if (pos[i] >= 0 && bpos[j] >= 0) tx.emplace_back(pos[i], bpos[j], it.value());
                else if (bpos[i] >= 0 && bpos[j] >= 0) tb.emplace_back(bpos[i], bpos[j], it.value());
            }
        }
        const auto ni = static_cast<Eigen::Index>(interior_.size());
        const auto nb = static_cast<Eigen::Index>(boundary_.size());
        L_int_.resize(ni, ni);
        L_int_.setFromTriplets(ti.begin(), ti.end());
        L_x_.resize(ni, nb);
        L_x_.setFromTriplets(tx.begin(), tx.end());
        L_bd_.resize(nb, nb);
        L_bd_.setFromTriplets(tb.begin(), tb.end());
        f_bd_ = L_x_ * U_bd_;
        c_bd_ = 0.5 * (U_bd_.transpose() * (L_bd_ * U_bd_)).trace();
    }

    std::shared_ptr<const WeightedGraph> graph_;
    std::vector<Eigen::Index> boundary_;
    std::vector<Eigen::Index> interior_, frozen_;
    std::vector<Role> role_;
    int k_;
    double eps_;
    MultiWell W_;
    SparseMatrix L_, L_int_, L_x_, L_bd_;
    Eigen::MatrixXd U_bd_, f_bd_;
    double c_bd_ = 0.0;
};

inline GraphEnergy graph_energy(const LabeledProblem& p, const Eigen::MatrixXd& U) {
    return p.energy(p.extract_interior(U));
}

class GraphSolveError : public std::runtime_error {
public:
    GraphSolveError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

struct GraphSolverOptions {
    Eigen::Index dense_threshold = 4096;
    double cg_tolerance = 1e-10;
    Eigen::Index cg_max_iterations = 10000;
};

/// Solves ((1 + 2h/eps^2) I + h L_int) X = rhs column by column.  Small
/// systems use a cached dense Cholesky factor, larger ones diagonally
/// preconditioned conjugate gradients.
class GraphImplicitSolver {
public:
    explicit GraphImplicitSolver(const LabeledProblem& p, GraphSolverOptions opts = {}) : p_(&p), opts_(opts) {}

    bool dense() const { return p_->L_int().rows() <= opts_.dense_threshold; }
    /// Iterations and relative residual of the last CG solve (largest over columns).
    Eigen::Index last_iterations() const { return last_iterations_; }
    double last_residual() const { return last_residual_; }

    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs, double h) const {
        if (!(h > 0.0)) throw std::invalid_argument("graph implicit solve needs h > 0");
        const Eigen::Index n = p_->L_int().rows();
        if (rhs.rows() != n) throw std::invalid_argument("right-hand side has wrong number of rows");
        if (n == 0) return rhs;
        const double eps = p_->eps();
        const double mass = 1.0 + 2.0 * h / (eps * eps);
        if (h != cached_h_) {
            SparseMatrix A = h * p_->L_int();
            A.diagonal().array() += mass;
            A.makeCompressed();
            if (dense()) {
                llt_.compute(Eigen::MatrixXd(A));
                if (llt_.info() != Eigen::Success) throw GraphSolveError("dense factorisation failed", 0.0);
            } else {
                A_ = std::move(A);
                cg_.setTolerance(opts_.cg_tolerance);
                cg_.setMaxIterations(opts_.cg_max_iterations);
                cg_.compute(A_);
            }
            cached_h_ = h;
        }
        if (dense()) return llt_.solve(rhs);
        Eigen::MatrixXd out(rhs.rows(), rhs.cols());
        last_iterations_ = 0;
        last_residual_ = 0.0;
        for (Eigen::Index c = 0; c < rhs.cols(); ++c) {
            const Eigen::VectorXd b = rhs.col(c);
            const Eigen::VectorXd guess = b / mass;
            out.col(c) = cg_.solveWithGuess(b, guess);
            const double bn = b.norm();
            const double res = bn > 0.0 ? (A_ * out.col(c) - b).norm() / bn : 0.0;
            last_iterations_ = std::max(last_iterations_, static_cast<Eigen::Index>(cg_.iterations()));
            last_residual_ = std::max(last_residual_, res);
            if (cg_.info() != Eigen::Success && res > opts_.cg_tolerance)
                throw GraphSolveError("conjugate gradients did not converge; relative residual " + std::to_string(res),
                                      res);
        }
        return out;
    }

private:
    const LabeledProblem* p_;
    GraphSolverOptions opts_;
    mutable double cached_h_ = -1.0;
    mutable Eigen::LLT<Eigen::MatrixXd> llt_;
    mutable SparseMatrix A_;
    mutable Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg_;
    mutable Eigen::Index last_iterations_ = 0;
    mutable double last_residual_ = 0.0;
};

inline Eigen::MatrixXd graph_implicit_solve(const LabeledProblem& p, const Eigen::MatrixXd& rhs, double h,
                                            GraphSolverOptions opts = {}) {
    return GraphImplicitSolver(p, opts).solve(rhs, h);
}

/// Scheme backend on the interior rows of a labelled problem.
///
/// objective = tr(U^T L U)/2 + sum_i W(U_i)/eps^2 and energy_scale = eps/N, so
/// that gl_energy is the 1/N-normalised graph energy.  The convex part
/// |U_i|^2 / eps^2 and the Laplacian are implicit; every implicit solve is
/// followed by the row-sum projection, which keeps rows of U on the simplex
/// plane and rows of V and of the step gradients summing to zero.
class GraphBackend {
public:
    using Field = Eigen::MatrixXd;

    explicit GraphBackend(const LabeledProblem& p, GraphSolverOptions opts = {}) : p_(&p), solver_(p, opts) {}

    Field implicit_solve(const Field& rhs, double s) const {
        return simplex_project_rows(solver_.solve(rhs, s));
    }

    /// f_bd + W_concave'(U) / eps^2
    Field explicit_grad(const Field& U) const {
        Field g = p_->f_bd();
        const auto& comp = p_->potential().component();
        const double inv = 1.0 / (p_->eps() * p_->eps());
        for (Eigen::Index j = 0; j < U.cols(); ++j)
            for (Eigen::Index i = 0; i < U.rows(); ++i) g(i, j) += inv * comp.concave_prime(U(i, j));
        return g;
    }

    /// Full gradient, projected onto row-sum-zero matrices.
    Field gradient(const Field& U) const {
        Field g = explicit_grad(U) + p_->L_int() * U + (2.0 / (p_->eps() * p_->eps())) * U;
        const Eigen::VectorXd mean = g.rowwise().mean();
        g.colwise() -= mean;
        return g;
    }

    double objective(const Field& U) const {
        const double eps = p_->eps();
        return 0.5 * p_->dirichlet_trace(U) + p_->potential_sum(U) / (eps * eps);
    }

    double inner(const Field& a, const Field& b) const { return (a.array() * b.array()).sum(); }
    double energy_scale() const { return p_->eps() / static_cast<double>(p_->size()); }
    /// Mean entry (1/k while rows stay on the simplex plane).
    double mean(const Field& U) const { return U.size() == 0 ? 0.0 : U.mean(); }

    const LabeledProblem& problem() const { return *p_; }
    const GraphImplicitSolver& solver() const { return solver_; }

private:
    const LabeledProblem* p_;
    GraphImplicitSolver solver_;
};

/// CSV rows: index, true label (or -1), predicted label, largest component.
inline void write_predictions(const std::string& path, const Eigen::MatrixXd& U, const std::vector<int>& truth) {
    if (!truth.empty() && truth.size() != static_cast<std::size_t>(U.rows()))
        throw std::invalid_argument("truth labels must match the rows of U");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write predictions " + path);
    out << std::setprecision(17);
    out << "index,true_label,predicted_label,max_component\n";
    const std::vector<int> pred = classify(U);
    for (Eigen::Index i = 0; i < U.rows(); ++i)
        out << i << ',' << (truth.empty() ? -1 : truth[i]) << ',' << pred[i] << ',' << U.row(i).maxCoeff() << '\n';
}

}  // namespace accelgl

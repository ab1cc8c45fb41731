#pragma once

// Discrete twisted Hodge theory on the periodic grid (Z/N)^n with spacing
// 1/N, flat metric and a constant Lee form.
//
// A p-cochain assigns a real number to every (vertex v, sorted axis set S,
// |S| = p) and approximates the coefficient of dx_S at the barycentre of
// the cell. d is the forward-difference coboundary scaled by N. The wedge
// with w averages the two opposite faces along each axis, so each d^w
// component is T_i = N (shift_i - 1) + w_i (shift_i + 1) / 2; the T_i
// commute, which is what makes d^w o d^w vanish.

#include "lcslab/ce_cohomology.hpp"
#include "lcslab/forms.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstddef>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

namespace lcslab {

using SparseMatrix = Eigen::SparseMatrix<double>;

class Grid {
public:
    Grid(std::size_t n, std::size_t resolution) : n_(n), res_(resolution) {
        if (n == 0) throw std::invalid_argument("Grid: dimension must be positive");
        if (resolution < 2) throw std::invalid_argument("Grid: resolution must be at least 2");
        vertices_ = 1;
        for (std::size_t i = 0; i < n; ++i) vertices_ *= res_;
        for (std::size_t p = 0; p <= n; ++p) sets_.push_back(subsets(n, p));
        for (std::size_t p = 0; p <= n; ++p) {
            std::map<IndexTuple, std::size_t> pos;
            for (std::size_t k = 0; k < sets_[p].size(); ++k) pos[sets_[p][k]] = k;
            set_index_.push_back(std::move(pos));
        }
    }

    std::size_t dimension() const { return n_; }
    std::size_t resolution() const { return res_; }
    double spacing() const { return 1.0 / static_cast<double>(res_); }
    std::size_t vertex_count() const { return vertices_; }
    std::size_t cell_count(std::size_t p) const { return vertices_ * sets_.at(p).size(); }
    const std::vector<IndexTuple>& axis_sets(std::size_t p) const { return sets_.at(p); }

    std::size_t cell(std::size_t p, std::size_t set_pos, std::size_t vertex) const {
        if (set_pos >= sets_.at(p).size()) throw std::out_of_range("Grid::cell: axis set out of range");
        return set_pos * vertices_ + vertex;
    }
    std::size_t set_position(std::size_t p, const IndexTuple& s) const { return set_index_.at(p).at(s); }

    std::vector<std::size_t> coords(std::size_t vertex) const {
        std::vector<std::size_t> c(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            c[i] = vertex % res_;
            vertex /= res_;
        }
        return c;
    }

    /// Vertex shifted by +1 along `axis`, periodically.
    std::size_t shift(std::size_t vertex, std::size_t axis) const {
        std::size_t stride = 1;
        for (std::size_t i = 0; i < axis; ++i) stride *= res_;
        const std::size_t ci = (vertex / stride) % res_;
        return ci + 1 == res_ ? vertex - ci * stride : vertex + stride;
    }

    /// Cell weight of the uniform inner product.
    double weight() const { return 1.0 / static_cast<double>(vertices_); }

private:
    std::size_t n_;
    std::size_t res_;
    std::size_t vertices_ = 1;
    std::vector<std::vector<IndexTuple>> sets_;
    std::vector<std::map<IndexTuple, std::size_t>> set_index_;
};

struct Cochain {
    std::size_t degree = 0;
    Eigen::VectorXd values;
};

class TwistedOperators {
public:
    TwistedOperators(Grid grid, std::vector<double> omega) : grid_(std::move(grid)), omega_(std::move(omega)) {
        const std::size_t n = grid_.dimension();
        if (omega_.size() != n) throw std::invalid_argument("TwistedOperators: Lee form length mismatch");
        const double scale = static_cast<double>(grid_.resolution());
        for (std::size_t p = 0; p < n; ++p) {
            std::vector<Eigen::Triplet<double>> trip;
            const auto& targets = grid_.axis_sets(p + 1);
            for (std::size_t t = 0; t < targets.size(); ++t) {
                const IndexTuple& s = targets[t];
                for (std::size_t pos = 0; pos < s.size(); ++pos) {
                    const auto axis = static_cast<std::size_t>(s[pos]);
                    IndexTuple face = s;
                    face.erase(face.begin() + static_cast<std::ptrdiff_t>(pos));
                    const std::size_t fpos = grid_.set_position(p, face);
                    const double sgn = (pos % 2 == 0) ? 1.0 : -1.0;
                    const double half_w = 0.5 * omega_[axis];
                    for (std::size_t v = 0; v < grid_.vertex_count(); ++v) {
                        const std::size_t row = grid_.cell(p + 1, t, v);
                        const std::size_t here = grid_.cell(p, fpos, v);
                        const std::size_t there = grid_.cell(p, fpos, grid_.shift(v, axis));
                        trip.emplace_back(row, there, sgn * (scale + half_w));
                        trip.emplace_back(row, here, sgn * (half_w - scale));
                    }
                }
            }
            SparseMatrix d(grid_.cell_count(p + 1), grid_.cell_count(p));
            d.setFromTriplets(trip.begin(), trip.end());
            d.prune(0.0);
            d_.push_back(std::move(d));
        }
        for (std::size_t p = 0; p <= n; ++p) {
            SparseMatrix lap(grid_.cell_count(p), grid_.cell_count(p));
            if (p > 0) lap += SparseMatrix(d_[p - 1] * SparseMatrix(d_[p - 1].transpose()));
            if (p < n) lap += SparseMatrix(SparseMatrix(d_[p].transpose()) * d_[p]);
            lap.prune(0.0);
            lap_.push_back(std::move(lap));
        }
    }

    const Grid& grid() const { return grid_; }
    const std::vector<double>& lee() const { return omega_; }

    /// d^w : C^p -> C^{p+1}
    const SparseMatrix& d(std::size_t p) const { return d_.at(p); }
    /// delta^w : C^p -> C^{p-1}, the adjoint of d^w(p-1).
    SparseMatrix codifferential(std::size_t p) const { return d_.at(p - 1).transpose(); }
    const SparseMatrix& laplacian(std::size_t p) const { return lap_.at(p); }

    Eigen::VectorXd apply_d(std::size_t p, const Eigen::VectorXd& a) const {
        if (p >= grid_.dimension()) return Eigen::VectorXd();
        return d_[p] * a;
    }
    Eigen::VectorXd apply_codifferential(std::size_t p, const Eigen::VectorXd& a) const {
        if (p == 0) return Eigen::VectorXd();
        return d_[p - 1].transpose() * a;
    }

    double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const { return grid_.weight() * a.dot(b); }
    double norm(const Eigen::VectorXd& a) const { return std::sqrt(inner(a, a)); }

private:
    Grid grid_;
    std::vector<double> omega_;
    std::vector<SparseMatrix> d_;
    std::vector<SparseMatrix> lap_;
};

inline TwistedOperators build_operators(const Grid& grid, const std::vector<double>& omega) {
    return TwistedOperators(grid, omega);
}

struct CgResult {
    Eigen::VectorXd x;
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

inline constexpr double kCgTolerance = 1e-10;

/// Conjugate gradients for a symmetric positive semidefinite operator with
/// a consistent right-hand side. Returns the best iterate on failure.
template <typename Op>
CgResult conjugate_gradient(const Op& apply, const Eigen::VectorXd& b, Eigen::VectorXd x0,
                            double tol = kCgTolerance, std::size_t max_iter = 0) {
    CgResult res;
    if (max_iter == 0) max_iter = 10 * static_cast<std::size_t>(b.size()) + 100;
    const double bnorm = b.norm();
    res.x = std::move(x0);
    if (bnorm == 0.0) {
        res.x = Eigen::VectorXd::Zero(b.size());
        res.converged = true;
        return res;
    }
    Eigen::VectorXd best = res.x;
    double best_rel = (b - apply(res.x)).norm() / bnorm;
    std::size_t used = 0;
    // Restart from the true residual whenever the recursive one has
    // converged but the true one has not.
    for (int restart = 0; restart < 8 && best_rel > tol && used < max_iter; ++restart) {
        res.x = best;
        Eigen::VectorXd r = b - apply(res.x);
        Eigen::VectorXd p = r;
        double rr = r.squaredNorm();
        for (; used < max_iter && std::sqrt(rr) / bnorm > tol; ++used) {
            const Eigen::VectorXd ap = apply(p);
            const double pap = p.dot(ap);
            if (pap <= 0.0) break;
            const double alpha = rr / pap;
            res.x += alpha * p;
            r -= alpha * ap;
            const double rr_new = r.squaredNorm();
            p = r + (rr_new / rr) * p;
            rr = rr_new;
        }
        const double rel = (b - apply(res.x)).norm() / bnorm;
        if (rel < best_rel) {
            best_rel = rel;
            best = res.x;
        }
    }
    res.x = std::move(best);
    res.iterations = used;
    res.relative_residual = best_rel;
    res.converged = best_rel <= tol;
    return res;
}

struct HodgeSplit {
    Cochain f;     ///< degree p-1 potential
    Cochain beta;  ///< degree p+1 copotential
    Cochain harmonic;
    Eigen::VectorXd exact_part;    ///< d^w f
    Eigen::VectorXd coexact_part;  ///< delta^w beta
    bool converged = true;
    std::size_t iterations = 0;
};

/// alpha = d^w f + delta^w beta + h, by CG on the normal equations of each
/// factor. The optional guesses seed the two solves.
inline HodgeSplit hodge_split(const TwistedOperators& ops, const Cochain& alpha,
                              const Eigen::VectorXd* f_guess = nullptr,
                              const Eigen::VectorXd* beta_guess = nullptr) {
    const std::size_t p = alpha.degree;
    const std::size_t n = ops.grid().dimension();
    const Grid& g = ops.grid();
    if (p > n) throw std::invalid_argument("hodge_split: degree out of range");
    if (static_cast<std::size_t>(alpha.values.size()) != g.cell_count(p))
        throw std::invalid_argument("hodge_split: cochain size mismatch");
    if (!alpha.values.allFinite()) throw std::invalid_argument("hodge_split: non-finite cochain");

    HodgeSplit out;
    out.exact_part = Eigen::VectorXd::Zero(alpha.values.size());
    out.coexact_part = Eigen::VectorXd::Zero(alpha.values.size());

    if (p > 0) {
        const SparseMatrix& d = ops.d(p - 1);
        auto normal = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return d.transpose() * (d * v); };
        Eigen::VectorXd x0 = f_guess ? *f_guess : Eigen::VectorXd::Zero(d.cols());
        auto cg = conjugate_gradient(normal, d.transpose() * alpha.values, std::move(x0));
        out.converged = out.converged && cg.converged;
        out.iterations += cg.iterations;
        out.f = {p - 1, cg.x};
        out.exact_part = d * cg.x;
    } else {
        out.f = {0, Eigen::VectorXd()};
    }
    if (p < n) {
        const SparseMatrix& d = ops.d(p);
        auto normal = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return d * (d.transpose() * v); };
        Eigen::VectorXd x0 = beta_guess ? *beta_guess : Eigen::VectorXd::Zero(d.rows());
        auto cg = conjugate_gradient(normal, d * alpha.values, std::move(x0));
        out.converged = out.converged && cg.converged;
        out.iterations += cg.iterations;
        out.beta = {p + 1, cg.x};
        out.coexact_part = d.transpose() * cg.x;
    } else {
        out.beta = {p, Eigen::VectorXd()};
    }
    out.harmonic = {p, alpha.values - out.exact_part - out.coexact_part};
    return out;
}

struct HarmonicOptions {
    double relative_tolerance = 1e-8;
    bool iterative = false;
    std::size_t dense_limit = 20000;
    std::size_t lanczos_steps = 300;
    unsigned seed = 12345;
};

namespace detail {

/// Smallest Ritz pair of A restricted to the complement of `deflate`.
inline std::pair<double, Eigen::VectorXd> smallest_ritz(const SparseMatrix& a,
                                                       const std::vector<Eigen::VectorXd>& deflate,
                                                       std::size_t steps, std::mt19937& rng,
                                                       double* residual) {
    const auto n = a.rows();
    std::normal_distribution<double> nd;
    auto project = [&](Eigen::VectorXd& v) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& z : deflate) v -= z.dot(v) * z;
    };
    Eigen::VectorXd q(n);
    for (Eigen::Index i = 0; i < n; ++i) q[i] = nd(rng);
    project(q);
    q.normalize();

    const std::size_t k_max = std::min<std::size_t>(steps, static_cast<std::size_t>(n) - deflate.size());
    Eigen::MatrixXd basis(n, k_max);
    std::vector<double> alpha, beta;
    std::size_t k = 0;
    for (; k < k_max; ++k) {
        basis.col(static_cast<Eigen::Index>(k)) = q;
        Eigen::VectorXd w = a * q;
        alpha.push_back(q.dot(w));
        // Full reorthogonalization against the Krylov basis and the deflation set.
        for (int pass = 0; pass < 2; ++pass) {
            project(w);
            for (std::size_t j = 0; j <= k; ++j) {
                const auto col = basis.col(static_cast<Eigen::Index>(j));
                w -= col.dot(w) * col;
            }
        }
        const double b = w.norm();
        if (k + 1 == k_max || b < 1e-12) {
            ++k;
            break;
        }
        beta.push_back(b);
        q = w / b;
    }
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const Eigen::VectorXd s = es.eigenvectors().col(0);
    Eigen::VectorXd y = basis.leftCols(static_cast<Eigen::Index>(k)) * s;
    y.normalize();
    const double theta = es.eigenvalues()[0];
    if (residual) *residual = (a * y - theta * y).norm();
    return {theta, y};
}

}  // namespace detail

/// Largest eigenvalue bound from Gershgorin discs.
inline double gershgorin_bound(const SparseMatrix& a) {
    double m = 0.0;
    for (Eigen::Index k = 0; k < a.outerSize(); ++k) {
        double s = 0.0;
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) s += std::abs(it.value());
        m = std::max(m, s);
    }
    return m;
}

/// Dimension of ker Delta_w on p-cochains: eigenvalues below
/// relative_tolerance times the largest eigenvalue.
inline std::size_t harmonic_dim(const TwistedOperators& ops, std::size_t p, const HarmonicOptions& opt = {}) {
    const SparseMatrix& lap = ops.laplacian(p);
    const auto size = static_cast<std::size_t>(lap.rows());
    if (!opt.iterative) {
        if (size > opt.dense_limit)
            throw std::length_error("harmonic_dim: matrix exceeds the dense size cap; enable the iterative path");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(lap), Eigen::EigenvaluesOnly);
        const Eigen::VectorXd ev = es.eigenvalues();
        const double thr = opt.relative_tolerance * std::max(ev.maxCoeff(), 0.0);
        std::size_t count = 0;
        for (Eigen::Index i = 0; i < ev.size(); ++i)
            if (ev[i] < thr) ++count;
        return count;
    }

    // Lanczos with deflation of converged null vectors.
    const double lam_max = gershgorin_bound(lap);
    const double thr = opt.relative_tolerance * lam_max;
    std::mt19937 rng(opt.seed);
    std::vector<Eigen::VectorXd> found;
    std::size_t steps = opt.lanczos_steps;
    while (found.size() < size) {
        double res = 0.0;
        auto [theta, y] = detail::smallest_ritz(lap, found, steps, rng, &res);
        if (theta >= thr) {
            // A Ritz value only bounds the smallest eigenvalue from above;
            // stop only once the pair has converged.
            if (res > 1e-6 * lam_max && steps < size) {
                steps *= 2;
                continue;
            }
            break;
        }
        found.push_back(std::move(y));
    }
    return found.size();
}

struct FluxSplit {
    Cochain potential_integral;  ///< sum_t w_t f_t
    Cochain harmonic_integral;   ///< sum_t w_t h_t
    double harmonic_magnitude = 0.0;
    bool converged = true;
};

/// Splits each sample alpha_t = d^w f_t + h_t (+ coexact) and integrates in t
/// with the supplied quadrature weights.
inline FluxSplit flux_split(const TwistedOperators& ops, const std::vector<Cochain>& samples,
                            const std::vector<double>& weights) {
    if (samples.size() != weights.size()) throw std::invalid_argument("flux_split: sample/weight count mismatch");
    const Grid& g = ops.grid();
    FluxSplit out;
    out.potential_integral = {0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.cell_count(0)))};
    out.harmonic_integral = {1, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.cell_count(1)))};
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (samples[k].degree != 1) throw std::invalid_argument("flux_split: samples must be 1-cochains");
        const HodgeSplit s = hodge_split(ops, samples[k]);
        out.converged = out.converged && s.converged;
        out.potential_integral.values += weights[k] * s.f.values;
        out.harmonic_integral.values += weights[k] * s.harmonic.values;
    }
    out.harmonic_magnitude = ops.norm(out.harmonic_integral.values);
    return out;
}

/// Samples a p-form at the cell barycentres of the grid.
inline Cochain sample_cochain(const Grid& g, const Form& a) {
    if (a.dimension() != g.dimension()) throw std::invalid_argument("sample_cochain: dimension mismatch");
    const auto p = static_cast<std::size_t>(a.degree());
    Cochain c{p, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.cell_count(p)))};
    const double h = g.spacing();
    std::vector<double> pt(g.dimension());
    const auto& sets = g.axis_sets(p);
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const CoeffFn coeff = a.coefficient(sets[s]);
        if (coeff.is_zero()) continue;
        const NumericFn f(coeff);
        for (std::size_t v = 0; v < g.vertex_count(); ++v) {
            const auto cv = g.coords(v);
            for (std::size_t i = 0; i < pt.size(); ++i) pt[i] = static_cast<double>(cv[i]) * h;
            for (int axis : sets[s]) pt[static_cast<std::size_t>(axis)] += 0.5 * h;
            c.values[static_cast<Eigen::Index>(g.cell(p, s, v))] = f(pt);
        }
    }
    return c;
}

}  // namespace lcslab

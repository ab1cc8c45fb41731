#pragma once

// Exact linear algebra over Q.
//
// Rows are cleared of denominators and reduced with fraction-free (Bareiss)
// elimination over Z, so every intermediate entry is a minor of the
// integerized input and every division is exact. Ranks are unambiguous.

#include "lcslab/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace lcslab {

using RationalMatrix = std::vector<std::vector<Rational>>;
using RationalVector = std::vector<Rational>;

namespace detail {

using IntegerMatrix = std::vector<std::vector<Integer>>;

/// Scales a rational row by the lcm of its denominators.
inline std::vector<Integer> integerize(const RationalVector& row, Integer* scale = nullptr) {
    Integer l = 1;
    for (const auto& v : row) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), v.get_den_mpz_t());
    std::vector<Integer> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = row[j].get_num() * (l / row[j].get_den());
    if (scale) *scale = l;
    return out;
}

struct Echelon {
    IntegerMatrix m;
    std::vector<std::size_t> pivot_cols;
    int swaps = 0;
};

/// Fraction-free forward elimination restricted to the first `cols` columns;
/// trailing columns (an augmented right-hand side) are carried along.
inline Echelon bareiss_echelon(IntegerMatrix m, std::size_t cols) {
    Echelon e;
    const std::size_t rows = m.size();
    const std::size_t width = rows ? m[0].size() : 0;
    Integer prev = 1;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t p = r;
        while (p < rows && m[p][c] == 0) ++p;
        if (p == rows) continue;
        if (p != r) {
            std::swap(m[p], m[r]);
            ++e.swaps;
        }
        const Integer& piv = m[r][c];
        for (std::size_t i = r + 1; i < rows; ++i) {
            if (m[i][c] == 0) {
                // The update still has to rescale the row to keep later
                // divisions exact.
                for (std::size_t j = c + 1; j < width; ++j) {
                    if (m[i][j] == 0) continue;
                    Integer t = piv * m[i][j];
                    mpz_divexact(m[i][j].get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
                }
                continue;
            }
            const Integer lead = m[i][c];
            for (std::size_t j = c + 1; j < width; ++j) {
                Integer t = piv * m[i][j] - lead * m[r][j];
                mpz_divexact(m[i][j].get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
            }
            m[i][c] = 0;
        }
        prev = m[r][c];
        e.pivot_cols.push_back(c);
        ++r;
    }
    e.m = std::move(m);
    return e;
}

}  // namespace detail

inline std::size_t rank(const RationalMatrix& a) {
    if (a.empty() || a[0].empty()) return 0;
    detail::IntegerMatrix m;
    m.reserve(a.size());
    for (const auto& row : a) m.push_back(detail::integerize(row));
    return detail::bareiss_echelon(std::move(m), a[0].size()).pivot_cols.size();
}

inline Rational determinant(const RationalMatrix& a) {
    const std::size_t n = a.size();
    for (const auto& row : a)
        if (row.size() != n) throw std::invalid_argument("determinant of a non-square matrix");
    if (n == 0) return Rational(1);
    detail::IntegerMatrix m;
    Rational scale = 1;
    for (const auto& row : a) {
        Integer s;
        m.push_back(detail::integerize(row, &s));
        scale *= Rational(s);
    }
    auto e = detail::bareiss_echelon(std::move(m), n);
    if (e.pivot_cols.size() < n) return Rational(0);
    Rational det(e.m[n - 1][n - 1]);
    if (e.swaps % 2) det = -det;
    det /= scale;
    return det;
}

/// One solution of A x = b (free variables set to zero), or nullopt when the
/// system is inconsistent.
inline std::optional<RationalVector> solve(const RationalMatrix& a, const RationalVector& b) {
    const std::size_t rows = a.size();
    if (b.size() != rows) throw std::invalid_argument("solve: right-hand side length mismatch");
    const std::size_t cols = rows ? a[0].size() : 0;
    if (rows == 0) return RationalVector(cols, Rational(0));

    detail::IntegerMatrix m;
    m.reserve(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        if (a[i].size() != cols) throw std::invalid_argument("solve: ragged matrix");
        RationalVector aug = a[i];
        aug.push_back(b[i]);
        m.push_back(detail::integerize(aug));
    }
    auto e = detail::bareiss_echelon(std::move(m), cols);
    const std::size_t r = e.pivot_cols.size();
    for (std::size_t i = r; i < rows; ++i)
        if (e.m[i][cols] != 0) return std::nullopt;

    RationalVector x(cols, Rational(0));
    for (std::size_t k = r; k-- > 0;) {
        const std::size_t c = e.pivot_cols[k];
        Rational acc(e.m[k][cols]);
        for (std::size_t j = c + 1; j < cols; ++j)
            if (e.m[k][j] != 0 && x[j] != 0) acc -= Rational(e.m[k][j]) * x[j];
        x[c] = acc / Rational(e.m[k][c]);
        x[c].canonicalize();
    }
    return x;
}

inline RationalVector multiply(const RationalMatrix& a, const RationalVector& x) {
    RationalVector y(a.size(), Rational(0));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != x.size()) throw std::invalid_argument("multiply: dimension mismatch");
        for (std::size_t j = 0; j < x.size(); ++j)
            if (a[i][j] != 0 && x[j] != 0) y[i] += a[i][j] * x[j];
    }
    return y;
}

/// Sparse linear system with rational entries, solved block by block.
///
/// Unknowns coupled through no common equation never share a block, so the
/// dense elimination cost is governed by the largest connected component
/// rather than the total size.
class SparseSystem {
public:
    explicit SparseSystem(std::size_t unknowns) : unknowns_(unknowns) {}

    std::size_t add_row(std::map<std::size_t, Rational> entries, Rational rhs) {
        for (auto it = entries.begin(); it != entries.end();) {
            if (it->first >= unknowns_) throw std::out_of_range("SparseSystem: unknown index");
            if (it->second == 0) it = entries.erase(it);
            else ++it;
        }
        rows_.push_back({std::move(entries), std::move(rhs)});
        return rows_.size() - 1;
    }

    std::size_t unknowns() const { return unknowns_; }
    std::size_t rows() const { return rows_.size(); }

    std::optional<RationalVector> solve() const {
        RationalVector x(unknowns_, Rational(0));
        std::vector<std::size_t> parent(unknowns_);
        std::iota(parent.begin(), parent.end(), std::size_t{0});
        auto find = [&](std::size_t v) {
            while (parent[v] != v) v = parent[v] = parent[parent[v]];
            return v;
        };
        for (const auto& row : rows_) {
            if (row.entries.empty()) {
                if (row.rhs != 0) return std::nullopt;
                continue;
            }
            const std::size_t root = find(row.entries.begin()->first);
            for (const auto& [j, v] : row.entries) parent[find(j)] = root;
        }

        std::map<std::size_t, std::vector<std::size_t>> block_rows;
        for (std::size_t i = 0; i < rows_.size(); ++i)
            if (!rows_[i].entries.empty())
                block_rows[find(rows_[i].entries.begin()->first)].push_back(i);
        std::map<std::size_t, std::vector<std::size_t>> block_cols;
        for (std::size_t j = 0; j < unknowns_; ++j) block_cols[find(j)].push_back(j);

        for (const auto& [root, ridx] : block_rows) {
            const auto& cidx = block_cols[root];
            std::map<std::size_t, std::size_t> local;
            for (std::size_t k = 0; k < cidx.size(); ++k) local[cidx[k]] = k;
            RationalMatrix a(ridx.size(), RationalVector(cidx.size(), Rational(0)));
            RationalVector b(ridx.size());
            for (std::size_t i = 0; i < ridx.size(); ++i) {
                for (const auto& [j, v] : rows_[ridx[i]].entries) a[i][local[j]] = v;
                b[i] = rows_[ridx[i]].rhs;
            }
            auto sol = lcslab::solve(a, b);
            if (!sol) return std::nullopt;
            for (std::size_t k = 0; k < cidx.size(); ++k) x[cidx[k]] = (*sol)[k];
        }
        return x;
    }

private:
    struct Row {
        std::map<std::size_t, Rational> entries;
        Rational rhs;
    };
    std::size_t unknowns_;
    std::vector<Row> rows_;
};

}  // namespace lcslab

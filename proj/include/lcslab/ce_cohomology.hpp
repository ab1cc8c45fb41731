#pragma once

// Twisted Chevalley-Eilenberg complex of a nilpotent Lie algebra.
//
// Left-invariant forms on a nilmanifold form a finite complex
// Lambda^* g^* with de^k = -sum_{i<j} c^k_{ij} e^i ^ e^j, extended as a
// derivation. Twisting by an invariant closed 1-form w gives
// d^w = d + w ^ . Everything here is exact over Q.

#include "lcslab/exact_linalg.hpp"
#include "lcslab/forms.hpp"
#include "lcslab/rational.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lcslab {

/// [e_i, e_j] = sum_k c^k_{ij} e_k, stored antisymmetrically.
class LieAlgebraSpec {
public:
    struct Bracket {
        int i = 0;
        int j = 0;
        int k = 0;
        Rational c;
    };

    LieAlgebraSpec(std::size_t dim, std::vector<Bracket> brackets)
        : dim_(dim), brackets_(std::move(brackets)),
          c_(dim, std::vector<std::vector<Rational>>(dim, std::vector<Rational>(dim, Rational(0)))) {
        for (const auto& b : brackets_) {
            auto in_range = [&](int v) { return v >= 0 && static_cast<std::size_t>(v) < dim_; };
            if (!in_range(b.i) || !in_range(b.j) || !in_range(b.k))
                throw std::out_of_range("LieAlgebraSpec: bracket index out of range");
            if (b.i == b.j) {
                if (b.c != 0) throw std::invalid_argument("LieAlgebraSpec: [e_i, e_i] must vanish");
                continue;
            }
            c_[b.k][b.i][b.j] += b.c;
            c_[b.k][b.j][b.i] -= b.c;
        }
        if (!jacobi_holds()) throw std::domain_error("LieAlgebraSpec: Jacobi identity fails");
    }

    std::size_t dimension() const { return dim_; }
    const std::vector<Bracket>& brackets() const { return brackets_; }
    /// c^k_{ij}
    const Rational& constant(std::size_t k, std::size_t i, std::size_t j) const { return c_[k][i][j]; }

    bool jacobi_holds() const {
        // sum_cyc [[e_i, e_j], e_l] = sum_s (c^k_ij c^s_kl + c^k_jl c^s_ki + c^k_li c^s_kj) e_s
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = 0; j < dim_; ++j)
                for (std::size_t l = 0; l < dim_; ++l)
                    for (std::size_t s = 0; s < dim_; ++s) {
                        Rational acc = 0;
                        for (std::size_t k = 0; k < dim_; ++k)
                            acc += c_[k][i][j] * c_[s][k][l] + c_[k][j][l] * c_[s][k][i] + c_[k][l][i] * c_[s][k][j];
                        if (acc != 0) return false;
                    }
        return true;
    }

private:
    std::size_t dim_;
    std::vector<Bracket> brackets_;
    std::vector<std::vector<std::vector<Rational>>> c_;
};

/// Sorted p-subsets of {0..m-1} in lexicographic order.
inline std::vector<IndexTuple> subsets(std::size_t m, std::size_t p) {
    std::vector<IndexTuple> out;
    IndexTuple cur;
    auto rec = [&](auto&& self, int start) -> void {
        if (cur.size() == p) {
            out.push_back(cur);
            return;
        }
        for (int v = start; v < static_cast<int>(m); ++v) {
            cur.push_back(v);
            self(self, v + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

class CeComplex {
public:
    /// Assembles d^w for all degrees; w is given in the invariant coframe.
    static CeComplex build(const LieAlgebraSpec& g, const RationalVector& omega) {
        const std::size_t m = g.dimension();
        if (omega.size() != m) throw std::invalid_argument("CeComplex: Lee form length mismatch");
        CeComplex cx;
        cx.m_ = m;
        cx.omega_ = omega;
        for (std::size_t p = 0; p <= m; ++p) {
            cx.basis_.push_back(subsets(m, p));
            std::map<IndexTuple, std::size_t> pos;
            for (std::size_t i = 0; i < cx.basis_[p].size(); ++i) pos[cx.basis_[p][i]] = i;
            cx.index_.push_back(std::move(pos));
        }

        // de^k as a sparse 2-vector.
        std::vector<std::map<IndexTuple, Rational>> de(m);
        for (std::size_t k = 0; k < m; ++k)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = i + 1; j < m; ++j) {
                    const Rational& c = g.constant(k, i, j);
                    if (c != 0) de[k][{static_cast<int>(i), static_cast<int>(j)}] -= c;
                }

        for (std::size_t p = 0; p < m; ++p) {
            RationalMatrix d(cx.basis_[p + 1].size(), RationalVector(cx.basis_[p].size(), Rational(0)));
            RationalMatrix d_plain = d;
            for (std::size_t col = 0; col < cx.basis_[p].size(); ++col) {
                const IndexTuple& src = cx.basis_[p][col];
                for (std::size_t s = 0; s < src.size(); ++s) {
                    const Rational sgn = (s % 2 == 0) ? 1 : -1;
                    for (const auto& [pairIdx, c] : de[static_cast<std::size_t>(src[s])]) {
                        IndexTuple t(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(s));
                        t.insert(t.end(), pairIdx.begin(), pairIdx.end());
                        t.insert(t.end(), src.begin() + static_cast<std::ptrdiff_t>(s) + 1, src.end());
                        const int ps = sort_with_sign(t);
                        if (ps == 0) continue;
                        const Rational v = sgn * c * ps;
                        d[cx.index_[p + 1].at(t)][col] += v;
                        d_plain[cx.index_[p + 1].at(t)][col] += v;
                    }
                }
                for (std::size_t k = 0; k < m; ++k) {
                    if (omega[k] == 0) continue;
                    IndexTuple t{static_cast<int>(k)};
                    t.insert(t.end(), src.begin(), src.end());
                    const int ps = sort_with_sign(t);
                    if (ps == 0) continue;
                    d[cx.index_[p + 1].at(t)][col] += omega[k] * ps;
                }
            }
            cx.d_.push_back(std::move(d));
            cx.d_plain_.push_back(std::move(d_plain));
        }

        if (m >= 2 && !is_zero_vector(multiply(cx.d_plain_[1], omega)))
            throw std::domain_error("CeComplex: Lee form is not closed");
        for (std::size_t p = 0; p + 1 < m; ++p)
            if (!composes_to_zero(cx.d_[p + 1], cx.d_[p]))
                throw std::logic_error("CeComplex: d^w o d^w != 0");
        return cx;
    }

    std::size_t dimension() const { return m_; }
    const RationalVector& lee() const { return omega_; }
    const std::vector<IndexTuple>& basis(std::size_t p) const { return basis_.at(p); }
    /// d^w : Lambda^p -> Lambda^{p+1}, rows indexed by basis(p+1).
    const RationalMatrix& differential(std::size_t p) const { return d_.at(p); }

    RationalVector apply(std::size_t p, const RationalVector& v) const {
        if (v.size() != basis_.at(p).size()) throw std::invalid_argument("CeComplex: cochain length mismatch");
        if (p == m_) return {};
        return multiply(d_[p], v);
    }

    static bool is_zero_vector(const RationalVector& v) {
        for (const auto& x : v)
            if (x != 0) return false;
        return true;
    }

private:
    static bool composes_to_zero(const RationalMatrix& b, const RationalMatrix& a) {
        for (std::size_t i = 0; i < b.size(); ++i)
            for (std::size_t j = 0; j < (a.empty() ? 0 : a[0].size()); ++j) {
                Rational acc = 0;
                for (std::size_t k = 0; k < a.size(); ++k) acc += b[i][k] * a[k][j];
                if (acc != 0) return false;
            }
        return true;
    }

    std::size_t m_ = 0;
    RationalVector omega_;
    std::vector<std::vector<IndexTuple>> basis_;
    std::vector<std::map<IndexTuple, std::size_t>> index_;
    std::vector<RationalMatrix> d_;
    std::vector<RationalMatrix> d_plain_;
};

/// b^p = dim Lambda^p - rank d_p - rank d_{p-1}.
inline std::vector<std::size_t> betti(const CeComplex& cx) {
    const std::size_t m = cx.dimension();
    std::vector<std::size_t> ranks(m + 1, 0);  // ranks[p] = rank of d_p
    for (std::size_t p = 0; p < m; ++p) ranks[p] = rank(cx.differential(p));
    std::vector<std::size_t> b(m + 1);
    for (std::size_t p = 0; p <= m; ++p) {
        const std::size_t incoming = p > 0 ? ranks[p - 1] : 0;
        b[p] = cx.basis(p).size() - ranks[p] - incoming;
    }
    return b;
}

inline long euler_characteristic(const std::vector<std::size_t>& b) {
    long chi = 0;
    for (std::size_t p = 0; p < b.size(); ++p) chi += (p % 2 == 0 ? 1L : -1L) * static_cast<long>(b[p]);
    return chi;
}

enum class ClassKind { zero_class, nonzero_class, not_cocycle };

inline const char* to_string(ClassKind k) {
    switch (k) {
        case ClassKind::zero_class: return "zero_class";
        case ClassKind::nonzero_class: return "nonzero_class";
        case ClassKind::not_cocycle: return "not_cocycle";
    }
    return "?";
}

struct ClassDecision {
    ClassKind kind = ClassKind::nonzero_class;
    RationalVector primitive;  ///< set for zero_class
    RationalVector residual;   ///< d^w(input), set for not_cocycle
};

/// Decides whether a degree-p cocycle is a d^w-coboundary.
inline ClassDecision class_decide(const CeComplex& cx, const RationalVector& cocycle, std::size_t p) {
    if (p > cx.dimension()) throw std::out_of_range("class_decide: degree out of range");
    ClassDecision out;
    const RationalVector image = cx.apply(p, cocycle);
    if (!CeComplex::is_zero_vector(image)) {
        out.kind = ClassKind::not_cocycle;
        out.residual = image;
        return out;
    }
    if (p == 0) {
        out.kind = CeComplex::is_zero_vector(cocycle) ? ClassKind::zero_class : ClassKind::nonzero_class;
        return out;
    }
    auto sol = solve(cx.differential(p - 1), cocycle);
    if (!sol) {
        out.kind = ClassKind::nonzero_class;
        return out;
    }
    out.kind = ClassKind::zero_class;
    out.primitive = std::move(*sol);
    return out;
}

namespace detail {

struct ExpansionKey {
    IndexTuple component;
    std::vector<int> powers;
    std::vector<Rational> slopes;
    Rational exponent;

    friend bool operator<(const ExpansionKey& a, const ExpansionKey& b) {
        if (a.component != b.component) return a.component < b.component;
        if (a.powers != b.powers) return a.powers < b.powers;
        if (const int c = compare(a.slopes, b.slopes); c != 0) return c < 0;
        return a.exponent < b.exponent;
    }
};

/// Splits a form into rational coordinates over the Q-basis
/// e^r x^a e^{<k,x>} dx_I.
inline std::map<ExpansionKey, Rational> expand_rational(const Form& a) {
    std::map<ExpansionKey, Rational> out;
    for (const auto& [idx, f] : a.components())
        for (const auto& t : f.terms())
            for (const auto& e : t.coeff.terms()) out[{idx, t.powers, t.slopes, e.r}] += e.q;
    return out;
}

}  // namespace detail

/// Rational coordinates c_I with a = sum_I c_I e^{i_1} ^ ... ^ e^{i_p} in the
/// given coframe, or nullopt when a is not a constant combination.
inline std::optional<RationalVector> express_in_coframe(const Form& a, const std::vector<Form>& coframe) {
    const std::size_t m = coframe.size();
    const auto p = static_cast<std::size_t>(a.degree());
    if (p > m) return std::nullopt;
    const auto basis = subsets(m, p);
    std::vector<std::map<detail::ExpansionKey, Rational>> images;
    for (const auto& idx : basis) {
        Form e = Form::function(CoeffFn::constant(a.dimension(), ExpScalar(1)));
        for (int i : idx) e = wedge(e, coframe.at(static_cast<std::size_t>(i)));
        images.push_back(detail::expand_rational(e));
    }
    std::map<detail::ExpansionKey, std::map<std::size_t, Rational>> rows;
    for (std::size_t j = 0; j < images.size(); ++j)
        for (const auto& [k, v] : images[j]) rows[k][j] += v;
    const auto target = detail::expand_rational(a);
    for (const auto& [k, v] : target) rows[k];

    SparseSystem sys(basis.size());
    for (auto& [k, entries] : rows) {
        auto it = target.find(k);
        sys.add_row(std::move(entries), it == target.end() ? Rational(0) : it->second);
    }
    return sys.solve();
}

/// Structure constants read off an invariant coframe through
/// de^k = -sum_{i<j} c^k_{ij} e^i ^ e^j.
inline LieAlgebraSpec derive_lie_algebra(const std::vector<Form>& coframe) {
    const std::size_t m = coframe.size();
    std::vector<LieAlgebraSpec::Bracket> brackets;
    const auto pairs = subsets(m, 2);
    for (std::size_t k = 0; k < m; ++k) {
        auto c = express_in_coframe(ext_d(coframe[k]), coframe);
        if (!c) throw std::domain_error("derive_lie_algebra: de^k is not a constant combination of e^i ^ e^j");
        for (std::size_t q = 0; q < pairs.size(); ++q)
            if ((*c)[q] != 0) brackets.push_back({pairs[q][0], pairs[q][1], static_cast<int>(k), -(*c)[q]});
    }
    return LieAlgebraSpec(m, std::move(brackets));
}

}  // namespace lcslab

#pragma once

// Exterior calculus over CoeffFn coefficients.
//
// A p-form on R^n is stored as a sparse map from strictly increasing index
// tuples (i_1 < ... < i_p) to coefficients, meaning
// sum f_I dx_{i_1} ^ ... ^ dx_{i_p}. Zero coefficients are never stored.

#include "lcslab/coeff_fn.hpp"
#include "lcslab/exact_linalg.hpp"

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lcslab {

using IndexTuple = std::vector<int>;

/// Sorts `idx` in place and returns the permutation sign, or 0 when an
/// index repeats.
inline int sort_with_sign(IndexTuple& idx) {
    int sgn = 1;
    for (std::size_t i = 1; i < idx.size(); ++i)
        for (std::size_t j = i; j > 0 && idx[j - 1] >= idx[j]; --j) {
            if (idx[j - 1] == idx[j]) return 0;
            std::swap(idx[j - 1], idx[j]);
            sgn = -sgn;
        }
    return sgn;
}

class Form {
public:
    Form() = default;
    Form(std::size_t n, int degree) : n_(n), p_(degree) {
        // Degrees above n are allowed and hold only the zero form.
        if (degree < 0) throw std::invalid_argument("Form: negative degree");
    }

    static Form function(const CoeffFn& f) {
        Form a(f.dimension(), 0);
        a.add(IndexTuple{}, f);
        return a;
    }

    /// dx_i
    static Form dx(std::size_t n, int i) {
        Form a(n, 1);
        a.add({i}, CoeffFn::constant(n, ExpScalar(1)));
        return a;
    }

    /// coeff * dx_{idx}; `idx` may be unsorted.
    static Form monomial(std::size_t n, IndexTuple idx, const CoeffFn& coeff) {
        Form a(n, static_cast<int>(idx.size()));
        a.add(std::move(idx), coeff);
        return a;
    }

    std::size_t dimension() const { return n_; }
    int degree() const { return p_; }
    bool is_zero() const { return comps_.empty(); }
    const std::map<IndexTuple, CoeffFn>& components() const { return comps_; }

    CoeffFn coefficient(IndexTuple idx) const {
        const int s = sort_with_sign(idx);
        if (s == 0) return CoeffFn(n_);
        auto it = comps_.find(idx);
        if (it == comps_.end()) return CoeffFn(n_);
        return s > 0 ? it->second : -it->second;
    }

    /// Adds coeff * dx_{idx}, normalizing the index order with its sign.
    void add(IndexTuple idx, const CoeffFn& coeff) {
        if (coeff.dimension() != n_) throw std::invalid_argument("Form: coefficient dimension mismatch");
        if (static_cast<int>(idx.size()) != p_) throw std::invalid_argument("Form: index tuple has wrong degree");
        for (int i : idx)
            if (i < 0 || static_cast<std::size_t>(i) >= n_) throw std::out_of_range("Form: index out of range");
        const int s = sort_with_sign(idx);
        if (s == 0 || coeff.is_zero()) return;
        auto it = comps_.find(idx);
        if (it == comps_.end()) {
            comps_.emplace(std::move(idx), s > 0 ? coeff : -coeff);
            return;
        }
        it->second = s > 0 ? it->second + coeff : it->second - coeff;
        if (it->second.is_zero()) comps_.erase(it);
    }

    Form operator-() const {
        Form a = *this;
        for (auto& [k, v] : a.comps_) v = -v;
        return a;
    }
    friend Form operator+(const Form& a, const Form& b) {
        check_same(a, b);
        Form r = a;
        for (const auto& [k, v] : b.comps_) r.add(k, v);
        return r;
    }
    friend Form operator-(const Form& a, const Form& b) { return a + (-b); }

    /// f * a for a function f.
    friend Form operator*(const CoeffFn& f, const Form& a) {
        if (f.dimension() != a.n_) throw std::invalid_argument("Form: coefficient dimension mismatch");
        Form r(a.n_, a.p_);
        for (const auto& [k, v] : a.comps_) r.add(k, f * v);
        return r;
    }
    Form scaled(const ExpScalar& c) const {
        Form r(n_, p_);
        for (const auto& [k, v] : comps_) r.add(k, v.scaled(c));
        return r;
    }

    friend bool operator==(const Form& a, const Form& b) {
        if (a.n_ != b.n_ || a.p_ != b.p_ || a.comps_.size() != b.comps_.size()) return false;
        auto i = a.comps_.begin();
        auto j = b.comps_.begin();
        for (; i != a.comps_.end(); ++i, ++j)
            if (i->first != j->first || i->second != j->second) return false;
        return true;
    }
    friend bool operator!=(const Form& a, const Form& b) { return !(a == b); }

    std::string str(const std::vector<std::string>& names = {}) const {
        if (comps_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& [idx, f] : comps_) {
            if (!first) os << " + ";
            first = false;
            std::string c = f.str(names);
            const bool compound = c.find(' ') != std::string::npos;
            if (idx.empty()) {
                os << c;
                continue;
            }
            if (compound) os << "(" << c << ") ";
            else if (c == "-1") os << "-";
            else if (c != "1") os << c << " ";
            for (std::size_t k = 0; k < idx.size(); ++k) {
                if (k) os << "^";
                os << "d" << (static_cast<std::size_t>(idx[k]) < names.size() ? names[idx[k]] : "x" + std::to_string(idx[k]));
            }
        }
        return os.str();
    }

private:
    static void check_same(const Form& a, const Form& b) {
        if (a.n_ != b.n_) throw std::invalid_argument("Form: dimension mismatch");
        if (a.p_ != b.p_) throw std::invalid_argument("Form: degree mismatch");
    }

    std::size_t n_ = 0;
    int p_ = 0;
    std::map<IndexTuple, CoeffFn> comps_;
};

class VectorField {
public:
    VectorField() = default;
    explicit VectorField(std::size_t n) : comps_(n, CoeffFn(n)) {}
    explicit VectorField(std::vector<CoeffFn> comps) : comps_(std::move(comps)) {
        for (const auto& c : comps_)
            if (c.dimension() != comps_.size())
                throw std::invalid_argument("VectorField: component count must equal dimension");
    }

    /// d/dx_i
    static VectorField basis(std::size_t n, std::size_t i) {
        VectorField x(n);
        x.comps_.at(i) = CoeffFn::constant(n, ExpScalar(1));
        return x;
    }

    std::size_t dimension() const { return comps_.size(); }
    const CoeffFn& operator[](std::size_t i) const { return comps_.at(i); }
    CoeffFn& operator[](std::size_t i) { return comps_.at(i); }
    const std::vector<CoeffFn>& components() const { return comps_; }

    bool is_zero() const {
        return std::all_of(comps_.begin(), comps_.end(), [](const CoeffFn& c) { return c.is_zero(); });
    }

    friend VectorField operator+(const VectorField& a, const VectorField& b) {
        if (a.dimension() != b.dimension()) throw std::invalid_argument("VectorField: dimension mismatch");
        VectorField r = a;
        for (std::size_t i = 0; i < a.dimension(); ++i) r.comps_[i] += b.comps_[i];
        return r;
    }
    VectorField operator-() const {
        VectorField r = *this;
        for (auto& c : r.comps_) c = -c;
        return r;
    }
    friend VectorField operator-(const VectorField& a, const VectorField& b) { return a + (-b); }
    VectorField scaled(const ExpScalar& c) const {
        VectorField r = *this;
        for (auto& v : r.comps_) v = v.scaled(c);
        return r;
    }
    friend VectorField operator*(const CoeffFn& f, const VectorField& x) {
        VectorField r = x;
        for (auto& v : r.comps_) v = f * v;
        return r;
    }

    std::vector<double> eval(std::span<const double> pt) const {
        std::vector<double> v(comps_.size());
        for (std::size_t i = 0; i < comps_.size(); ++i) v[i] = comps_[i].eval(pt);
        return v;
    }

    friend bool operator==(const VectorField& a, const VectorField& b) { return a.comps_ == b.comps_; }
    friend bool operator!=(const VectorField& a, const VectorField& b) { return !(a == b); }

    std::string str(const std::vector<std::string>& names = {}) const {
        std::ostringstream os;
        bool first = true;
        for (std::size_t i = 0; i < comps_.size(); ++i) {
            if (comps_[i].is_zero()) continue;
            if (!first) os << " + ";
            first = false;
            const std::string c = comps_[i].str(names);
            if (comps_[i].terms().size() > 1) os << "(" << c << ") ";
            else if (c == "-1") os << "-";
            else if (c != "1") os << c << " ";
            os << "d/d" << (i < names.size() ? names[i] : "x" + std::to_string(i));
        }
        return first ? "0" : os.str();
    }

private:
    std::vector<CoeffFn> comps_;
};

/// x -> A x + b with A invertible over Q.
class AffineMap {
public:
    AffineMap() = default;
    AffineMap(RationalMatrix a, RationalVector b) : a_(std::move(a)), b_(std::move(b)) {
        const std::size_t n = b_.size();
        if (a_.size() != n) throw std::invalid_argument("AffineMap: dimension mismatch");
        for (const auto& row : a_)
            if (row.size() != n) throw std::invalid_argument("AffineMap: dimension mismatch");
        if (determinant(a_) == 0) throw std::domain_error("AffineMap: linear part is singular");
    }

    static AffineMap translation(RationalVector b) {
        const std::size_t n = b.size();
        RationalMatrix a(n, RationalVector(n, Rational(0)));
        for (std::size_t i = 0; i < n; ++i) a[i][i] = 1;
        return AffineMap(std::move(a), std::move(b));
    }

    std::size_t dimension() const { return b_.size(); }
    const RationalMatrix& linear() const { return a_; }
    const RationalVector& offset() const { return b_; }

    /// (this o other)(x) = A (A' x + b') + b
    AffineMap compose(const AffineMap& other) const {
        const std::size_t n = dimension();
        RationalMatrix a(n, RationalVector(n, Rational(0)));
        RationalVector b = b_;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                if (a_[i][k] == 0) continue;
                b[i] += a_[i][k] * other.b_[k];
                for (std::size_t j = 0; j < n; ++j) a[i][j] += a_[i][k] * other.a_[k][j];
            }
        return AffineMap(std::move(a), std::move(b));
    }

    friend bool operator==(const AffineMap& x, const AffineMap& y) { return x.a_ == y.a_ && x.b_ == y.b_; }

private:
    RationalMatrix a_;
    RationalVector b_;
};

inline Form wedge(const Form& a, const Form& b) {
    if (a.dimension() != b.dimension()) throw std::invalid_argument("wedge: dimension mismatch");
    const std::size_t n = a.dimension();
    const int p = a.degree() + b.degree();
    if (static_cast<std::size_t>(p) > n) return Form(n, p);
    Form r(n, p);
    for (const auto& [i, f] : a.components())
        for (const auto& [j, g] : b.components()) {
            IndexTuple idx = i;
            idx.insert(idx.end(), j.begin(), j.end());
            r.add(std::move(idx), f * g);
        }
    return r;
}

/// Exterior derivative.
inline Form ext_d(const Form& a) {
    const std::size_t n = a.dimension();
    if (static_cast<std::size_t>(a.degree()) >= n) return Form(n, a.degree() + 1);
    Form r(n, a.degree() + 1);
    for (const auto& [idx, f] : a.components())
        for (std::size_t i = 0; i < n; ++i) {
            if (std::find(idx.begin(), idx.end(), static_cast<int>(i)) != idx.end()) continue;
            CoeffFn df = f.derive(i);
            if (df.is_zero()) continue;
            IndexTuple k{static_cast<int>(i)};
            k.insert(k.end(), idx.begin(), idx.end());
            r.add(std::move(k), df);
        }
    return r;
}

/// Interior product i_X a.
inline Form interior(const VectorField& x, const Form& a) {
    const std::size_t n = a.dimension();
    if (x.dimension() != n) throw std::invalid_argument("interior: dimension mismatch");
    if (a.degree() == 0) return Form(n, 0);
    Form r(n, a.degree() - 1);
    for (const auto& [idx, f] : a.components())
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const CoeffFn& xk = x[static_cast<std::size_t>(idx[k])];
            if (xk.is_zero()) continue;
            IndexTuple rest = idx;
            rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(k));
            r.add(std::move(rest), (k % 2 == 0) ? xk * f : -(xk * f));
        }
    return r;
}

/// a(X) for a 1-form a.
inline CoeffFn pair(const Form& a, const VectorField& x) {
    if (a.degree() != 1) throw std::invalid_argument("pair: expected a 1-form");
    return interior(x, a).coefficient({});
}

inline bool is_closed(const Form& a) { return ext_d(a).is_zero(); }

inline void require_closed_lee_form(const Form& omega, std::size_t n) {
    if (omega.degree() != 1) throw std::invalid_argument("Lee form must be a 1-form");
    if (omega.dimension() != n) throw std::invalid_argument("Lee form dimension mismatch");
    if (!is_closed(omega)) throw std::domain_error("Lee form is not closed");
}

/// Lichnerowicz differential d^w a = d a + w ^ a; w must be closed.
inline Form twisted_d(const Form& a, const Form& omega) {
    require_closed_lee_form(omega, a.dimension());
    return ext_d(a) + wedge(omega, a);
}

/// L_X a by Cartan's formula d i_X a + i_X d a.
inline Form lie_derivative(const VectorField& x, const Form& a) {
    if (a.degree() == 0) return interior(x, ext_d(a));
    return ext_d(interior(x, a)) + interior(x, ext_d(a));
}

/// L_X a from the coordinate rule
/// L_X (f dx_I) = X(f) dx_I + f sum_k dx_{i_1} ^ .. ^ d(X^{i_k}) ^ .. ^ dx_{i_p}.
/// Independent of the Cartan route; used to cross-check it.
inline Form lie_derivative_coordinate(const VectorField& x, const Form& a) {
    const std::size_t n = a.dimension();
    if (x.dimension() != n) throw std::invalid_argument("lie_derivative: dimension mismatch");
    Form r(n, a.degree());
    for (const auto& [idx, f] : a.components()) {
        CoeffFn xf(n);
        for (std::size_t j = 0; j < n; ++j)
            if (!x[j].is_zero()) xf += x[j] * f.derive(j);
        r.add(idx, xf);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const CoeffFn& comp = x[static_cast<std::size_t>(idx[k])];
            for (std::size_t j = 0; j < n; ++j) {
                CoeffFn dj = comp.derive(j);
                if (dj.is_zero()) continue;
                IndexTuple t = idx;
                t[k] = static_cast<int>(j);
                r.add(std::move(t), f * dj);
            }
        }
    }
    return r;
}

/// Twisted Lie derivative d^w i_X a + i_X d^w a.
///
/// The result is also computed as L_X a + w(X) a through the coordinate
/// rule and the two must agree; a mismatch throws std::logic_error.
inline Form lie_twisted(const VectorField& x, const Form& a, const Form& omega) {
    require_closed_lee_form(omega, a.dimension());
    Form cartan = a.degree() > 0 ? twisted_d(interior(x, a), omega) : Form(a.dimension(), 0);
    cartan = cartan + interior(x, twisted_d(a, omega));
    const Form algebraic = lie_derivative_coordinate(x, a) + pair(omega, x) * a;
    if (cartan != algebraic)
        throw std::logic_error("lie_twisted: Cartan and coordinate formulas disagree");
    return cartan;
}

/// phi^* a for an affine map phi.
inline Form pullback(const AffineMap& phi, const Form& a) {
    const std::size_t n = a.dimension();
    if (phi.dimension() != n) throw std::invalid_argument("pullback: dimension mismatch");
    const auto& A = phi.linear();
    Form r(n, a.degree());
    for (const auto& [idx, f] : a.components()) {
        const CoeffFn g = f.pullback_affine(A, phi.offset());
        // phi^* dx_i = sum_j A_ij dx_j; expand the product over idx.
        std::vector<std::pair<IndexTuple, Rational>> acc{{IndexTuple{}, Rational(1)}};
        for (int i : idx) {
            std::vector<std::pair<IndexTuple, Rational>> next;
            for (const auto& [t, c] : acc)
                for (std::size_t j = 0; j < n; ++j) {
                    const Rational& aij = A[static_cast<std::size_t>(i)][j];
                    if (aij == 0) continue;
                    if (std::find(t.begin(), t.end(), static_cast<int>(j)) != t.end()) continue;
                    IndexTuple u = t;
                    u.push_back(static_cast<int>(j));
                    next.emplace_back(std::move(u), c * aij);
                }
            acc = std::move(next);
        }
        for (auto& [t, c] : acc) r.add(t, g.scaled(ExpScalar(c)));
    }
    return r;
}

/// The coefficient of dx_0 ^ ... ^ dx_{n-1} in a top-degree form.
inline CoeffFn top_coefficient(const Form& a) {
    if (static_cast<std::size_t>(a.degree()) != a.dimension())
        throw std::invalid_argument("top_coefficient: not a top-degree form");
    IndexTuple idx(a.dimension());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    return a.coefficient(idx);
}

}  // namespace lcslab

#pragma once

#include "lcslab/exact_linalg.hpp"
#include "lcslab/exp_scalar.hpp"
#include "lcslab/rational.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lcslab {

/// Exact function sum c * x^a * e^{<k, x>} on R^n.
///
/// Coefficients c are ExpScalars (so translating e^{<k,x>} stays exact), the
/// powers a are non-negative integers and the slopes k are rationals. Terms
/// are sorted by (powers, slopes) with distinct keys and nonzero
/// coefficients; two CoeffFns are equal iff their term lists are.
class CoeffFn {
public:
    struct Term {
        ExpScalar coeff;
        std::vector<int> powers;
        std::vector<Rational> slopes;
    };

    CoeffFn() = default;
    explicit CoeffFn(std::size_t n) : n_(n) {}

    static CoeffFn constant(std::size_t n, const ExpScalar& c) {
        CoeffFn f(n);
        if (!c.is_zero())
            f.terms_.push_back({c, std::vector<int>(n, 0), std::vector<Rational>(n, Rational(0))});
        return f;
    }

    static CoeffFn variable(std::size_t n, std::size_t axis) {
        check_axis(n, axis);
        std::vector<int> p(n, 0);
        p[axis] = 1;
        return monomial(n, ExpScalar(1), std::move(p), std::vector<Rational>(n, Rational(0)));
    }

    /// e^{<k, x>}
    static CoeffFn exp_linear(std::vector<Rational> slopes) {
        const std::size_t n = slopes.size();
        return monomial(n, ExpScalar(1), std::vector<int>(n, 0), std::move(slopes));
    }

    static CoeffFn monomial(std::size_t n, const ExpScalar& c, std::vector<int> powers,
                            std::vector<Rational> slopes) {
        if (powers.size() != n || slopes.size() != n)
            throw std::invalid_argument("CoeffFn::monomial: key length does not match dimension");
        for (int p : powers)
            if (p < 0) throw std::invalid_argument("CoeffFn::monomial: negative power");
        CoeffFn f(n);
        if (!c.is_zero()) f.terms_.push_back({c, std::move(powers), std::move(slopes)});
        return f;
    }

    /// Builds from arbitrary (possibly repeated, unsorted) terms.
    static CoeffFn from_terms(std::size_t n, std::vector<Term> terms) {
        for (const auto& t : terms) {
            if (t.powers.size() != n || t.slopes.size() != n)
                throw std::invalid_argument("CoeffFn: term key length does not match dimension");
            for (int p : t.powers)
                if (p < 0) throw std::invalid_argument("CoeffFn: negative power");
        }
        CoeffFn f(n);
        f.terms_ = std::move(terms);
        f.canonicalize();
        return f;
    }

    std::size_t dimension() const { return n_; }
    const std::vector<Term>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    /// True for a single term c*e^{<k,x>} with c a unit; such values are
    /// invertible in the algebra.
    bool is_unit() const {
        if (terms_.size() != 1) return false;
        const auto& t = terms_[0];
        return t.coeff.is_unit() &&
               std::all_of(t.powers.begin(), t.powers.end(), [](int p) { return p == 0; });
    }

    CoeffFn inverse() const {
        if (!is_unit()) throw std::domain_error("CoeffFn::inverse: not a unit term");
        std::vector<Rational> k = terms_[0].slopes;
        for (auto& v : k) v = -v;
        return monomial(n_, terms_[0].coeff.inverse(), terms_[0].powers, std::move(k));
    }

    /// Constant functions only.
    bool is_constant() const {
        return terms_.empty() || (terms_.size() == 1 && is_flat_key(terms_[0]));
    }
    ExpScalar constant_value() const {
        if (!is_constant()) throw std::domain_error("CoeffFn is not constant");
        return terms_.empty() ? ExpScalar() : terms_[0].coeff;
    }

    /// Polynomial without exponential factors, of total degree <= deg.
    bool is_polynomial(int max_degree = -1) const {
        for (const auto& t : terms_) {
            for (const auto& k : t.slopes)
                if (k != 0) return false;
            int d = 0;
            for (int p : t.powers) d += p;
            if (max_degree >= 0 && d > max_degree) return false;
        }
        return true;
    }

    CoeffFn operator-() const {
        CoeffFn f = *this;
        for (auto& t : f.terms_) t.coeff = -t.coeff;
        return f;
    }

    friend CoeffFn operator+(const CoeffFn& a, const CoeffFn& b) {
        check_same(a, b);
        CoeffFn f(a.n_);
        f.terms_.reserve(a.terms_.size() + b.terms_.size());
        std::size_t i = 0, j = 0;
        while (i < a.terms_.size() || j < b.terms_.size()) {
            int c = 0;
            if (i == a.terms_.size()) c = 1;
            else if (j == b.terms_.size()) c = -1;
            else c = compare_key(a.terms_[i], b.terms_[j]);
            if (c < 0) {
                f.terms_.push_back(a.terms_[i++]);
            } else if (c > 0) {
                f.terms_.push_back(b.terms_[j++]);
            } else {
                ExpScalar s = a.terms_[i].coeff + b.terms_[j].coeff;
                if (!s.is_zero()) f.terms_.push_back({std::move(s), a.terms_[i].powers, a.terms_[i].slopes});
                ++i;
                ++j;
            }
        }
        return f;
    }
    friend CoeffFn operator-(const CoeffFn& a, const CoeffFn& b) { return a + (-b); }

    friend CoeffFn operator*(const CoeffFn& a, const CoeffFn& b) {
        check_same(a, b);
        CoeffFn f(a.n_);
        if (a.is_zero() || b.is_zero()) return f;
        f.terms_.reserve(a.terms_.size() * b.terms_.size());
        for (const auto& x : a.terms_)
            for (const auto& y : b.terms_) {
                Term t{x.coeff * y.coeff, x.powers, x.slopes};
                for (std::size_t i = 0; i < a.n_; ++i) {
                    t.powers[i] += y.powers[i];
                    t.slopes[i] += y.slopes[i];
                }
                f.terms_.push_back(std::move(t));
            }
        f.canonicalize();
        return f;
    }

    CoeffFn& operator+=(const CoeffFn& o) { return *this = *this + o; }
    CoeffFn& operator-=(const CoeffFn& o) { return *this = *this - o; }
    CoeffFn& operator*=(const CoeffFn& o) { return *this = *this * o; }

    CoeffFn scaled(const ExpScalar& c) const {
        if (c.is_zero()) return CoeffFn(n_);
        CoeffFn f = *this;
        for (auto& t : f.terms_) t.coeff *= c;
        return f;
    }

    CoeffFn derive(std::size_t axis) const {
        check_axis(n_, axis);
        std::vector<Term> out;
        out.reserve(2 * terms_.size());
        for (const auto& t : terms_) {
            if (t.slopes[axis] != 0) out.push_back({t.coeff.scaled(t.slopes[axis]), t.powers, t.slopes});
            if (t.powers[axis] > 0) {
                Term d{t.coeff.scaled(Rational(t.powers[axis])), t.powers, t.slopes};
                --d.powers[axis];
                out.push_back(std::move(d));
            }
        }
        return from_terms(n_, std::move(out));
    }

    /// Exact integral over the unit box [0,1]^n.
    ExpScalar integrate_box() const {
        ExpScalar total;
        for (const auto& t : terms_) {
            ExpScalar prod = t.coeff;
            for (std::size_t i = 0; i < n_ && !prod.is_zero(); ++i)
                prod = prod * integrate_unit(t.powers[i], t.slopes[i]);
            total += prod;
        }
        return total;
    }

    /// int_0^1 x^m e^{kx} dx via I_m = e^k/k - (m/k) I_{m-1}, I_0 = (e^k - 1)/k.
    static ExpScalar integrate_unit(int m, const Rational& k) {
        if (k == 0) return ExpScalar(Rational(1, m + 1));
        const Rational inv = Rational(1) / k;
        const ExpScalar ek_over_k = ExpScalar::exp_term(inv, k);
        ExpScalar acc = ek_over_k - ExpScalar(inv);
        for (int j = 1; j <= m; ++j) acc = ek_over_k - acc.scaled(Rational(j) * inv);
        return acc;
    }

    double eval(std::span<const double> x) const {
        if (x.size() != n_) throw std::invalid_argument("CoeffFn::eval: point dimension mismatch");
        double v = 0.0;
        for (const auto& t : terms_) {
            double s = 0.0;
            double mono = 1.0;
            for (std::size_t i = 0; i < n_; ++i) {
                if (t.slopes[i] != 0) s += t.slopes[i].get_d() * x[i];
                for (int p = 0; p < t.powers[i]; ++p) mono *= x[i];
            }
            v += t.coeff.to_double() * mono * std::exp(s);
        }
        return v;
    }

    /// f o (x -> A x + b). A must be invertible over Q.
    CoeffFn pullback_affine(const RationalMatrix& a, const RationalVector& b) const {
        if (a.size() != n_ || b.size() != n_)
            throw std::invalid_argument("pullback_affine: map dimension mismatch");
        for (const auto& row : a)
            if (row.size() != n_) throw std::invalid_argument("pullback_affine: map dimension mismatch");
        if (determinant(a) == 0) throw std::domain_error("pullback_affine: singular linear part");

        // Image of each coordinate: (A x + b)_i.
        std::vector<CoeffFn> image(n_, CoeffFn(n_));
        for (std::size_t i = 0; i < n_; ++i) {
            CoeffFn li = constant(n_, ExpScalar(b[i]));
            for (std::size_t j = 0; j < n_; ++j)
                if (a[i][j] != 0) li += variable(n_, j).scaled(ExpScalar(a[i][j]));
            image[i] = std::move(li);
        }

        CoeffFn result(n_);
        for (const auto& t : terms_) {
            // e^{<k, Ax+b>} = e^{<k,b>} e^{<A^T k, x>}
            Rational shift = 0;
            std::vector<Rational> kt(n_, Rational(0));
            for (std::size_t i = 0; i < n_; ++i) {
                if (t.slopes[i] == 0) continue;
                shift += t.slopes[i] * b[i];
                for (std::size_t j = 0; j < n_; ++j) kt[j] += a[i][j] * t.slopes[i];
            }
            CoeffFn piece = monomial(n_, t.coeff.shifted(shift), std::vector<int>(n_, 0), std::move(kt));
            for (std::size_t i = 0; i < n_; ++i)
                for (int p = 0; p < t.powers[i]; ++p) piece *= image[i];
            result += piece;
        }
        return result;
    }

    friend bool operator==(const CoeffFn& a, const CoeffFn& b) {
        if (a.n_ != b.n_ || a.terms_.size() != b.terms_.size()) return false;
        for (std::size_t i = 0; i < a.terms_.size(); ++i) {
            if (compare_key(a.terms_[i], b.terms_[i]) != 0) return false;
            if (!(a.terms_[i].coeff == b.terms_[i].coeff)) return false;
        }
        return true;
    }
    friend bool operator!=(const CoeffFn& a, const CoeffFn& b) { return !(a == b); }

    /// Human-readable rendering with the given coordinate names.
    std::string str(const std::vector<std::string>& names = {}) const {
        if (terms_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& t : terms_) {
            if (!first) os << " + ";
            first = false;
            std::string c = t.coeff.str();
            const bool flat = is_flat_key(t);
            if (c.find_first_of("+ ") != std::string::npos && !flat) c = "(" + c + ")";
            if (flat) {
                os << c;
                continue;
            }
            if (c == "-1") os << "-";
            else if (c != "1") os << c << "*";
            bool sep = false;
            for (std::size_t i = 0; i < n_; ++i) {
                if (t.powers[i] == 0) continue;
                if (sep) os << "*";
                os << axis_name(names, i);
                if (t.powers[i] > 1) os << "^" << t.powers[i];
                sep = true;
            }
            bool has_exp = false;
            for (const auto& k : t.slopes) has_exp = has_exp || k != 0;
            if (has_exp) {
                if (sep) os << "*";
                os << "e^(";
                bool s2 = false;
                for (std::size_t i = 0; i < n_; ++i) {
                    if (t.slopes[i] == 0) continue;
                    if (s2) os << (t.slopes[i] < 0 ? "-" : "+");
                    else if (t.slopes[i] < 0) os << "-";
                    const Rational mag = abs(t.slopes[i]);
                    if (mag != 1) os << to_string(mag) << "*";
                    os << axis_name(names, i);
                    s2 = true;
                }
                os << ")";
            }
        }
        return os.str();
    }

    /// Three-way comparison of term keys (powers, then slopes).
    static int compare_key(const Term& a, const Term& b) {
        if (a.powers != b.powers) return a.powers < b.powers ? -1 : 1;
        return compare(a.slopes, b.slopes);
    }

private:
    static void check_axis(std::size_t n, std::size_t axis) {
        if (axis >= n) throw std::out_of_range("CoeffFn: axis out of range");
    }
    static void check_same(const CoeffFn& a, const CoeffFn& b) {
        if (a.n_ != b.n_) throw std::invalid_argument("CoeffFn: dimension mismatch");
    }
    static bool is_flat_key(const Term& t) {
        return std::all_of(t.powers.begin(), t.powers.end(), [](int p) { return p == 0; }) &&
               std::all_of(t.slopes.begin(), t.slopes.end(), [](const Rational& k) { return k == 0; });
    }
    static std::string axis_name(const std::vector<std::string>& names, std::size_t i) {
        return i < names.size() ? names[i] : "x" + std::to_string(i);
    }

    void canonicalize() {
        std::sort(terms_.begin(), terms_.end(),
                  [](const Term& a, const Term& b) { return compare_key(a, b) < 0; });
        std::vector<Term> merged;
        merged.reserve(terms_.size());
        for (auto& t : terms_) {
            if (!merged.empty() && compare_key(merged.back(), t) == 0) merged.back().coeff += t.coeff;
            else merged.push_back(std::move(t));
        }
        terms_.clear();
        for (auto& t : merged)
            if (!t.coeff.is_zero()) terms_.push_back(std::move(t));
    }

    std::size_t n_ = 0;
    std::vector<Term> terms_;
};

/// Flattened double-precision copy of a CoeffFn for inner loops.
class NumericFn {
public:
    NumericFn() = default;
    explicit NumericFn(const CoeffFn& f) : n_(f.dimension()) {
        for (const auto& t : f.terms()) {
            Term nt;
            nt.coeff = t.coeff.to_double();
            nt.powers = t.powers;
            for (const auto& k : t.slopes) nt.slopes.push_back(k.get_d());
            terms_.push_back(std::move(nt));
        }
    }

    double operator()(std::span<const double> x) const {
        double v = 0.0;
        for (const auto& t : terms_) {
            double mono = t.coeff;
            double s = 0.0;
            for (std::size_t i = 0; i < n_; ++i) {
                for (int p = 0; p < t.powers[i]; ++p) mono *= x[i];
                s += t.slopes[i] * x[i];
            }
            v += mono * (s != 0.0 ? std::exp(s) : 1.0);
        }
        return v;
    }

    std::size_t dimension() const { return n_; }

private:
    struct Term {
        double coeff = 0.0;
        std::vector<int> powers;
        std::vector<double> slopes;
    };
    std::size_t n_ = 0;
    std::vector<Term> terms_;
};

}  // namespace lcslab

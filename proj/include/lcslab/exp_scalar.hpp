#pragma once

#include "lcslab/rational.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

namespace lcslab {

/// Exact number of the form sum_j q_j * e^{r_j} with rational q_j, r_j.
///
/// Terms are kept sorted by strictly increasing exponent with no zero
/// coefficients, so equality is plain term-list equality. Because e^r for
/// distinct rationals r are linearly independent over Q, this is also
/// numerical equality.
class ExpScalar {
public:
    struct Term {
        Rational q;
        Rational r;
        friend bool operator==(const Term& a, const Term& b) { return a.q == b.q && a.r == b.r; }
    };

    ExpScalar() = default;
    ExpScalar(int value) : ExpScalar(Rational(value)) {}  // NOLINT(google-explicit-constructor)
    ExpScalar(const Rational& value) {                     // NOLINT(google-explicit-constructor)
        if (value != 0) terms_.push_back({value, Rational(0)});
    }

    /// q * e^r
    static ExpScalar exp_term(const Rational& q, const Rational& r) {
        ExpScalar s;
        if (q != 0) s.terms_.push_back({q, r});
        return s;
    }

    static ExpScalar from_terms(std::vector<Term> terms) {
        std::map<Rational, Rational> acc;
        for (auto& t : terms) acc[t.r] += t.q;
        ExpScalar s;
        for (auto& [r, q] : acc)
            if (q != 0) s.terms_.push_back({q, r});
        return s;
    }

    const std::vector<Term>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_rational() const { return terms_.empty() || (terms_.size() == 1 && terms_[0].r == 0); }
    bool is_unit() const { return terms_.size() == 1; }

    /// The rational value when is_rational().
    Rational rational_value() const {
        if (!is_rational()) throw std::domain_error("ExpScalar is not rational");
        return terms_.empty() ? Rational(0) : terms_[0].q;
    }

    /// Inverse of a single-term value q e^r.
    ExpScalar inverse() const {
        if (!is_unit()) throw std::domain_error("ExpScalar is not a unit");
        return exp_term(Rational(1) / terms_[0].q, -terms_[0].r);
    }

    double to_double() const {
        double v = 0.0;
        for (const auto& t : terms_) v += t.q.get_d() * std::exp(t.r.get_d());
        return v;
    }

    ExpScalar operator-() const {
        ExpScalar s = *this;
        for (auto& t : s.terms_) t.q = -t.q;
        return s;
    }

    friend ExpScalar operator+(const ExpScalar& a, const ExpScalar& b) {
        ExpScalar s;
        s.terms_.reserve(a.terms_.size() + b.terms_.size());
        std::size_t i = 0, j = 0;
        while (i < a.terms_.size() || j < b.terms_.size()) {
            if (j == b.terms_.size() || (i < a.terms_.size() && a.terms_[i].r < b.terms_[j].r)) {
                s.terms_.push_back(a.terms_[i++]);
            } else if (i == a.terms_.size() || b.terms_[j].r < a.terms_[i].r) {
                s.terms_.push_back(b.terms_[j++]);
            } else {
                Rational q = a.terms_[i].q + b.terms_[j].q;
                if (q != 0) s.terms_.push_back({q, a.terms_[i].r});
                ++i;
                ++j;
            }
        }
        return s;
    }
    friend ExpScalar operator-(const ExpScalar& a, const ExpScalar& b) { return a + (-b); }

    friend ExpScalar operator*(const ExpScalar& a, const ExpScalar& b) {
        if (a.is_zero() || b.is_zero()) return {};
        if (b.terms_.size() == 1 && b.terms_[0].r == 0) return a.scaled(b.terms_[0].q);
        if (a.terms_.size() == 1 && a.terms_[0].r == 0) return b.scaled(a.terms_[0].q);
        std::vector<Term> out;
        out.reserve(a.terms_.size() * b.terms_.size());
        for (const auto& x : a.terms_)
            for (const auto& y : b.terms_) out.push_back({x.q * y.q, x.r + y.r});
        return from_terms(std::move(out));
    }

    ExpScalar& operator+=(const ExpScalar& o) { return *this = *this + o; }
    ExpScalar& operator-=(const ExpScalar& o) { return *this = *this - o; }
    ExpScalar& operator*=(const ExpScalar& o) { return *this = *this * o; }

    ExpScalar scaled(const Rational& c) const {
        if (c == 0) return {};
        ExpScalar s = *this;
        for (auto& t : s.terms_) t.q *= c;
        return s;
    }

    /// Multiplies by e^shift.
    ExpScalar shifted(const Rational& shift) const {
        ExpScalar s = *this;
        for (auto& t : s.terms_) t.r += shift;
        return s;
    }

    friend bool operator==(const ExpScalar& a, const ExpScalar& b) { return a.terms_ == b.terms_; }
    friend bool operator!=(const ExpScalar& a, const ExpScalar& b) { return !(a == b); }

    /// Total order on canonical forms; only used for container keys.
    friend bool operator<(const ExpScalar& a, const ExpScalar& b) {
        const std::size_t n = std::min(a.terms_.size(), b.terms_.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (a.terms_[i].r != b.terms_[i].r) return a.terms_[i].r < b.terms_[i].r;
            if (a.terms_[i].q != b.terms_[i].q) return a.terms_[i].q < b.terms_[i].q;
        }
        return a.terms_.size() < b.terms_.size();
    }

    std::string str() const {
        if (terms_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& t : terms_) {
            if (!first) os << (t.q < 0 ? " - " : " + ");
            else if (t.q < 0) os << "-";
            first = false;
            const Rational mag = abs(t.q);
            if (t.r == 0) {
                os << to_string(mag);
            } else {
                if (mag != 1) os << to_string(mag) << "*";
                os << "e^(" << to_string(t.r) << ")";
            }
        }
        return os.str();
    }

private:
    std::vector<Term> terms_;
};

inline std::ostream& operator<<(std::ostream& os, const ExpScalar& s) { return os << s.str(); }

}  // namespace lcslab

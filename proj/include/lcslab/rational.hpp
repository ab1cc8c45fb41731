#pragma once

// Exact rationals over GMP. mpq_class already keeps (num, den) reduced with
// den > 0 once canonicalize() has run, which every helper here guarantees.

#include <gmpxx.h>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lcslab {

using Integer = mpz_class;
using Rational = mpq_class;

/// Parses "p", "p/q" or a finite decimal such as "-0.125" exactly.
inline Rational parse_rational(std::string_view text) {
    std::string s(text);
    auto trim = [](std::string& v) {
        const auto b = v.find_first_not_of(" \t");
        const auto e = v.find_last_not_of(" \t");
        v = (b == std::string::npos) ? std::string() : v.substr(b, e - b + 1);
    };
    trim(s);
    if (s.empty()) throw std::invalid_argument("empty rational literal");

    std::string digits = s;
    if (digits[0] == '+') digits.erase(0, 1);

    const auto dot = digits.find('.');
    if (dot != std::string::npos) {
        if (digits.find('/') != std::string::npos)
            throw std::invalid_argument("malformed rational literal: " + s);
        std::string whole = digits.substr(0, dot);
        std::string frac = digits.substr(dot + 1);
        bool neg = false;
        if (!whole.empty() && whole[0] == '-') {
            neg = true;
            whole.erase(0, 1);
        }
        if (whole.empty()) whole = "0";
        if (frac.empty()) frac = "0";
        for (char c : whole + frac)
            if (c < '0' || c > '9') throw std::invalid_argument("malformed rational literal: " + s);
        Integer num(whole + frac, 10);
        Integer den;
        mpz_ui_pow_ui(den.get_mpz_t(), 10, frac.size());
        Rational r(num, den);
        r.canonicalize();
        return neg ? Rational(-r) : r;
    }

    const auto slash = digits.find('/');
    auto valid_int = [](const std::string& v) {
        if (v.empty()) return false;
        std::size_t i = (v[0] == '-') ? 1 : 0;
        if (i == v.size()) return false;
        for (; i < v.size(); ++i)
            if (v[i] < '0' || v[i] > '9') return false;
        return true;
    };
    if (slash == std::string::npos) {
        if (!valid_int(digits)) throw std::invalid_argument("malformed rational literal: " + s);
        return Rational(Integer(digits, 10));
    }
    const std::string n = digits.substr(0, slash);
    const std::string d = digits.substr(slash + 1);
    if (!valid_int(n) || !valid_int(d) || d[0] == '-')
        throw std::invalid_argument("malformed rational literal: " + s);
    Integer den(d, 10);
    if (den == 0) throw std::invalid_argument("zero denominator in rational literal: " + s);
    Rational r(Integer(n, 10), den);
    r.canonicalize();
    return r;
}

inline std::string to_string(const Rational& r) { return r.get_str(10); }

inline int sign(const Rational& r) { return sgn(r); }

inline bool is_integer(const Rational& r) { return r.get_den() == 1; }

/// Lexicographic three-way comparison of rational vectors of equal length.
inline int compare(const std::vector<Rational>& a, const std::vector<Rational>& b) {
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        const int c = cmp(a[i], b[i]);
        if (c != 0) return c < 0 ? -1 : 1;
    }
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    return 0;
}

inline Rational factorial(unsigned n) {
    Integer f;
    mpz_fac_ui(f.get_mpz_t(), n);
    return Rational(f);
}

inline Rational binomial(unsigned n, unsigned k) {
    Integer b;
    mpz_bin_uiui(b.get_mpz_t(), n, k);
    return Rational(b);
}

}  // namespace lcslab

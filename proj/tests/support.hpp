#pragma once

// Random generators and numeric oracles shared by the test suites.

#include "lcslab/coeff_fn.hpp"
#include "lcslab/exact_linalg.hpp"
#include "lcslab/forms.hpp"
#include "lcslab/lcs.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace testkit {

using namespace lcslab;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : g_(seed) {}

    int integer(int lo, int hi) { return lo + static_cast<int>(g_() % static_cast<std::uint64_t>(hi - lo + 1)); }
    bool coin() { return (g_() & 1U) != 0; }
    double unit() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }

    Rational rational(int num_bound = 5, int den_bound = 3) {
        Rational q(integer(-num_bound, num_bound), integer(1, den_bound));
        q.canonicalize();
        return q;
    }

    Rational nonzero_rational(int num_bound = 5, int den_bound = 3) {
        Rational q = 0;
        while (q == 0) q = rational(num_bound, den_bound);
        return q;
    }

    ExpScalar exp_scalar(int max_terms = 2) {
        std::vector<ExpScalar::Term> t;
        const int count = integer(0, max_terms);
        for (int i = 0; i < count; ++i) t.push_back({rational(), Rational(integer(-2, 2))});
        return ExpScalar::from_terms(std::move(t));
    }

    /// Sum of up to `terms` monomials q x^a e^{<k,x>} with |a| <= degree and
    /// integer slopes in [-slope, slope].
    CoeffFn coeff_fn(std::size_t n, int terms = 3, int degree = 2, int slope = 1) {
        std::vector<CoeffFn::Term> out;
        const int count = integer(0, terms);
        for (int i = 0; i < count; ++i) {
            std::vector<int> a(n, 0);
            int left = integer(0, degree);
            while (left-- > 0) ++a[static_cast<std::size_t>(integer(0, static_cast<int>(n) - 1))];
            std::vector<Rational> k(n);
            for (auto& v : k) v = coin() ? Rational(0) : Rational(integer(-slope, slope));
            out.push_back({ExpScalar(nonzero_rational()), std::move(a), std::move(k)});
        }
        return CoeffFn::from_terms(n, std::move(out));
    }

    Form form(std::size_t n, int degree, int terms = 3, int fn_terms = 2) {
        Form f(n, degree);
        const int count = integer(0, terms);
        for (int i = 0; i < count; ++i) {
            IndexTuple idx;
            for (int d = 0; d < degree; ++d) idx.push_back(integer(0, static_cast<int>(n) - 1));
            f.add(std::move(idx), coeff_fn(n, fn_terms));
        }
        return f;
    }

    VectorField field(std::size_t n, int fn_terms = 2) {
        std::vector<CoeffFn> c;
        for (std::size_t i = 0; i < n; ++i) c.push_back(coeff_fn(n, fn_terms));
        return VectorField(std::move(c));
    }

    /// Closed 1-form: constant coefficients plus d of a random function.
    Form closed_one_form(std::size_t n) {
        Form w(n, 1);
        for (std::size_t i = 0; i < n; ++i)
            if (coin()) w.add({static_cast<int>(i)}, CoeffFn::constant(n, ExpScalar(rational())));
        if (coin()) w = w + ext_d(Form::function(coeff_fn(n, 2)));
        return w;
    }

    AffineMap affine(std::size_t n) {
        for (;;) {
            RationalMatrix a(n, RationalVector(n));
            for (auto& row : a)
                for (auto& v : row) v = Rational(integer(-2, 2));
            if (determinant(a) == 0) continue;
            RationalVector b(n);
            for (auto& v : b) v = rational(3, 2);
            return AffineMap(std::move(a), std::move(b));
        }
    }

    std::vector<double> point(std::size_t n) {
        std::vector<double> p(n);
        for (auto& v : p) v = unit();
        return p;
    }

private:
    std::mt19937_64 g_;
};

/// Adaptive Simpson quadrature on [a, b].
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 50) {
    auto simpson = [&](double l, double r, double fl, double fm, double fr) { return (r - l) / 6.0 * (fl + 4.0 * fm + fr); };
    std::function<double(double, double, double, double, double, double, double, int)> rec =
        [&](double l, double r, double fl, double fm, double fr, double whole, double eps, int d) {
            const double m = 0.5 * (l + r);
            const double lm = 0.5 * (l + m), rm = 0.5 * (m + r);
            const double flm = f(lm), frm = f(rm);
            const double left = simpson(l, m, fl, flm, fm), right = simpson(m, r, fm, frm, fr);
            if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
                return left + right + (left + right - whole) / 15.0;
            return rec(l, m, fl, flm, fm, left, eps / 2.0, d - 1) + rec(m, r, fm, frm, fr, right, eps / 2.0, d - 1);
        };
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return rec(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, depth);
}

/// Box integral of a CoeffFn computed term by term as products of 1-D
/// adaptive quadratures; independent of the closed-form recurrence.
inline double numeric_box_integral(const CoeffFn& f) {
    double total = 0.0;
    for (const auto& t : f.terms()) {
        double prod = t.coeff.to_double();
        for (std::size_t i = 0; i < f.dimension(); ++i) {
            const int m = t.powers[i];
            const double k = t.slopes[i].get_d();
            prod *= adaptive_simpson([&](double x) { return std::pow(x, m) * std::exp(k * x); }, 0.0, 1.0, 1e-14);
        }
        total += prod;
    }
    return total;
}

/// Rank by plain rational Gaussian elimination, for cross-checking Bareiss.
inline std::size_t naive_rank(RationalMatrix a) {
    std::size_t r = 0;
    const std::size_t cols = a.empty() ? 0 : a[0].size();
    for (std::size_t c = 0; c < cols && r < a.size(); ++c) {
        std::size_t piv = r;
        while (piv < a.size() && a[piv][c] == 0) ++piv;
        if (piv == a.size()) continue;
        std::swap(a[piv], a[r]);
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (i == r || a[i][c] == 0) continue;
            const Rational f = a[i][c] / a[r][c];
            for (std::size_t j = c; j < cols; ++j) a[i][j] -= f * a[r][j];
        }
        ++r;
    }
    return r;
}

inline Form kt_omega_big() {
    const std::size_t n = 4;
    return Form::monomial(n, {0, 1}, CoeffFn::exp_linear({0, 0, 1, 0})) +
           Form::monomial(n, {3, 2}, CoeffFn::constant(n, ExpScalar(1)));
}

inline Form kt_lee() { return Form::dx(4, 2).scaled(ExpScalar(-1)); }

inline LcsStructure kt() { return LcsStructure::make(kt_omega_big(), kt_lee()); }

/// Omega = e^{-z}(dx^dy + dw^dz), omega = dz, h = z.
inline LcsStructure box_model() {
    const std::size_t n = 4;
    const CoeffFn emz = CoeffFn::exp_linear({0, 0, -1, 0});
    const Form o = emz * (Form::monomial(n, {0, 1}, CoeffFn::constant(n, ExpScalar(1))) +
                          Form::monomial(n, {3, 2}, CoeffFn::constant(n, ExpScalar(1))));
    return LcsStructure::make(o, Form::dx(n, 2), CoeffFn::variable(n, 2));
}

inline std::vector<AffineMap> kt_generators() {
    const RationalMatrix id{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};
    return {AffineMap(id, {1, 0, 0, 0}), AffineMap(id, {0, 1, 0, 0}), AffineMap(id, {0, 0, 1, 0}),
            AffineMap({{1, 1, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}, {0, 0, 0, 1})};
}

inline std::vector<Form> kt_coframe() {
    const std::size_t n = 4;
    return {Form::dx(n, 0) - CoeffFn::variable(n, 3) * Form::dx(n, 1), Form::dx(n, 1), Form::dx(n, 2), Form::dx(n, 3)};
}

inline CoeffFn one(std::size_t n) { return CoeffFn::constant(n, ExpScalar(1)); }

}  // namespace testkit

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. No test framework, so it can run standalone.

#include "support.hpp"

#include "lcslab/ce_cohomology.hpp"
#include "lcslab/dynamics.hpp"
#include "lcslab/lattice_hodge.hpp"
#include "lcslab/lcs.hpp"
#include "lcslab/manifest.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace lcslab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Collects failed sub-checks of one criterion.
class Checks {
public:
    void require(bool ok, const std::string& what) {
        if (!ok) failures_.push_back(what);
    }
    bool ok() const { return failures_.empty(); }
    std::string summary() const {
        std::string s;
        for (const auto& f : failures_) s += (s.empty() ? "" : "; ") + f;
        return s;
    }
    std::ostringstream info;

private:
    std::vector<std::string> failures_;
};

const std::size_t n4 = 4;
Form dx(std::size_t i) { return Form::dx(n4, i); }
CoeffFn ez() { return CoeffFn::exp_linear({0, 0, 1, 0}); }

Manifest fixture(const std::string& name) { return parse_manifest(std::string(LCSLAB_FIXTURE_DIR) + "/" + name); }

LcsStructure structure_of(const Manifest& m) { return LcsStructure::make(m.big_omega, m.omega, m.potential); }

// 1. Structure equation on the corrected and literal forms.
void criterion_1(Checks& c) {
    auto t0 = Clock::now();
    const Manifest kt = fixture("kodaira_thurston.json");
    const ValidationReport good = validate(kt.big_omega, kt.omega);
    c.require(good.closedness_residual.is_zero(), "d omega != 0 on the corrected structure");
    c.require(good.structure_residual.is_zero(), "structure residual nonzero on the corrected structure");
    c.require(good.nondegenerate, "corrected structure reported degenerate");
    const double t_good = seconds_since(t0);

    t0 = Clock::now();
    const Manifest lit = fixture("kodaira_thurston_paper_literal.json");
    const ValidationReport bad = validate(lit.big_omega, lit.omega);
    // dz^dx^dy = dx^dy^dz
    const Form expected = (ez() * wedge(wedge(dx(2), dx(0)), dx(1))).scaled(ExpScalar(2));
    c.require(!bad.pass(), "literal structure passed validation");
    c.require(bad.structure_residual == expected, "literal residual is " + bad.structure_residual.str());
    const double t_bad = seconds_since(t0);

    c.require(t_good < 1.0 && t_bad < 1.0, "validation slower than 1 s");
    c.info << "residual(literal) = " << bad.structure_residual.str() << ", times " << t_good << " s / " << t_bad << " s";
}

// 2. Volume form.
void criterion_2(Checks& c) {
    const LcsStructure kt = structure_of(fixture("kodaira_thurston.json"));
    const Form expected = ez() * wedge(wedge(dx(0), dx(1)), wedge(dx(3), dx(2)));
    c.require(volume_form(kt) == expected, "volume is " + volume_form(kt).str());
    c.info << "Omega^2/2 = " << volume_form(kt).str();
}

// 3. Contraction with the x-translation.
void criterion_3(Checks& c) {
    const LcsStructure kt = structure_of(fixture("kodaira_thurston.json"));
    const VectorField px = VectorField::basis(n4, 0);
    const Form a = interior(px, kt.form());
    c.require(a == ez() * dx(1), "i_X Omega = " + a.str());
    c.require(twisted_d(a, kt.lee()).is_zero(), "d^w(e^z dy) != 0");
    c.require(is_strict_lcs(kt, px).strict, "d/dx is not strict");
    c.info << "i_{d/dx} Omega = " << a.str();
}

// 4. Hamiltonian field and Calabi invariant of H = 1.
void criterion_4(Checks& c) {
    const LcsStructure kt = structure_of(fixture("kodaira_thurston.json"));
    const CoeffFn one = testkit::one(n4);
    const SharpResult x = hamiltonian_field(kt, one);
    c.require(x.symbolic && x.field, "Hamiltonian field is not symbolic");
    if (x.field) c.require(*x.field == VectorField::basis(n4, 3).scaled(ExpScalar(-1)), "X_1 = " + x.field->str());
    const ExpScalar cal = calabi(kt, HamiltonianPath::autonomous(one));
    const ExpScalar expected = ExpScalar::from_terms({{Rational(-1), Rational(0)}, {Rational(1), Rational(1)}});
    c.require(cal == expected, "Cal = " + cal.str());
    c.require(std::abs(cal.to_double() - 1.718281828459045) <= 1e-12, "Cal float off");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15f", cal.to_double());
    c.info << "Cal(1) = " << cal.str() << " = " << buf;
}

// 5. Flux of the x-translation and the bounded exactness search.
void criterion_5(Checks& c) {
    const Manifest m = fixture("kodaira_thurston.json");
    const LcsStructure kt = structure_of(m);
    const FluxResult f = flux(kt, Isotopy::autonomous(VectorField::basis(n4, 0)), FluxOptions{{}, {}, {}, {}, {}});
    c.require(f.form == ez() * dx(1), "flux = " + f.form.str());

    const SearchBounds bounds{3, {Rational(-1), Rational(0), Rational(1)}};
    const auto t0 = Clock::now();
    const PrimitiveSearchResult r = primitive_search(kt, f.form, bounds, m.generators);
    const double t = seconds_since(t0);
    c.require(!r.primitive, "search found " + (r.primitive ? r.primitive->str() : std::string()));
    c.require(t < 5.0, "search slower than 5 s");

    // The same search without invariance, reported for comparison.
    const PrimitiveSearchResult free = primitive_search(kt, f.form, bounds);
    c.info << "flux = " << f.form.str() << "; invariant search over " << r.ansatz_size << " terms: "
           << (r.primitive ? "found" : "none found") << " in " << t << " s; without invariance: "
           << (free.primitive ? free.primitive->str() : std::string("none found"));
}

// 6. Invariant cohomology of the Kodaira-Thurston algebra.
void criterion_6(Checks& c) {
    const auto t0 = Clock::now();
    const Manifest m = fixture("kodaira_thurston.json");
    if (!m.lie_algebra) {
        c.require(false, "fixture has no Lie algebra");
        return;
    }
    const LieAlgebraSpec& g = *m.lie_algebra;
    const auto b0 = betti(CeComplex::build(g, RationalVector(4, Rational(0))));
    c.require(b0 == std::vector<std::size_t>{1, 3, 4, 3, 1}, "untwisted Betti numbers wrong");
    for (std::size_t p = 0; p <= 4; ++p) c.require(b0[p] == b0[4 - p], "Poincare symmetry fails");
    c.require(euler_characteristic(b0) == 0, "untwisted Euler characteristic nonzero");

    std::size_t b1_twisted = 0;
    for (int s : {1, -1}) {
        RationalVector w(4, Rational(0));
        w[2] = s;
        const auto b = betti(CeComplex::build(g, w));
        c.require(b[0] == 0, "twisted b0 nonzero");
        c.require(euler_characteristic(b) == 0, "twisted Euler characteristic nonzero");
        if (s == -1) b1_twisted = b[1];
        c.info << "w = " << (s > 0 ? "+" : "-") << "e3: (" << b[0] << "," << b[1] << "," << b[2] << "," << b[3] << ","
               << b[4] << "); ";
    }
    const double t = seconds_since(t0);
    c.require(t < 1.0, "slower than 1 s");
    c.info << "untwisted (1,3,4,3,1); b1_w computed " << b1_twisted << " vs published 2; " << t << " s";
}

double orthogonality(const TwistedOperators& ops, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                     double scale) {
    return std::abs(ops.inner(a, b)) / scale;
}

// 7. Lattice Hodge theory.
void criterion_7(Checks& c) {
    const auto t0 = Clock::now();
    const std::size_t t2 = harmonic_dim(TwistedOperators(Grid(2, 8), {0.0, 0.0}), 1);
    const std::size_t t4 = harmonic_dim(TwistedOperators(Grid(4, 4), {0.0, 0.0, 0.0, 0.0}), 2);
    const TwistedOperators tw(Grid(2, 4), {0.0, 1.0});
    const std::size_t tw0 = harmonic_dim(tw, 0), tw1 = harmonic_dim(tw, 1);
    c.require(t2 == 2, "T^2 N=8 harmonic 1-forms: " + std::to_string(t2));
    c.require(t4 == 6, "T^4 N=4 harmonic 2-forms: " + std::to_string(t4));
    c.require(tw0 == 0 && tw1 == 0, "twisted T^2 harmonic dims nonzero");

    std::mt19937_64 rng(2024);
    std::normal_distribution<double> gauss;
    const std::vector<TwistedOperators> cases{TwistedOperators(Grid(2, 8), {0.0, 0.0}),
                                              TwistedOperators(Grid(2, 8), {0.5, -1.0}),
                                              TwistedOperators(Grid(3, 4), {0.0, 0.0, 0.0}),
                                              TwistedOperators(Grid(3, 4), {1.0, 0.0, 0.25})};
    double worst_recon = 0.0, worst_orth = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const TwistedOperators& ops = cases[static_cast<std::size_t>(trial) % cases.size()];
        const std::size_t p = static_cast<std::size_t>(trial / 4) % (ops.grid().dimension() + 1);
        Cochain a{p, Eigen::VectorXd(static_cast<Eigen::Index>(ops.grid().cell_count(p)))};
        for (auto& v : a.values) v = gauss(rng);
        const HodgeSplit s = hodge_split(ops, a);
        const double scale = ops.inner(a.values, a.values);
        const Eigen::VectorXd sum = s.exact_part + s.coexact_part + s.harmonic.values;
        worst_recon = std::max(worst_recon, ops.norm(sum - a.values) / ops.norm(a.values));
        // The harmonic part is recomputed as the remainder, so also check it
        // is annihilated by the Laplacian.
        const Eigen::VectorXd lh = ops.laplacian(p) * s.harmonic.values;
        worst_orth = std::max({worst_orth, orthogonality(ops, s.exact_part, s.coexact_part, scale),
                               orthogonality(ops, s.exact_part, s.harmonic.values, scale),
                               orthogonality(ops, s.coexact_part, s.harmonic.values, scale),
                               ops.norm(lh) / (ops.norm(a.values) * gershgorin_bound(ops.laplacian(p)))});
        c.require(s.converged, "CG did not converge");
    }
    c.require(worst_recon < 1e-8, "reconstruction residual too large");
    c.require(worst_orth < 1e-8, "orthogonality residual too large");
    const double t = seconds_since(t0);
    c.require(t < 30.0, "slower than 30 s");
    c.info << "dims " << t2 << ", " << t4 << ", (" << tw0 << "," << tw1 << "); split residuals recon " << worst_recon
           << " orth " << worst_orth << "; " << t << " s";
}

// 8. Randomised identities, 150 cases each.
void criterion_8(Checks& c) {
    constexpr int kCases = 150;
    auto sign = [](int p) { return ExpScalar(p % 2 == 0 ? 1 : -1); };
    std::vector<std::pair<std::string, int>> failures;
    auto run = [&](const std::string& name, std::uint64_t seed, const std::function<bool(testkit::Rng&)>& body) {
        testkit::Rng rng(seed);
        int bad = 0;
        for (int i = 0; i < kCases; ++i)
            if (!body(rng)) ++bad;
        c.require(bad == 0, name + ": " + std::to_string(bad) + " of " + std::to_string(kCases) + " failed");
    };

    run("d^w d^w = 0", 201, [](testkit::Rng& rng) {
        const std::size_t n = static_cast<std::size_t>(rng.integer(2, 4));
        const Form w = rng.closed_one_form(n);
        const Form a = rng.form(n, rng.integer(0, static_cast<int>(n) - 1));
        return twisted_d(twisted_d(a, w), w).is_zero();
    });
    run("graded Leibniz", 203, [&](testkit::Rng& rng) {
        const int p = rng.integer(0, 2), q = rng.integer(0, 2);
        const Form a = rng.form(n4, p, 2), b = rng.form(n4, q, 2);
        const Form w = rng.closed_one_form(n4);
        return ext_d(wedge(a, b)) == wedge(ext_d(a), b) + wedge(a, ext_d(b)).scaled(sign(p)) &&
               twisted_d(wedge(a, b), w) == wedge(twisted_d(a, w), b) + wedge(a, ext_d(b)).scaled(sign(p));
    });
    run("twisted pullback naturality", 207, [](testkit::Rng& rng) {
        const std::size_t n = static_cast<std::size_t>(rng.integer(2, 4));
        const AffineMap g = rng.affine(n);
        const Form w = rng.closed_one_form(n);
        const Form a = rng.form(n, rng.integer(0, static_cast<int>(n) - 1), 2);
        return pullback(g, twisted_d(a, w)) == twisted_d(pullback(g, a), pullback(g, w));
    });
    run("Cartan = L_X + w(X)", 209, [](testkit::Rng& rng) {
        const std::size_t n = static_cast<std::size_t>(rng.integer(2, 4));
        const Form w = rng.closed_one_form(n);
        const VectorField x = rng.field(n, 2);
        const Form a = rng.form(n, rng.integer(0, static_cast<int>(n)), 2);
        const Form algebraic = lie_derivative_coordinate(x, a) + pair(w, x) * a;
        const Form cartan = a.degree() == 0 ? interior(x, twisted_d(a, w))
                                            : twisted_d(interior(x, a), w) + interior(x, twisted_d(a, w));
        return cartan == algebraic && lie_twisted(x, a, w) == algebraic;
    });
    const LcsStructure kt = testkit::kt();
    const LcsStructure box = testkit::box_model();
    int parity = 0;
    run("sharp round trip", 213, [&](testkit::Rng& rng) {
        const LcsStructure& l = (parity++ % 2) ? kt : box;
        const Form alpha = rng.form(4, 1, 3, 2);
        const SharpResult s = sharp(l, alpha);
        if (!s.field || interior(*s.field, l.form()) != alpha) return false;
        const VectorField x = rng.field(4, 2);
        const SharpResult back = sharp(l, interior(x, l.form()));
        return back.field && *back.field == x;
    });
    run("d(e^h a) = e^h d^w a", 227, [](testkit::Rng& rng) {
        const std::size_t n = static_cast<std::size_t>(rng.integer(2, 4));
        CoeffFn h = CoeffFn::constant(n, ExpScalar(rng.rational()));
        for (std::size_t i = 0; i < n; ++i)
            h += CoeffFn::variable(n, i).scaled(ExpScalar(Rational(rng.integer(-2, 2))));
        const Form w = ext_d(Form::function(h));
        const CoeffFn eh = exp_of_linear(h);
        const Form a = rng.form(n, rng.integer(0, static_cast<int>(n) - 1), 2);
        return ext_d(eh * a) == eh * twisted_d(a, w);
    });
    c.info << "6 suites x " << kCases << " cases";
}

// 9. RK4 convergence and exactness on constant fields.
void criterion_9(Checks& c) {
    const std::size_t n = 2;
    const VectorField euler({CoeffFn::variable(n, 0), CoeffFn(n)});
    const Isotopy iso = Isotopy::autonomous(euler);
    const double x0 = 0.75;
    const double exact = x0 * std::exp(1.0);
    // Least-squares slope of log(error) against log(h).
    std::vector<double> lh, le;
    for (std::size_t steps : {8, 16, 32, 64}) {
        const double e = std::abs(flow(iso, {{x0, 0.0}}, steps).endpoints[0][0] - exact);
        lh.push_back(std::log(1.0 / static_cast<double>(steps)));
        le.push_back(std::log(e));
    }
    const double mh = std::accumulate(lh.begin(), lh.end(), 0.0) / static_cast<double>(lh.size());
    const double me = std::accumulate(le.begin(), le.end(), 0.0) / static_cast<double>(le.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < lh.size(); ++i) {
        num += (lh[i] - mh) * (le[i] - me);
        den += (lh[i] - mh) * (lh[i] - mh);
    }
    const double order = num / den;
    c.require(order >= 3.9, "measured order " + std::to_string(order));

    // Dyadic data keep every RK4 stage exact in binary floating point.
    const VectorField constant({CoeffFn::constant(n, ExpScalar(Rational(1, 2))),
                                CoeffFn::constant(n, ExpScalar(Rational(-3, 4)))});
    const FlowResult r = flow(Isotopy::autonomous(constant), {{0.25, 0.5}, {0.0, 0.0}}, 8);
    c.require(r.endpoints[0] == std::vector<double>{0.75, -0.25}, "constant flow not exact");
    c.require(r.endpoints[1] == std::vector<double>{0.5, -0.75}, "constant flow not exact");
    c.info << "measured order " << order;
}

// 10. Energy-capacity inequality on the exact model.
void criterion_10(Checks& c) {
    const Manifest m = fixture("box_exact.json");
    const LcsStructure box = structure_of(m);
    const int level = 3;
    // H = x e^{-z} gives K = e^h H = x.
    const CoeffFn h = CoeffFn::variable(n4, 0) * CoeffFn::exp_linear({0, 0, -1, 0});
    const EnergyCapacity k = energy_capacity_check(box, HamiltonianPath::autonomous(h), level);
    c.require(std::abs(k.calabi_abs - 0.5) < 1e-9, "|Cal| for K = x is " + std::to_string(k.calabi_abs));
    c.require(std::abs(k.rhs - 1.0) < 1e-9, "Vol * E for K = x is " + std::to_string(k.rhs));
    c.require(k.holds, "inequality fails for K = x");
    c.info << "K = x: " << k.calabi_abs << " <= " << k.rhs;

    testkit::Rng rng(331);
    for (int i = 0; i < 5; ++i) {
        HamiltonianPath path{n4, {}};
        const int t_degree = rng.integer(0, 1);
        for (int j = 0; j <= t_degree; ++j) path.coeffs.push_back(rng.coeff_fn(n4, 3, 2, 1));
        const EnergyCapacity r = energy_capacity_check(box, path, level);
        c.require(r.holds, "random path " + std::to_string(i) + ": " + std::to_string(r.calabi_abs) + " > " +
                               std::to_string(r.rhs));
        c.info << "; " << r.calabi_abs << " <= " << r.rhs;
    }
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, void (*)(Checks&)>> criteria{
        {"structure equation", criterion_1},   {"volume form", criterion_2},
        {"contraction and strictness", criterion_3}, {"Hamiltonian field and Calabi", criterion_4},
        {"flux and primitive search", criterion_5}, {"invariant cohomology", criterion_6},
        {"lattice Hodge theory", criterion_7},  {"property suites", criterion_8},
        {"RK4 flow", criterion_9},             {"energy-capacity", criterion_10},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Checks c;
        const auto t0 = Clock::now();
        try {
            criteria[i].second(c);
        } catch (const std::exception& e) {
            c.require(false, std::string("exception: ") + e.what());
        }
        const double t = seconds_since(t0);
        char head[96];
        std::snprintf(head, sizeof head, "%s %2zu %-30s %8.3fs", c.ok() ? "PASS" : "FAIL", i + 1,
                      criteria[i].first.c_str(), t);
        std::cout << head << "  " << (c.ok() ? c.info.str() : c.summary()) << "\n";
        if (!c.ok()) ++failed;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}

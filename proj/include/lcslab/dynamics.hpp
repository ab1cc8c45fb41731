#pragma once

// Isotopies, flux, Calabi, Hofer energy and flows.

#include "lcslab/ce_cohomology.hpp"
#include "lcslab/coeff_fn.hpp"
#include "lcslab/exact_linalg.hpp"
#include "lcslab/forms.hpp"
#include "lcslab/lattice_hodge.hpp"
#include "lcslab/lcs.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lcslab {

/// X_t = sum_j t^j X^(j).
struct Isotopy {
    std::size_t n = 0;
    std::vector<VectorField> coeffs;

    static Isotopy autonomous(const VectorField& x) { return {x.dimension(), {x}}; }

    int t_degree() const { return static_cast<int>(coeffs.size()) - 1; }

    VectorField at(const Rational& t) const {
        VectorField out(n);
        Rational tp = 1;
        for (const auto& c : coeffs) {
            if (tp != 0) out = out + c.scaled(ExpScalar(tp));
            tp *= t;
        }
        return out;
    }
};

/// H_t = sum_j t^j H^(j).
struct HamiltonianPath {
    std::size_t n = 0;
    std::vector<CoeffFn> coeffs;

    static HamiltonianPath autonomous(const CoeffFn& h) { return {h.dimension(), {h}}; }

    int t_degree() const { return static_cast<int>(coeffs.size()) - 1; }
};

/// Nodes and weights of the n-point Gauss-Legendre rule on [0, 1].
inline std::vector<std::pair<double, double>> gauss_legendre(std::size_t n) {
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 1; i <= n; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) - 0.25) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.emplace_back(0.5 * (1.0 - x), 0.5 * w);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Primitive search

struct SearchBounds {
    int degree = 3;
    std::vector<Rational> slopes{Rational(-1), Rational(0), Rational(1)};
};

struct PrimitiveSearchResult {
    std::optional<CoeffFn> primitive;
    std::size_t ansatz_size = 0;
    bool invariant_ansatz = false;
};

/// Looks for f with d^omega f = alpha among sums of
/// e^r x^a e^{<k,x>}, |a| <= D, k in K^n, r ranging over the exponents
/// that occur in alpha. With generators, f is also required to be invariant
/// under each of them, so that it descends to the quotient.
inline PrimitiveSearchResult primitive_search(const LcsStructure& l, const Form& alpha, const SearchBounds& bounds,
                                              const std::vector<AffineMap>& generators = {}) {
    const std::size_t n = l.dimension();
    if (alpha.degree() != 1 || alpha.dimension() != n)
        throw std::invalid_argument("primitive_search: expected a 1-form");
    if (bounds.degree < 0) throw std::invalid_argument("primitive_search: negative degree cap");
    if (!twisted_d(alpha, l.lee()).is_zero()) throw std::domain_error("primitive_search: alpha is not d^omega-closed");

    std::set<Rational> exponents{Rational(0)};
    for (const auto& [idx, f] : alpha.components())
        for (const auto& t : f.terms())
            for (const auto& e : t.coeff.terms()) exponents.insert(e.r);

    // Ansatz basis.
    std::vector<std::vector<int>> powers;
    {
        std::vector<int> cur(n, 0);
        auto rec = [&](auto&& self, std::size_t axis, int left) -> void {
            if (axis == n) {
                powers.push_back(cur);
                return;
            }
            for (int a = 0; a <= left; ++a) {
                cur[axis] = a;
                self(self, axis + 1, left - a);
            }
            cur[axis] = 0;
        };
        rec(rec, 0, bounds.degree);
    }
    std::vector<std::vector<Rational>> slopes;
    {
        std::vector<Rational> cur(n);
        auto rec = [&](auto&& self, std::size_t axis) -> void {
            if (axis == n) {
                slopes.push_back(cur);
                return;
            }
            for (const auto& k : bounds.slopes) {
                cur[axis] = k;
                self(self, axis + 1);
            }
        };
        if (!bounds.slopes.empty()) rec(rec, 0);
    }
    std::vector<CoeffFn> basis;
    for (const auto& k : slopes)
        for (const auto& a : powers)
            for (const auto& r : exponents) basis.push_back(CoeffFn::monomial(n, ExpScalar::exp_term(1, r), a, k));

    PrimitiveSearchResult res;
    res.ansatz_size = basis.size();
    res.invariant_ansatz = !generators.empty();

    using Key = detail::ExpansionKey;
    std::map<std::pair<int, Key>, std::map<std::size_t, Rational>> rows;
    const auto target = detail::expand_rational(alpha);
    for (const auto& [k, v] : target) rows[{-1, k}];
    for (std::size_t j = 0; j < basis.size(); ++j) {
        for (const auto& [k, v] : detail::expand_rational(twisted_d(Form::function(basis[j]), l.lee())))
            rows[{-1, k}][j] += v;
        for (std::size_t g = 0; g < generators.size(); ++g) {
            const CoeffFn moved = basis[j].pullback_affine(generators[g].linear(), generators[g].offset()) - basis[j];
            for (const auto& [k, v] : detail::expand_rational(Form::function(moved)))
                rows[{static_cast<int>(g), k}][j] += v;
        }
    }

    SparseSystem sys(basis.size());
    for (auto& [key, entries] : rows) {
        Rational rhs = 0;
        if (key.first == -1)
            if (auto it = target.find(key.second); it != target.end()) rhs = it->second;
        sys.add_row(std::move(entries), rhs);
    }
    auto sol = sys.solve();
    if (!sol) return res;

    CoeffFn f(n);
    for (std::size_t j = 0; j < basis.size(); ++j)
        if ((*sol)[j] != 0) f += basis[j].scaled(ExpScalar((*sol)[j]));
    if (twisted_d(Form::function(f), l.lee()) != alpha)
        throw std::logic_error("primitive_search: solution fails verification");
    res.primitive = std::move(f);
    return res;
}

// ---------------------------------------------------------------------------
// Flux

enum class Verdict { zero_class, no_primitive_found, nonzero_invariant_class, harmonic_part_present,
                     numerically_exact, not_applicable };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::zero_class: return "zero_class";
        case Verdict::no_primitive_found: return "no_primitive_found";
        case Verdict::nonzero_invariant_class: return "nonzero_invariant_class";
        case Verdict::harmonic_part_present: return "harmonic_part_present";
        case Verdict::numerically_exact: return "numerically_exact";
        case Verdict::not_applicable: return "not_applicable";
    }
    return "?";
}

struct BackendVerdict {
    std::string backend;  ///< "ce", "primitive-search" or "lattice"
    Verdict verdict = Verdict::not_applicable;
    std::optional<CoeffFn> primitive;  ///< explicit witness, symbolic backends only
    std::string bounds;                ///< what the verdict is conditional on
    std::string note;
    double harmonic_magnitude = 0.0;   ///< lattice backend
};

struct CeContext {
    LieAlgebraSpec algebra;
    std::vector<Form> coframe;
};

struct LatticeContext {
    std::size_t resolution = 8;
};

struct FluxOptions {
    std::vector<std::string> backends{"primitive-search"};
    SearchBounds search;
    std::vector<AffineMap> generators;
    std::optional<CeContext> ce;
    LatticeContext lattice;
};

struct FluxResult {
    Form form;
    bool closed = false;
    bool strict = true;
    std::vector<Rational> checked_times;
    std::vector<std::string> warnings;
    std::vector<BackendVerdict> verdicts;
};

/// Times at which strictness of a degree-d family is checked: {0, 1/2, 1}
/// together with d+1 equally spaced points, enough to decide it for all t.
inline std::vector<Rational> strictness_times(int t_degree) {
    std::set<Rational> ts{Rational(0), Rational(1, 2), Rational(1)};
    const int d = std::max(t_degree, 1);
    for (int i = 0; i <= d; ++i) ts.insert(Rational(i, d));
    return {ts.begin(), ts.end()};
}

inline BackendVerdict decide_primitive_search(const LcsStructure& l, const Form& a, const FluxOptions& opt) {
    BackendVerdict v;
    v.backend = "primitive-search";
    std::string ks;
    for (const auto& k : opt.search.slopes) ks += (ks.empty() ? "" : ",") + k.get_str();
    v.bounds = "degree<=" + std::to_string(opt.search.degree) + ", slopes {" + ks + "} per axis";
    if (!opt.generators.empty()) v.bounds += ", invariant under " + std::to_string(opt.generators.size()) + " generators";
    auto r = primitive_search(l, a, opt.search, opt.generators);
    if (r.primitive) {
        v.verdict = Verdict::zero_class;
        v.primitive = r.primitive;
    } else {
        v.verdict = Verdict::no_primitive_found;
        if (!opt.generators.empty()) {
            auto free = primitive_search(l, a, opt.search);
            if (free.primitive)
                v.note = "a primitive exists without the invariance constraint: " + free.primitive->str();
        }
    }
    return v;
}

inline BackendVerdict decide_ce(const LcsStructure& l, const Form& a, const FluxOptions& opt) {
    BackendVerdict v;
    v.backend = "ce";
    v.bounds = "left-invariant forms only";
    if (!opt.ce) {
        v.note = "no Lie algebra in the manifest";
        return v;
    }
    auto c = express_in_coframe(a, opt.ce->coframe);
    auto w = express_in_coframe(l.lee(), opt.ce->coframe);
    if (!c || !w) {
        v.note = !w ? "Lee form is not invariant in the coframe" : "flux form is not invariant in the coframe";
        return v;
    }
    const auto cx = CeComplex::build(opt.ce->algebra, *w);
    const auto d = class_decide(cx, *c, 1);
    if (d.kind == ClassKind::zero_class) {
        v.verdict = Verdict::zero_class;
        v.primitive = CoeffFn::constant(l.dimension(), ExpScalar(d.primitive.empty() ? Rational(0) : d.primitive[0]));
    } else if (d.kind == ClassKind::nonzero_class) {
        v.verdict = Verdict::nonzero_invariant_class;
    } else {
        v.note = "flux form is not a cocycle of the invariant complex";
    }
    return v;
}

inline BackendVerdict decide_lattice(const LcsStructure& l, const Form& a, const FluxOptions& opt) {
    BackendVerdict v;
    v.backend = "lattice";
    v.bounds = "periodic grid N=" + std::to_string(opt.lattice.resolution) + ", constant Lee form, sampled at barycentres";
    const std::size_t n = l.dimension();
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const CoeffFn c = l.lee().coefficient({static_cast<int>(i)});
        if (!c.is_constant()) {
            v.note = "Lee form is not constant";
            return v;
        }
        w[i] = c.constant_value().to_double();
    }
    const Grid grid(n, opt.lattice.resolution);
    const auto ops = build_operators(grid, w);
    const auto split = flux_split(ops, {sample_cochain(grid, a)}, {1.0});
    v.harmonic_magnitude = split.harmonic_magnitude;
    const double scale = std::max(1.0, ops.norm(sample_cochain(grid, a).values));
    v.verdict = split.harmonic_magnitude < 1e-8 * scale ? Verdict::numerically_exact : Verdict::harmonic_part_present;
    v.note = "diagnostic only: the sampled form need not be periodic";
    if (!split.converged) v.note += "; CG did not converge";
    return v;
}

inline std::vector<BackendVerdict> decide_class(const LcsStructure& l, const Form& a, const FluxOptions& opt) {
    std::vector<BackendVerdict> out;
    for (const auto& b : opt.backends) {
        if (b == "primitive-search") out.push_back(decide_primitive_search(l, a, opt));
        else if (b == "ce") out.push_back(decide_ce(l, a, opt));
        else if (b == "lattice") out.push_back(decide_lattice(l, a, opt));
        else throw std::invalid_argument("unknown flux backend: " + b);
    }
    return out;
}

/// int_0^1 i_{X_t} Omega dt, integrated termwise in t.
inline FluxResult flux(const LcsStructure& l, const Isotopy& iso, const FluxOptions& opt = {}) {
    const std::size_t n = l.dimension();
    if (iso.n != n) throw std::invalid_argument("flux: dimension mismatch");
    FluxResult r;
    r.form = Form(n, 1);
    for (std::size_t j = 0; j < iso.coeffs.size(); ++j)
        r.form = r.form + interior(iso.coeffs[j], l.form()).scaled(ExpScalar(Rational(1, static_cast<long>(j) + 1)));

    r.checked_times = strictness_times(iso.t_degree());
    for (const auto& t : r.checked_times)
        if (!is_strict_lcs(l, iso.at(t)).strict) {
            r.strict = false;
            r.warnings.push_back("flux of a path outside ker Phi: X_t is not strictly LCS at t=" + t.get_str());
            break;
        }
    r.closed = twisted_d(r.form, l.lee()).is_zero();
    if (!r.closed) r.warnings.push_back("flux form is not d^omega-closed");
    if (r.closed) r.verdicts = decide_class(l, r.form, opt);
    return r;
}

struct VanishingResult {
    bool vanishes = false;
    std::optional<CoeffFn> primitive;
    std::string witness_backend;
    FluxResult flux;
};

inline VanishingResult flux_vanishing_test(const LcsStructure& l, const Isotopy& iso, const FluxOptions& opt = {}) {
    VanishingResult v;
    v.flux = flux(l, iso, opt);
    for (const auto& b : v.flux.verdicts)
        if (b.verdict == Verdict::zero_class && b.primitive) {
            v.vanishes = true;
            v.primitive = b.primitive;
            v.witness_backend = b.backend;
            break;
        }
    return v;
}

// ---------------------------------------------------------------------------
// Calabi and Hofer

/// int_0^1 int_M H_t Omega^m/m! dt, exactly.
inline ExpScalar calabi(const LcsStructure& l, const HamiltonianPath& path) {
    if (path.n != l.dimension()) throw std::invalid_argument("calabi: dimension mismatch");
    const CoeffFn rho = l.volume_density();
    ExpScalar total;
    for (std::size_t j = 0; j < path.coeffs.size(); ++j)
        total = total + (path.coeffs[j] * rho).integrate_box().scaled(Rational(1, static_cast<long>(j) + 1));
    return total;
}

struct Extrema {
    double min = 0.0;
    double max = 0.0;
};

/// Extrema of f over the unit box, sampled on the dyadic grid with 2^level+1
/// points per axis, refined once around the minimiser and maximiser found on
/// each coarser dyadic subgrid. Nested, so the range only grows with level.
template <class F>
Extrema sampled_extrema(const F& f, std::size_t n, int level) {
    if (level < 1) throw std::invalid_argument("sampled_extrema: level must be at least 1");
    const std::size_t side = (std::size_t{1} << level) + 1;
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= side;

    std::vector<double> best_min(static_cast<std::size_t>(level) + 1, INFINITY);
    std::vector<double> best_max(static_cast<std::size_t>(level) + 1, -INFINITY);
    std::vector<std::vector<double>> arg_min(best_min.size()), arg_max(best_max.size());
    std::vector<std::size_t> idx(n, 0);
    std::vector<double> x(n);
    const double h = 1.0 / static_cast<double>(side - 1);
    for (std::size_t c = 0; c < total; ++c) {
        std::size_t rem = c;
        for (std::size_t i = n; i-- > 0;) {
            idx[i] = rem % side;
            rem /= side;
            x[i] = static_cast<double>(idx[i]) * h;
        }
        const double v = f(x);
        // The coarsest level whose subgrid contains this point.
        int coarse = level;
        while (coarse > 0) {
            const std::size_t stride = std::size_t{1} << (level - coarse + 1);
            bool on = true;
            for (std::size_t i = 0; i < n && on; ++i) on = idx[i] % stride == 0;
            if (!on) break;
            --coarse;
        }
        for (int lv = std::max(coarse, 1); lv <= level; ++lv) {
            const auto s = static_cast<std::size_t>(lv);
            if (v < best_min[s]) {
                best_min[s] = v;
                arg_min[s] = x;
            }
            if (v > best_max[s]) {
                best_max[s] = v;
                arg_max[s] = x;
            }
        }
    }

    Extrema e{best_min[static_cast<std::size_t>(level)], best_max[static_cast<std::size_t>(level)]};
    constexpr int kPatch = 4;  // sub-intervals per coarse cell in the refinement patch
    for (int lv = 1; lv <= level; ++lv) {
        const double cell = 1.0 / static_cast<double>(std::size_t{1} << lv);
        for (const auto* centre : {&arg_min[static_cast<std::size_t>(lv)], &arg_max[static_cast<std::size_t>(lv)]}) {
            const std::size_t pside = 2 * kPatch + 1;
            std::size_t ptotal = 1;
            for (std::size_t i = 0; i < n; ++i) ptotal *= pside;
            for (std::size_t c = 0; c < ptotal; ++c) {
                std::size_t rem = c;
                bool inside = true;
                for (std::size_t i = n; i-- > 0;) {
                    const auto off = static_cast<double>(rem % pside) - kPatch;
                    rem /= pside;
                    x[i] = (*centre)[i] + off * cell / kPatch;
                    if (x[i] < 0.0 || x[i] > 1.0) inside = false;
                }
                if (!inside) continue;
                const double v = f(x);
                e.min = std::min(e.min, v);
                e.max = std::max(e.max, v);
            }
        }
    }
    return e;
}

enum class HoferMode { exact, nonexact };

struct HoferResult {
    double energy = 0.0;
    int level = 0;  ///< dyadic sampling level; the value is a lower bound at this resolution
};

/// K_t = weight * sum_j t^j H^(j) in double precision.
class PathEvaluator {
public:
    PathEvaluator(const HamiltonianPath& path, const CoeffFn* weight) : n_(path.n) {
        for (const auto& c : path.coeffs) fs_.emplace_back(weight ? (*weight) * c : c);
    }

    std::size_t dimension() const { return n_; }

    auto at(double t) const {
        return [this, t](std::span<const double> x) {
            double v = 0.0, tp = 1.0;
            for (const auto& f : fs_) {
                v += tp * f(x);
                tp *= t;
            }
            return v;
        };
    }

private:
    std::size_t n_;
    std::vector<NumericFn> fs_;
};

/// Exact mode: int osc(e^h H_t) dt. Non-exact mode: int max|H_t| dt.
inline HoferResult hofer_energy(const LcsStructure& l, const HamiltonianPath& path, HoferMode mode, int level) {
    if (path.n != l.dimension()) throw std::invalid_argument("hofer_energy: dimension mismatch");
    std::optional<CoeffFn> weight;
    if (mode == HoferMode::exact) {
        if (!l.potential()) throw std::domain_error("hofer_energy: exact mode needs a potential h with dh = omega");
        weight = exp_of_linear(*l.potential());
    }
    const auto nodes = gauss_legendre(16);
    const PathEvaluator k(path, weight ? &*weight : nullptr);
    HoferResult r;
    r.level = level;
    for (const auto& [t, w] : nodes) {
        const auto e = sampled_extrema(k.at(t), path.n, level);
        const double v = mode == HoferMode::exact ? e.max - e.min : std::max(std::abs(e.min), std::abs(e.max));
        r.energy += w * v;
    }
    return r;
}

struct EnergyCapacity {
    double calabi_abs = 0.0;     ///< |Cal| of the min-normalised K_t
    double volume = 0.0;         ///< Vol of M under Omega_h
    double energy = 0.0;         ///< single-path osc energy
    double rhs = 0.0;            ///< volume * energy
    bool holds = false;
};

inline constexpr double kEnergyCapacitySlack = 1e-6;

/// |Cal(K - min K)| <= Vol(Omega_h) E with K_t = e^h H_t and Omega_h = e^h Omega.
inline EnergyCapacity energy_capacity_check(const LcsStructure& l, const HamiltonianPath& path, int level) {
    if (!l.potential()) throw std::domain_error("energy_capacity_check: structure is not exact");
    const std::size_t n = l.dimension();
    const CoeffFn weight = exp_of_linear(*l.potential());
    CoeffFn density(n);
    {
        // Omega_h^m/m! = e^{mh} Omega^m/m!
        CoeffFn wm = CoeffFn::constant(n, ExpScalar(1));
        for (std::size_t i = 0; i < n / 2; ++i) wm = wm * weight;
        density = wm * l.volume_density();
    }
    const ExpScalar vol = density.integrate_box();
    ExpScalar cal_raw;
    for (std::size_t j = 0; j < path.coeffs.size(); ++j)
        cal_raw = cal_raw + (weight * path.coeffs[j] * density).integrate_box().scaled(Rational(1, static_cast<long>(j) + 1));

    const auto nodes = gauss_legendre(16);
    const PathEvaluator k(path, &weight);
    double min_integral = 0.0, energy = 0.0;
    for (const auto& [t, w] : nodes) {
        const auto e = sampled_extrema(k.at(t), n, level);
        min_integral += w * e.min;
        energy += w * (e.max - e.min);
    }
    EnergyCapacity r;
    r.volume = vol.to_double();
    r.energy = energy;
    r.calabi_abs = std::abs(cal_raw.to_double() - r.volume * min_integral);
    r.rhs = r.volume * r.energy;
    r.holds = r.calabi_abs <= r.rhs + kEnergyCapacitySlack;
    return r;
}

// ---------------------------------------------------------------------------
// Flows

struct FlowResult {
    std::vector<std::vector<double>> endpoints;
    std::vector<bool> blew_up;
};

/// Classical RK4 for dx/dt = X_t(x) on [t0, t1].
inline FlowResult flow(const Isotopy& iso, const std::vector<std::vector<double>>& points, std::size_t steps,
                       bool wrap = false, double t0 = 0.0, double t1 = 1.0) {
    if (steps < 1) throw std::invalid_argument("flow: steps must be at least 1");
    const std::size_t n = iso.n;
    std::vector<std::vector<NumericFn>> comp;
    for (const auto& c : iso.coeffs) {
        std::vector<NumericFn> row;
        for (std::size_t i = 0; i < n; ++i) row.emplace_back(c[i]);
        comp.push_back(std::move(row));
    }
    auto field = [&](double t, const std::vector<double>& x, std::vector<double>& out) {
        std::fill(out.begin(), out.end(), 0.0);
        double tp = 1.0;
        for (const auto& row : comp) {
            for (std::size_t i = 0; i < n; ++i) out[i] += tp * row[i](x);
            tp *= t;
        }
    };

    FlowResult r;
    const double h = (t1 - t0) / static_cast<double>(steps);
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (const auto& p0 : points) {
        if (p0.size() != n) throw std::invalid_argument("flow: point dimension mismatch");
        std::vector<double> x = p0;
        bool bad = false;
        for (std::size_t s = 0; s < steps && !bad; ++s) {
            const double t = t0 + static_cast<double>(s) * h;
            field(t, x, k1);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
            field(t + 0.5 * h, tmp, k2);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
            field(t + 0.5 * h, tmp, k3);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
            field(t + h, tmp, k4);
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                if (!std::isfinite(x[i])) bad = true;
            }
        }
        if (wrap && !bad)
            for (auto& v : x) v -= std::floor(v);
        r.endpoints.push_back(std::move(x));
        r.blew_up.push_back(bad);
    }
    return r;
}

}  // namespace lcslab

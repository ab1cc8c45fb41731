#pragma once

#include "lcslab/coeff_fn.hpp"
#include "lcslab/forms.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lcslab {

/// First `count` points of the Halton sequence in [0,1]^n.
inline std::vector<std::vector<double>> halton_points(std::size_t n, std::size_t count) {
    static constexpr std::array<int, 12> primes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    if (n > primes.size()) throw std::invalid_argument("halton_points: dimension too large");
    std::vector<std::vector<double>> pts(count, std::vector<double>(n));
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t d = 0; d < n; ++d) {
            double f = 1.0, r = 0.0;
            std::size_t k = i + 1;
            while (k > 0) {
                f /= primes[d];
                r += f * static_cast<double>(k % primes[d]);
                k /= primes[d];
            }
            pts[i][d] = r;
        }
    return pts;
}

inline constexpr std::size_t kNondegeneracySamples = 16;
inline constexpr double kNondegeneracyThreshold = 1e-9;

/// Omega^m / m! for a 2-form on R^{2m}.
inline Form top_power(const Form& omega2) {
    const std::size_t n = omega2.dimension();
    if (omega2.degree() != 2 || n % 2 != 0) throw std::invalid_argument("top_power: expected a 2-form in even dimension");
    Form acc = Form::function(CoeffFn::constant(n, ExpScalar(1)));
    for (std::size_t k = 0; k < n / 2; ++k) acc = wedge(acc, omega2);
    return acc.scaled(ExpScalar(Rational(1) / factorial(static_cast<unsigned>(n / 2))));
}

struct ValidationReport {
    Form closedness_residual;  ///< d(omega)
    Form structure_residual;   ///< d(Omega) + omega ^ Omega
    Form volume_form;          ///< Omega^m / m!
    bool nondegenerate = false;
    bool pfaffian_unit = false;

    bool pass() const { return closedness_residual.is_zero() && structure_residual.is_zero(); }
};

/// Exact residuals of the structure equation d Omega = -omega ^ Omega.
inline ValidationReport validate(const Form& big_omega, const Form& omega) {
    if (big_omega.degree() != 2) throw std::invalid_argument("validate: Omega must be a 2-form");
    if (omega.degree() != 1) throw std::invalid_argument("validate: the Lee form must be a 1-form");
    const std::size_t n = big_omega.dimension();
    if (omega.dimension() != n) throw std::invalid_argument("validate: dimension mismatch");
    if (n == 0 || n % 2 != 0) throw std::invalid_argument("validate: dimension must be even and positive");

    ValidationReport rep;
    rep.closedness_residual = ext_d(omega);
    rep.structure_residual = ext_d(big_omega) + wedge(omega, big_omega);
    rep.volume_form = top_power(big_omega);

    const CoeffFn pf = top_coefficient(rep.volume_form);
    rep.pfaffian_unit = pf.is_unit();
    if (rep.pfaffian_unit) {
        rep.nondegenerate = true;
    } else if (!pf.is_zero()) {
        rep.nondegenerate = true;
        for (const auto& p : halton_points(n, kNondegeneracySamples))
            if (std::abs(pf.eval(p)) <= kNondegeneracyThreshold) rep.nondegenerate = false;
    }
    return rep;
}

/// A validated locally conformally symplectic pair (Omega, omega) on a
/// coordinate box, with an optional conformal potential h, dh = omega.
class LcsStructure {
public:
    static LcsStructure make(Form big_omega, Form omega, std::optional<CoeffFn> potential = std::nullopt) {
        ValidationReport rep = validate(big_omega, omega);
        if (!rep.pass()) throw std::domain_error("LcsStructure: structure equation does not hold");
        if (!rep.nondegenerate) throw std::domain_error("LcsStructure: Omega is degenerate");
        if (potential) {
            if (potential->dimension() != big_omega.dimension())
                throw std::invalid_argument("LcsStructure: potential dimension mismatch");
            if (ext_d(Form::function(*potential)) != omega)
                throw std::domain_error("LcsStructure: dh does not equal the Lee form");
        }
        LcsStructure s;
        s.omega2_ = std::move(big_omega);
        s.lee_ = std::move(omega);
        s.potential_ = std::move(potential);
        s.volume_ = std::move(rep.volume_form);
        s.pfaffian_unit_ = rep.pfaffian_unit;
        const std::vector<double> centre(s.dimension(), 0.5);
        s.orientation_ = top_coefficient(s.volume_).eval(centre) < 0 ? -1 : 1;
        return s;
    }

    std::size_t dimension() const { return omega2_.dimension(); }
    const Form& form() const { return omega2_; }
    const Form& lee() const { return lee_; }
    const std::optional<CoeffFn>& potential() const { return potential_; }
    const Form& volume() const { return volume_; }
    bool pfaffian_unit() const { return pfaffian_unit_; }

    /// The volume density w.r.t. Lebesgue measure in the orientation
    /// induced by Omega^m.
    CoeffFn volume_density() const {
        const CoeffFn c = top_coefficient(volume_);
        return orientation_ > 0 ? c : -c;
    }
    int orientation() const { return orientation_; }

private:
    LcsStructure() = default;
    Form omega2_;
    Form lee_;
    std::optional<CoeffFn> potential_;
    Form volume_;
    bool pfaffian_unit_ = false;
    int orientation_ = 1;
};

inline Form volume_form(const LcsStructure& l) { return l.volume(); }

namespace detail {

using CoeffMatrix = std::vector<std::vector<CoeffFn>>;

inline CoeffFn determinant(const CoeffMatrix& m, std::size_t dim) {
    const std::size_t n = m.size();
    if (n == 0) return CoeffFn::constant(dim, ExpScalar(1));
    if (n == 1) return m[0][0];
    CoeffFn acc(dim);
    for (std::size_t j = 0; j < n; ++j) {
        if (m[0][j].is_zero()) continue;
        CoeffMatrix minor;
        for (std::size_t i = 1; i < n; ++i) {
            std::vector<CoeffFn> row;
            for (std::size_t k = 0; k < n; ++k)
                if (k != j) row.push_back(m[i][k]);
            minor.push_back(std::move(row));
        }
        CoeffFn term = m[0][j] * determinant(minor, dim);
        acc = (j % 2 == 0) ? acc + term : acc - term;
    }
    return acc;
}

inline CoeffMatrix form_matrix(const Form& omega2) {
    const std::size_t n = omega2.dimension();
    CoeffMatrix m(n, std::vector<CoeffFn>(n, CoeffFn(n)));
    for (const auto& [idx, f] : omega2.components()) {
        const auto i = static_cast<std::size_t>(idx[0]);
        const auto j = static_cast<std::size_t>(idx[1]);
        m[i][j] = f;
        m[j][i] = -f;
    }
    return m;
}

/// Solves A x = b in double precision with partial pivoting.
inline std::optional<std::vector<double>> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        if (std::abs(a[p][c]) < 1e-14) return std::nullopt;
        std::swap(a[p], a[c]);
        std::swap(b[p], b[c]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

}  // namespace detail

/// Result of inverting X -> i_X Omega. Symbolic when the Pfaffian is a unit
/// of the coefficient algebra; otherwise pointwise numeric solves at Halton
/// sample points, and `field` is empty.
struct SharpResult {
    bool symbolic = false;
    std::optional<VectorField> field;
    std::vector<std::vector<double>> sample_points;
    std::vector<std::vector<double>> sample_values;
};

/// The vector field X with i_X Omega = alpha.
inline SharpResult sharp(const LcsStructure& l, const Form& alpha) {
    const std::size_t n = l.dimension();
    if (alpha.degree() != 1 || alpha.dimension() != n) throw std::invalid_argument("sharp: expected a 1-form");
    SharpResult res;
    const auto m = detail::form_matrix(l.form());

    // (i_X Omega)_j = sum_i X_i M_ij, i.e. M^T X = alpha.
    if (l.pfaffian_unit()) {
        const CoeffFn pf_inv = top_coefficient(l.volume()).inverse();
        const CoeffFn det_inv = pf_inv * pf_inv;
        VectorField x(n);
        for (std::size_t i = 0; i < n; ++i) {
            // X_i = sum_j adj(M^T)_{ij} alpha_j / det, adj(M^T)_{ij} = cof(M^T)_{ji} = cof(M)_{ij}.
            CoeffFn xi(n);
            for (std::size_t j = 0; j < n; ++j) {
                const CoeffFn aj = alpha.coefficient({static_cast<int>(j)});
                if (aj.is_zero()) continue;
                detail::CoeffMatrix minor;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r == i) continue;
                    std::vector<CoeffFn> row;
                    for (std::size_t c = 0; c < n; ++c)
                        if (c != j) row.push_back(m[r][c]);
                    minor.push_back(std::move(row));
                }
                CoeffFn cof = detail::determinant(minor, n);
                if ((i + j) % 2) cof = -cof;
                xi += cof * aj;
            }
            x[i] = xi * det_inv;
        }
        if (interior(x, l.form()) != alpha) throw std::logic_error("sharp: round-trip check failed");
        res.symbolic = true;
        res.field = std::move(x);
        return res;
    }

    for (const auto& p : halton_points(n, kNondegeneracySamples)) {
        std::vector<std::vector<double>> mt(n, std::vector<double>(n));
        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) {
            rhs[i] = alpha.coefficient({static_cast<int>(i)}).eval(p);
            for (std::size_t j = 0; j < n; ++j) mt[i][j] = m[j][i].eval(p);
        }
        auto sol = detail::dense_solve(std::move(mt), std::move(rhs));
        if (!sol) throw std::domain_error("sharp: Omega is singular at a sample point");
        res.sample_points.push_back(p);
        res.sample_values.push_back(std::move(*sol));
    }
    return res;
}

/// X with i_X Omega = d^omega H.
inline SharpResult hamiltonian_field(const LcsStructure& l, const CoeffFn& h) {
    return sharp(l, twisted_d(Form::function(h), l.lee()));
}

struct StrictnessCheck {
    bool strict = false;
    Form witness;  ///< L^omega_X Omega
};

inline StrictnessCheck is_strict_lcs(const LcsStructure& l, const VectorField& x) {
    StrictnessCheck c;
    c.witness = lie_twisted(x, l.form(), l.lee());
    c.strict = c.witness.is_zero();
    return c;
}

/// The f with L_X Omega = -f Omega and L_X omega = df, when it exists in the
/// coefficient algebra.
inline std::optional<CoeffFn> conformal_factor(const LcsStructure& l, const VectorField& x) {
    const std::size_t n = l.dimension();
    const Form lx = lie_derivative(x, l.form());
    std::optional<CoeffFn> f;
    if (lx.is_zero()) {
        f = CoeffFn(n);
    } else {
        for (const auto& [idx, c] : l.form().components())
            if (c.is_unit()) {
                f = -(lx.coefficient(idx) * c.inverse());
                break;
            }
        if (!f) return std::nullopt;
    }
    if (!(lx + (*f) * l.form()).is_zero()) return std::nullopt;
    if (lie_derivative(x, l.lee()) != ext_d(Form::function(*f))) return std::nullopt;
    return f;
}

/// e^h for h = c + <k, x> with rational c and k.
inline CoeffFn exp_of_linear(const CoeffFn& h) {
    const std::size_t n = h.dimension();
    if (!h.is_polynomial(1)) throw std::domain_error("exp_of_linear: potential is not affine-linear");
    Rational c = 0;
    std::vector<Rational> k(n, Rational(0));
    for (const auto& t : h.terms()) {
        if (!t.coeff.is_rational()) throw std::domain_error("exp_of_linear: potential has non-rational coefficients");
        std::size_t axis = n;
        for (std::size_t i = 0; i < n; ++i)
            if (t.powers[i] == 1) axis = i;
        if (axis == n) c += t.coeff.rational_value();
        else k[axis] += t.coeff.rational_value();
    }
    return CoeffFn::monomial(n, ExpScalar::exp_term(1, c), std::vector<int>(n, 0), std::move(k));
}

struct RescaledStructure {
    Form symplectic;  ///< e^h Omega
    CoeffFn weight;   ///< e^h
};

/// Omega_h = e^h Omega, closed whenever dh = omega.
inline RescaledStructure rescale(const LcsStructure& l, const CoeffFn& h) {
    if (h.dimension() != l.dimension()) throw std::invalid_argument("rescale: dimension mismatch");
    if (ext_d(Form::function(h)) != l.lee()) throw std::domain_error("rescale: dh does not equal the Lee form");
    RescaledStructure r{Form(), exp_of_linear(h)};
    r.symplectic = r.weight * l.form();
    if (!ext_d(r.symplectic).is_zero()) throw std::logic_error("rescale: rescaled form is not closed");
    return r;
}

enum class DescentKind { invariant, conformal, fails };

inline const char* to_string(DescentKind k) {
    switch (k) {
        case DescentKind::invariant: return "invariant";
        case DescentKind::conformal: return "conformal";
        case DescentKind::fails: return "fails";
    }
    return "?";
}

struct DescentResult {
    DescentKind kind = DescentKind::fails;
    std::optional<ExpScalar> factor;  ///< c with g^* form = c form
    Form residual;                    ///< g^* form - c form (c = 1 when none was found)
};

/// Compares g^* form with c * form for a constant c, generator by generator.
inline std::vector<DescentResult> descent_check(const Form& form, const std::vector<AffineMap>& generators) {
    std::vector<DescentResult> out;
    for (const auto& g : generators) {
        const Form pulled = pullback(g, form);
        DescentResult r;
        if (form.is_zero()) {
            r.kind = DescentKind::invariant;
            r.factor = ExpScalar(1);
            r.residual = pulled;
            out.push_back(std::move(r));
            continue;
        }
        // Candidate factor from the leading term of the leading component.
        const auto& [idx, coeff] = *form.components().begin();
        const auto& lead = coeff.terms().front();
        std::optional<ExpScalar> c;
        if (lead.coeff.is_unit()) {
            const CoeffFn image = pulled.coefficient(idx);
            for (const auto& t : image.terms())
                if (CoeffFn::compare_key(t, lead) == 0) c = t.coeff * lead.coeff.inverse();
        }
        if (c) {
            r.residual = pulled - form.scaled(*c);
            if (r.residual.is_zero()) {
                r.kind = (*c == ExpScalar(1)) ? DescentKind::invariant : DescentKind::conformal;
                r.factor = c;
            }
        } else {
            r.residual = pulled - form;
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace lcslab

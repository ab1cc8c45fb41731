#include "support.hpp"

#include "lcslab/lcs.hpp"

#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>

using namespace lcslab;
using Catch::Matchers::WithinAbs;

namespace {

const std::size_t n = 4;
Form dx(int i) { return Form::dx(n, i); }
CoeffFn var(std::size_t i) { return CoeffFn::variable(n, i); }
CoeffFn ez() { return CoeffFn::exp_linear({0, 0, 1, 0}); }

/// Solves M^T X = a at a point by Cramer's rule on the 4x4 matrix
/// M_ij = Omega(e_i, e_j).
std::array<double, 4> cramer_sharp(const Form& big_omega, const Form& alpha, const std::vector<double>& p) {
    using M4 = std::array<std::array<double, 4>, 4>;
    M4 mt{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) mt[i][j] = big_omega.coefficient({j, i}).eval(p);
    auto det4 = [](const M4& m) {
        double total = 0.0;
        std::array<int, 4> perm{0, 1, 2, 3};
        do {
            int inversions = 0;
            for (int a = 0; a < 4; ++a)
                for (int b = a + 1; b < 4; ++b)
                    if (perm[a] > perm[b]) ++inversions;
            double prod = inversions % 2 ? -1.0 : 1.0;
            for (int r = 0; r < 4; ++r) prod *= m[r][perm[r]];
            total += prod;
        } while (std::next_permutation(perm.begin(), perm.end()));
        return total;
    };
    const double d = det4(mt);
    std::array<double, 4> x{};
    for (int c = 0; c < 4; ++c) {
        M4 m = mt;
        for (int r = 0; r < 4; ++r) m[r][c] = alpha.coefficient({r}).eval(p);
        x[c] = det4(m) / d;
    }
    return x;
}

}  // namespace

TEST_CASE("validation of the corrected Kodaira-Thurston structure", "[lcs]") {
    const ValidationReport rep = validate(testkit::kt_omega_big(), testkit::kt_lee());
    CHECK(rep.pass());
    CHECK(rep.nondegenerate);
    CHECK(rep.pfaffian_unit);
    // Omega^2/2 = e^z dx^dy^dw^dz = -e^z dx^dy^dz^dw
    CHECK(top_coefficient(rep.volume_form) == -ez());
}

TEST_CASE("the opposite Lee form sign fails validation", "[lcs]") {
    const ValidationReport rep = validate(testkit::kt_omega_big(), dx(2));
    CHECK_FALSE(rep.pass());
    CHECK(rep.closedness_residual.is_zero());
    CHECK(rep.structure_residual == (ez() * wedge(wedge(dx(0), dx(1)), dx(2))).scaled(ExpScalar(2)));
    CHECK_THROWS_AS(LcsStructure::make(testkit::kt_omega_big(), dx(2)), std::domain_error);
}

TEST_CASE("the alternate repair validates", "[lcs]") {
    const Form o = CoeffFn::exp_linear({0, 0, -1, 0}) * wedge(dx(0), dx(1)) + wedge(dx(3), dx(2));
    CHECK(validate(o, dx(2)).pass());
}

TEST_CASE("degenerate and malformed input", "[lcs]") {
    const Form degenerate = wedge(dx(0), dx(1));
    const ValidationReport rep = validate(degenerate, Form(n, 1));
    CHECK(rep.pass());
    CHECK_FALSE(rep.nondegenerate);
    CHECK_THROWS_AS(LcsStructure::make(degenerate, Form(n, 1)), std::domain_error);
    CHECK_THROWS_AS(validate(dx(0), Form(n, 1)), std::invalid_argument);
    CHECK_THROWS_AS(validate(Form(3, 2), Form(3, 1)), std::invalid_argument);
    // Non-unit Pfaffian that vanishes on the box: (x - 1/2) dx^dy + dz^dw
    const Form vanishing = (var(0) - CoeffFn::constant(n, ExpScalar(Rational(1, 2)))) * wedge(dx(0), dx(1)) +
                           wedge(dx(2), dx(3));
    // Not a unit, so never inverted symbolically.
    CHECK_FALSE(validate(vanishing, Form(n, 1)).pfaffian_unit);
}

TEST_CASE("volumes", "[lcs]") {
    const LcsStructure kt = testkit::kt();
    CHECK(kt.orientation() == -1);
    CHECK(kt.volume_density() == ez());
    CHECK(kt.volume_density().integrate_box() == ExpScalar::exp_term(1, 1) - ExpScalar(1));

    const LcsStructure box = testkit::box_model();
    CHECK(box.orientation() == -1);
    CHECK(box.volume_density() == CoeffFn::exp_linear({0, 0, -2, 0}));

    // Standard symplectic form: volume 1.
    const LcsStructure flat = LcsStructure::make(wedge(dx(0), dx(1)) + wedge(dx(2), dx(3)), Form(n, 1));
    CHECK(flat.orientation() == 1);
    CHECK(flat.volume_density().integrate_box() == ExpScalar(1));
}

TEST_CASE("sharp on the Kodaira-Thurston structure", "[lcs]") {
    const LcsStructure kt = testkit::kt();
    // Omega = e^z dx^dy + dw^dz, so i_{d_w} Omega = dz.
    const SharpResult s = sharp(kt, dx(2));
    REQUIRE(s.symbolic);
    REQUIRE(s.field);
    CHECK(*s.field == VectorField::basis(n, 3));
    // i_{d_x} Omega = e^z dy
    const SharpResult t = sharp(kt, ez() * dx(1));
    CHECK(*t.field == VectorField::basis(n, 0));
    CHECK_THROWS_AS(sharp(kt, wedge(dx(0), dx(1))), std::invalid_argument);
}

TEST_CASE("Hamiltonian fields agree with a pointwise solve", "[lcs]") {
    testkit::Rng rng(21);
    const LcsStructure flat = LcsStructure::make(wedge(dx(0), dx(1)) + wedge(dx(2), dx(3)), Form(n, 1));
    const LcsStructure kt = testkit::kt();
    for (int trial = 0; trial < 100; ++trial) {
        const LcsStructure& l = trial % 2 ? kt : flat;
        const CoeffFn h = rng.coeff_fn(n, 3, 2, 1);
        const SharpResult s = hamiltonian_field(l, h);
        REQUIRE(s.field);
        const Form alpha = twisted_d(Form::function(h), l.lee());
        const auto p = rng.point(n);
        const auto want = cramer_sharp(l.form(), alpha, p);
        const auto got = s.field->eval(p);
        for (std::size_t i = 0; i < n; ++i)
            CHECK_THAT(got[i], WithinAbs(want[i], 1e-9 * std::max(1.0, std::abs(want[i]))));
    }
}

TEST_CASE("numeric sharp when the Pfaffian is not a unit", "[lcs]") {
    // Omega = (1 + x) dx^dy + dz^dw is symplectic on the box.
    const Form o = (testkit::one(n) + var(0)) * wedge(dx(0), dx(1)) + wedge(dx(2), dx(3));
    const LcsStructure l = LcsStructure::make(o, Form(n, 1));
    CHECK_FALSE(l.pfaffian_unit());
    const SharpResult s = sharp(l, dx(1));
    CHECK_FALSE(s.symbolic);
    REQUIRE(s.sample_points.size() == s.sample_values.size());
    REQUIRE_FALSE(s.sample_points.empty());
    for (std::size_t k = 0; k < s.sample_points.size(); ++k) {
        const auto& p = s.sample_points[k];
        // i_X Omega = dy means X = d_x / (1 + x)
        CHECK_THAT(s.sample_values[k][0], WithinAbs(1.0 / (1.0 + p[0]), 1e-12));
        CHECK_THAT(s.sample_values[k][1], WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("strictness and conformal factors", "[lcs]") {
    const LcsStructure kt = testkit::kt();
    // d_x and d_y preserve Omega and omega(d_x) = 0.
    CHECK(is_strict_lcs(kt, VectorField::basis(n, 0)).strict);
    // d_z: L_X Omega = e^z dx^dy, twisted adds -Omega; not strict.
    const StrictnessCheck c = is_strict_lcs(kt, VectorField::basis(n, 2));
    CHECK_FALSE(c.strict);
    CHECK(c.witness == -wedge(dx(3), dx(2)));

    // Box model: d_x preserves Omega, so the factor is zero.
    const LcsStructure box = testkit::box_model();
    const auto f0 = conformal_factor(box, VectorField::basis(n, 0));
    REQUIRE(f0);
    CHECK(f0->is_zero());
    // d_z scales Omega by -1.
    const auto fz = conformal_factor(box, VectorField::basis(n, 2));
    REQUIRE(fz);
    CHECK(*fz == testkit::one(n));
    // x d_z is not conformal.
    CHECK_FALSE(conformal_factor(box, VectorField({CoeffFn(n), CoeffFn(n), var(0), CoeffFn(n)})));
}

TEST_CASE("rescaling by the potential", "[lcs]") {
    const LcsStructure box = testkit::box_model();
    const RescaledStructure r = rescale(box, var(2));
    CHECK(r.weight == ez());
    CHECK(r.symplectic == wedge(dx(0), dx(1)) + wedge(dx(3), dx(2)));
    CHECK(ext_d(r.symplectic).is_zero());
    CHECK_THROWS_AS(rescale(box, var(0)), std::domain_error);
    CHECK_THROWS_AS(exp_of_linear(var(0) * var(0)), std::domain_error);
    CHECK(exp_of_linear(var(2) + testkit::one(n)) == CoeffFn::monomial(n, ExpScalar::exp_term(1, 1), {0, 0, 0, 0}, {0, 0, 1, 0}));
}

TEST_CASE("descent under the lattice generators", "[lcs]") {
    const auto gens = testkit::kt_generators();
    for (const auto& r : descent_check(testkit::kt_lee(), gens)) CHECK(r.kind == DescentKind::invariant);

    const auto omega = descent_check(testkit::kt_omega_big(), gens);
    REQUIRE(omega.size() == 4);
    CHECK(omega[0].kind == DescentKind::invariant);
    CHECK(omega[1].kind == DescentKind::invariant);
    CHECK(omega[2].kind == DescentKind::fails);
    CHECK_FALSE(omega[2].residual.is_zero());
    CHECK(omega[3].kind == DescentKind::invariant);

    // The box model rescales uniformly: conformal with factor 1/e.
    const auto box = descent_check(testkit::box_model().form(), gens);
    CHECK(box[2].kind == DescentKind::conformal);
    REQUIRE(box[2].factor);
    CHECK(*box[2].factor == ExpScalar::exp_term(1, -1));
    CHECK(std::string(to_string(DescentKind::conformal)) == "conformal");
}

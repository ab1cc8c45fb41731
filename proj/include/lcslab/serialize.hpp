#pragma once

// JSON encodings of the exact types. Rationals travel as strings.

#include "lcslab/ce_cohomology.hpp"
#include "lcslab/coeff_fn.hpp"
#include "lcslab/exp_scalar.hpp"
#include "lcslab/forms.hpp"
#include "lcslab/rational.hpp"

#include <json.hpp>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lcslab {

using Json = nlohmann::ordered_json;

/// A schema violation, located by a JSON-pointer-like path.
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

namespace detail {

inline std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }
inline std::string child(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

inline const Json& require(const Json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(child(path, key), "missing required field");
    return *it;
}

inline void require_array(const Json& j, const std::string& path) {
    if (!j.is_array()) throw SchemaError(path, "expected an array");
}

inline long require_int(const Json& j, const std::string& path) {
    if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
    return j.get<long>();
}

inline double require_number(const Json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path, "expected a number");
    return j.get<double>();
}

}  // namespace detail

// Rational ------------------------------------------------------------------

inline Json to_json(const Rational& q) { return to_string(q); }

inline Rational rational_from_json(const Json& j, const std::string& path) {
    if (j.is_number_integer()) return Rational(j.get<long>());
    if (!j.is_string()) throw SchemaError(path, "expected a rational as a string");
    try {
        return parse_rational(j.get<std::string>());
    } catch (const std::exception& e) {
        throw SchemaError(path, e.what());
    }
}

inline RationalVector rational_vector_from_json(const Json& j, const std::string& path) {
    detail::require_array(j, path);
    RationalVector v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(rational_from_json(j[i], detail::child(path, i)));
    return v;
}

inline Json to_json(const RationalVector& v) {
    Json a = Json::array();
    for (const auto& q : v) a.push_back(to_json(q));
    return a;
}

// ExpScalar -----------------------------------------------------------------

inline Json to_json(const ExpScalar& s) {
    Json terms = Json::array();
    for (const auto& t : s.terms()) terms.push_back({{"q", to_string(t.q)}, {"r", to_string(t.r)}});
    return {{"terms", std::move(terms)}, {"float", s.to_double()}};
}

/// Accepts {"terms":[{"q":..,"r":..}]} (a "float" member is ignored) or a
/// plain rational.
inline ExpScalar exp_scalar_from_json(const Json& j, const std::string& path) {
    if (!j.is_object()) return ExpScalar(rational_from_json(j, path));
    const Json& terms = detail::require(j, "terms", path);
    const std::string tp = detail::child(path, "terms");
    detail::require_array(terms, tp);
    std::vector<ExpScalar::Term> out;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const std::string ip = detail::child(tp, i);
        out.push_back({rational_from_json(detail::require(terms[i], "q", ip), detail::child(ip, "q")),
                       rational_from_json(detail::require(terms[i], "r", ip), detail::child(ip, "r"))});
    }
    return ExpScalar::from_terms(std::move(out));
}

// CoeffFn -------------------------------------------------------------------

inline Json to_json(const CoeffFn& f) {
    Json a = Json::array();
    for (const auto& t : f.terms()) {
        Json term;
        term["q"] = t.coeff.is_rational() ? to_json(t.coeff.rational_value()) : to_json(t.coeff);
        term["powers"] = t.powers;
        term["k"] = to_json(RationalVector(t.slopes));
        a.push_back(std::move(term));
    }
    return a;
}

/// An array of terms {"q", "powers", "k"}; "powers" and "k" default to zero.
/// A bare rational or ExpScalar object is read as a constant.
inline CoeffFn coeff_fn_from_json(const Json& j, std::size_t n, const std::string& path) {
    if (!j.is_array()) return CoeffFn::constant(n, exp_scalar_from_json(j, path));
    std::vector<CoeffFn::Term> terms;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string ip = detail::child(path, i);
        if (!j[i].is_object()) throw SchemaError(ip, "expected a term object");
        CoeffFn::Term t{exp_scalar_from_json(detail::require(j[i], "q", ip), detail::child(ip, "q")),
                        std::vector<int>(n, 0), std::vector<Rational>(n, Rational(0))};
        if (auto it = j[i].find("powers"); it != j[i].end()) {
            const std::string pp = detail::child(ip, "powers");
            detail::require_array(*it, pp);
            if (it->size() != n) throw SchemaError(pp, "expected " + std::to_string(n) + " entries");
            for (std::size_t a = 0; a < n; ++a) {
                const long p = detail::require_int((*it)[a], detail::child(pp, a));
                if (p < 0) throw SchemaError(detail::child(pp, a), "negative power");
                t.powers[a] = static_cast<int>(p);
            }
        }
        if (auto it = j[i].find("k"); it != j[i].end()) {
            const std::string kp = detail::child(ip, "k");
            t.slopes = rational_vector_from_json(*it, kp);
            if (t.slopes.size() != n) throw SchemaError(kp, "expected " + std::to_string(n) + " entries");
        }
        terms.push_back(std::move(t));
    }
    return CoeffFn::from_terms(n, std::move(terms));
}

// Forms ---------------------------------------------------------------------

inline Json to_json(const Form& a) {
    Json out = Json::array();
    for (const auto& [idx, f] : a.components()) out.push_back({{"indices", idx}, {"coeff", to_json(f)}});
    return out;
}

/// Indices may be integers or coordinate names; they are sorted with the
/// permutation sign, and repeated indices contribute nothing.
inline Form form_from_json(const Json& j, std::size_t n, int degree, const std::vector<std::string>& coords,
                           const std::string& path) {
    detail::require_array(j, path);
    Form out(n, degree);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string ip = detail::child(path, i);
        const Json& idx = detail::require(j[i], "indices", ip);
        const std::string xp = detail::child(ip, "indices");
        detail::require_array(idx, xp);
        if (static_cast<int>(idx.size()) != degree)
            throw SchemaError(xp, "expected " + std::to_string(degree) + " indices");
        IndexTuple t;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const std::string kp = detail::child(xp, k);
            long v = -1;
            if (idx[k].is_string()) {
                for (std::size_t c = 0; c < coords.size(); ++c)
                    if (coords[c] == idx[k].get<std::string>()) v = static_cast<long>(c);
                if (v < 0) throw SchemaError(kp, "unknown coordinate '" + idx[k].get<std::string>() + "'");
            } else {
                v = detail::require_int(idx[k], kp);
            }
            if (v < 0 || static_cast<std::size_t>(v) >= n) throw SchemaError(kp, "index out of range");
            t.push_back(static_cast<int>(v));
        }
        out.add(std::move(t), coeff_fn_from_json(detail::require(j[i], "coeff", ip), n, detail::child(ip, "coeff")));
    }
    return out;
}

/// Infers the degree from the first entry; an empty array is the zero form of
/// the given fallback degree.
inline Form form_from_json(const Json& j, std::size_t n, const std::vector<std::string>& coords,
                           const std::string& path, int fallback_degree) {
    detail::require_array(j, path);
    int degree = fallback_degree;
    if (!j.empty() && j[0].is_object())
        if (auto it = j[0].find("indices"); it != j[0].end() && it->is_array()) degree = static_cast<int>(it->size());
    return form_from_json(j, n, degree, coords, path);
}

// Vector fields, affine maps, Lie algebras ----------------------------------

inline Json to_json(const VectorField& x) {
    Json a = Json::array();
    for (const auto& c : x.components()) a.push_back(to_json(c));
    return a;
}

inline VectorField vector_field_from_json(const Json& j, std::size_t n, const std::string& path) {
    detail::require_array(j, path);
    if (j.size() != n) throw SchemaError(path, "expected " + std::to_string(n) + " components");
    std::vector<CoeffFn> comps;
    for (std::size_t i = 0; i < n; ++i) comps.push_back(coeff_fn_from_json(j[i], n, detail::child(path, i)));
    return VectorField(std::move(comps));
}

inline Json to_json(const AffineMap& g) {
    Json a = Json::array();
    for (const auto& row : g.linear()) a.push_back(to_json(row));
    return {{"A", std::move(a)}, {"b", to_json(g.offset())}};
}

inline AffineMap affine_map_from_json(const Json& j, std::size_t n, const std::string& path) {
    const std::string ap = detail::child(path, "A");
    const Json& a = detail::require(j, "A", path);
    detail::require_array(a, ap);
    if (a.size() != n) throw SchemaError(ap, "expected " + std::to_string(n) + " rows");
    RationalMatrix m;
    for (std::size_t i = 0; i < n; ++i) {
        m.push_back(rational_vector_from_json(a[i], detail::child(ap, i)));
        if (m.back().size() != n) throw SchemaError(detail::child(ap, i), "expected " + std::to_string(n) + " entries");
    }
    RationalVector b = rational_vector_from_json(detail::require(j, "b", path), detail::child(path, "b"));
    if (b.size() != n) throw SchemaError(detail::child(path, "b"), "expected " + std::to_string(n) + " entries");
    try {
        return AffineMap(std::move(m), std::move(b));
    } catch (const std::exception& e) {
        throw SchemaError(path, e.what());
    }
}

inline Json to_json(const LieAlgebraSpec& g) {
    Json br = Json::array();
    for (const auto& b : g.brackets()) br.push_back({{"i", b.i}, {"j", b.j}, {"k", b.k}, {"c", to_string(b.c)}});
    return {{"dim", g.dimension()}, {"brackets", std::move(br)}};
}

inline LieAlgebraSpec lie_algebra_from_json(const Json& j, const std::string& path) {
    const long dim = detail::require_int(detail::require(j, "dim", path), detail::child(path, "dim"));
    if (dim < 1) throw SchemaError(detail::child(path, "dim"), "dimension must be positive");
    std::vector<LieAlgebraSpec::Bracket> brackets;
    if (auto it = j.find("brackets"); it != j.end()) {
        const std::string bp = detail::child(path, "brackets");
        detail::require_array(*it, bp);
        for (std::size_t q = 0; q < it->size(); ++q) {
            const std::string qp = detail::child(bp, q);
            const Json& e = (*it)[q];
            brackets.push_back({static_cast<int>(detail::require_int(detail::require(e, "i", qp), detail::child(qp, "i"))),
                                static_cast<int>(detail::require_int(detail::require(e, "j", qp), detail::child(qp, "j"))),
                                static_cast<int>(detail::require_int(detail::require(e, "k", qp), detail::child(qp, "k"))),
                                rational_from_json(detail::require(e, "c", qp), detail::child(qp, "c"))});
        }
    }
    try {
        return LieAlgebraSpec(static_cast<std::size_t>(dim), std::move(brackets));
    } catch (const std::exception& e) {
        throw SchemaError(path, e.what());
    }
}

}  // namespace lcslab

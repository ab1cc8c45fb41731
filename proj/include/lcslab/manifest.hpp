#pragma once

// Manifest parsing, job execution and report emission for the lcslab tool.

#include "lcslab/ce_cohomology.hpp"
#include "lcslab/dynamics.hpp"
#include "lcslab/forms.hpp"
#include "lcslab/lattice_hodge.hpp"
#include "lcslab/lcs.hpp"
#include "lcslab/serialize.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lcslab {

inline constexpr int kSchemaVersion = 1;

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Job {
    std::string type;
    // descent
    std::string target = "Omega";
    std::optional<Form> form;
    // flux, flux-vanishing, flow
    std::optional<Isotopy> field;
    std::optional<HamiltonianPath> field_hamiltonian;
    std::vector<std::string> backends{"primitive-search"};
    SearchBounds search;
    std::size_t lattice_n = 4;
    std::vector<std::vector<double>> points;
    std::size_t steps = 100;
    bool wrap = false;
    // calabi, hofer, energy-capacity
    std::optional<HamiltonianPath> hamiltonian;
    HoferMode mode = HoferMode::exact;
    int level = 3;
    // hodge
    std::size_t degree = 1;
    std::optional<std::size_t> resolution;
    std::optional<std::vector<double>> lattice_omega;
    bool iterative = false;
    std::size_t split_samples = 0;
    std::uint64_t seed = 1;
    // cohomology-ce
    std::optional<RationalVector> ce_omega;

    Json expect;  ///< optional expected result, checked when present
    Json claim;   ///< optional published value, echoed for comparison
};

struct Manifest {
    int schema_version = kSchemaVersion;
    std::string name;
    std::size_t dimension = 0;
    std::vector<std::string> coordinates;
    Form big_omega;
    Form omega;
    std::optional<CoeffFn> potential;
    std::vector<AffineMap> generators;
    std::optional<LieAlgebraSpec> lie_algebra;
    std::optional<RationalVector> lie_omega;  ///< default Lee form for the invariant complex
    std::vector<Form> coframe;
    std::size_t grid_resolution = 8;
    std::vector<Job> jobs;
};

inline const std::vector<std::string>& job_types() {
    static const std::vector<std::string> types{"validate", "volume", "descent", "cohomology-ce", "hodge", "flux",
                                                "calabi", "hofer", "energy-capacity", "flow", "flux-vanishing"};
    return types;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

using lcslab::to_json;

inline void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw SchemaError(child(path, it.key()), "unknown field");
}

inline std::size_t require_size(const Json& j, const std::string& path, std::size_t min = 0) {
    const long v = require_int(j, path);
    if (v < static_cast<long>(min)) throw SchemaError(path, "must be at least " + std::to_string(min));
    return static_cast<std::size_t>(v);
}

inline bool require_bool(const Json& j, const std::string& path) {
    if (!j.is_boolean()) throw SchemaError(path, "expected a boolean");
    return j.get<bool>();
}

inline std::vector<double> number_vector(const Json& j, std::size_t n, const std::string& path) {
    require_array(j, path);
    if (j.size() != n) throw SchemaError(path, "expected " + std::to_string(n) + " entries");
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(require_number(j[i], child(path, i)));
    return v;
}

inline bool is_path_literal(const Json& j) {
    return j.is_array() && !j.empty() && j[0].is_object() && j[0].contains("t_power");
}

inline HamiltonianPath path_from_json(const Json& j, std::size_t n, const std::string& path) {
    HamiltonianPath out{n, {}};
    if (!is_path_literal(j)) {
        out.coeffs.push_back(coeff_fn_from_json(j, n, path));
        return out;
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string ip = child(path, i);
        check_keys(j[i], {"t_power", "fn"}, ip);
        const std::size_t pw = require_size(require(j[i], "t_power", ip), child(ip, "t_power"));
        if (out.coeffs.size() <= pw) out.coeffs.resize(pw + 1, CoeffFn(n));
        out.coeffs[pw] += coeff_fn_from_json(require(j[i], "fn", ip), n, child(ip, "fn"));
    }
    return out;
}

inline Json to_json(const HamiltonianPath& p) {
    Json a = Json::array();
    for (std::size_t j = 0; j < p.coeffs.size(); ++j)
        if (!p.coeffs[j].is_zero()) a.push_back({{"t_power", j}, {"fn", lcslab::to_json(p.coeffs[j])}});
    return a;
}

/// {"components": [path, ...]} with one t-polynomial per coordinate.
inline Isotopy isotopy_from_json(const Json& j, std::size_t n, const std::string& path) {
    check_keys(j, {"components"}, path);
    const Json& comps = require(j, "components", path);
    const std::string cp = child(path, "components");
    require_array(comps, cp);
    if (comps.size() != n) throw SchemaError(cp, "expected " + std::to_string(n) + " components");
    std::vector<HamiltonianPath> per;
    std::size_t len = 1;
    for (std::size_t i = 0; i < n; ++i) {
        per.push_back(path_from_json(comps[i], n, child(cp, i)));
        len = std::max(len, per.back().coeffs.size());
    }
    Isotopy iso{n, std::vector<VectorField>(len, VectorField(n))};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < per[i].coeffs.size(); ++t) iso.coeffs[t][i] = per[i].coeffs[t];
    return iso;
}

inline Json to_json(const Isotopy& iso) {
    Json comps = Json::array();
    for (std::size_t i = 0; i < iso.n; ++i) {
        HamiltonianPath p{iso.n, {}};
        for (const auto& c : iso.coeffs) p.coeffs.push_back(c[i]);
        comps.push_back(to_json(p));
    }
    return {{"components", std::move(comps)}};
}

inline const char* to_string(HoferMode m) { return m == HoferMode::exact ? "exact" : "nonexact"; }

inline Job job_from_json(const Json& j, const Manifest& m, const std::string& path) {
    Job job;
    const Json& type = require(j, "type", path);
    if (!type.is_string()) throw SchemaError(child(path, "type"), "expected a string");
    job.type = type.get<std::string>();
    const auto& types = job_types();
    if (std::find(types.begin(), types.end(), job.type) == types.end())
        throw SchemaError(child(path, "type"), "unknown job type '" + job.type + "'");

    std::set<std::string> allowed{"type", "expect", "claim"};
    auto allow = [&](std::initializer_list<const char*> keys) {
        for (const char* k : keys) allowed.insert(k);
    };
    const std::size_t n = m.dimension;
    auto read_field = [&]() {
        if (auto it = j.find("hamiltonian"); it != j.end()) {
            if (j.contains("field")) throw SchemaError(child(path, "field"), "give either field or hamiltonian");
            job.field_hamiltonian = path_from_json(*it, n, child(path, "hamiltonian"));
        } else {
            job.field = isotopy_from_json(require(j, "field", path), n, child(path, "field"));
        }
    };

    if (job.type == "descent") {
        allow({"target", "form"});
        if (auto it = j.find("form"); it != j.end()) {
            job.target = "form";
            job.form = form_from_json(*it, n, m.coordinates, child(path, "form"), 0);
        } else if (auto t = j.find("target"); t != j.end()) {
            if (!t->is_string() || (*t != "Omega" && *t != "omega"))
                throw SchemaError(child(path, "target"), "expected \"Omega\" or \"omega\"");
            job.target = t->get<std::string>();
        }
    } else if (job.type == "cohomology-ce") {
        allow({"omega"});
        if (!m.lie_algebra) throw SchemaError(path, "cohomology-ce needs lie_algebra in the manifest");
        if (auto it = j.find("omega"); it != j.end()) {
            job.ce_omega = rational_vector_from_json(*it, child(path, "omega"));
            if (job.ce_omega->size() != m.lie_algebra->dimension())
                throw SchemaError(child(path, "omega"), "length must match the Lie algebra dimension");
        }
    } else if (job.type == "hodge") {
        allow({"p", "N", "omega", "iterative", "split_samples", "seed"});
        job.degree = require_size(require(j, "p", path), child(path, "p"));
        if (job.degree > n) throw SchemaError(child(path, "p"), "degree exceeds dimension");
        if (auto it = j.find("N"); it != j.end()) job.resolution = require_size(*it, child(path, "N"), 2);
        if (auto it = j.find("omega"); it != j.end()) job.lattice_omega = number_vector(*it, n, child(path, "omega"));
        if (auto it = j.find("iterative"); it != j.end()) job.iterative = require_bool(*it, child(path, "iterative"));
        if (auto it = j.find("split_samples"); it != j.end())
            job.split_samples = require_size(*it, child(path, "split_samples"));
        if (auto it = j.find("seed"); it != j.end()) job.seed = require_size(*it, child(path, "seed"));
    } else if (job.type == "flux" || job.type == "flux-vanishing") {
        allow({"field", "hamiltonian", "backends", "search", "lattice_N"});
        read_field();
        if (auto it = j.find("backends"); it != j.end()) {
            const std::string bp = child(path, "backends");
            require_array(*it, bp);
            job.backends.clear();
            for (std::size_t i = 0; i < it->size(); ++i) {
                const Json& b = (*it)[i];
                if (!b.is_string() || (b != "ce" && b != "primitive-search" && b != "lattice"))
                    throw SchemaError(child(bp, i), "expected one of ce, primitive-search, lattice");
                job.backends.push_back(b.get<std::string>());
            }
        }
        if (auto it = j.find("search"); it != j.end()) {
            const std::string sp = child(path, "search");
            check_keys(*it, {"degree", "slopes"}, sp);
            if (auto d = it->find("degree"); d != it->end()) job.search.degree = static_cast<int>(require_size(*d, child(sp, "degree")));
            if (auto k = it->find("slopes"); k != it->end()) job.search.slopes = rational_vector_from_json(*k, child(sp, "slopes"));
        }
        if (auto it = j.find("lattice_N"); it != j.end()) job.lattice_n = require_size(*it, child(path, "lattice_N"), 2);
    } else if (job.type == "calabi") {
        allow({"H"});
        job.hamiltonian = path_from_json(require(j, "H", path), n, child(path, "H"));
    } else if (job.type == "hofer" || job.type == "energy-capacity") {
        allow({"H", "level"});
        if (job.type == "hofer") allow({"mode"});
        job.hamiltonian = path_from_json(require(j, "H", path), n, child(path, "H"));
        if (auto it = j.find("level"); it != j.end()) job.level = static_cast<int>(require_size(*it, child(path, "level"), 1));
        if (auto it = j.find("mode"); it != j.end()) {
            if (*it == "exact") job.mode = HoferMode::exact;
            else if (*it == "nonexact") job.mode = HoferMode::nonexact;
            else throw SchemaError(child(path, "mode"), "expected \"exact\" or \"nonexact\"");
        }
    } else if (job.type == "flow") {
        allow({"field", "hamiltonian", "points", "steps", "wrap"});
        read_field();
        const Json& pts = require(j, "points", path);
        const std::string pp = child(path, "points");
        require_array(pts, pp);
        for (std::size_t i = 0; i < pts.size(); ++i) job.points.push_back(number_vector(pts[i], n, child(pp, i)));
        if (auto it = j.find("steps"); it != j.end()) job.steps = require_size(*it, child(path, "steps"), 1);
        if (auto it = j.find("wrap"); it != j.end()) job.wrap = require_bool(*it, child(path, "wrap"));
    }
    check_keys(j, allowed, path);
    if (auto it = j.find("expect"); it != j.end()) job.expect = *it;
    if (auto it = j.find("claim"); it != j.end()) job.claim = *it;
    return job;
}

inline Json job_to_json(const Job& job) {
    Json j;
    j["type"] = job.type;
    auto put_field = [&]() {
        if (job.field_hamiltonian) j["hamiltonian"] = to_json(*job.field_hamiltonian);
        else if (job.field) j["field"] = to_json(*job.field);
    };
    if (job.type == "descent") {
        if (job.form) j["form"] = lcslab::to_json(*job.form);
        else j["target"] = job.target;
    } else if (job.type == "cohomology-ce") {
        if (job.ce_omega) j["omega"] = lcslab::to_json(*job.ce_omega);
    } else if (job.type == "hodge") {
        j["p"] = job.degree;
        if (job.resolution) j["N"] = *job.resolution;
        if (job.lattice_omega) j["omega"] = *job.lattice_omega;
        j["iterative"] = job.iterative;
        j["split_samples"] = job.split_samples;
        j["seed"] = job.seed;
    } else if (job.type == "flux" || job.type == "flux-vanishing") {
        put_field();
        j["backends"] = job.backends;
        j["search"] = {{"degree", job.search.degree}, {"slopes", lcslab::to_json(job.search.slopes)}};
        j["lattice_N"] = job.lattice_n;
    } else if (job.type == "calabi") {
        j["H"] = to_json(*job.hamiltonian);
    } else if (job.type == "hofer" || job.type == "energy-capacity") {
        j["H"] = to_json(*job.hamiltonian);
        j["level"] = job.level;
        if (job.type == "hofer") j["mode"] = to_string(job.mode);
    } else if (job.type == "flow") {
        put_field();
        j["points"] = job.points;
        j["steps"] = job.steps;
        j["wrap"] = job.wrap;
    }
    if (!job.expect.is_null()) j["expect"] = job.expect;
    if (!job.claim.is_null()) j["claim"] = job.claim;
    return j;
}

}  // namespace detail

inline Manifest manifest_from_json(const Json& j) {
    const std::string root;
    detail::check_keys(j, {"schema_version", "name", "dimension", "coordinates", "structure", "generators",
                           "lie_algebra", "grid", "jobs"}, root);
    Manifest m;
    const long ver = detail::require_int(detail::require(j, "schema_version", root), "/schema_version");
    if (ver != kSchemaVersion)
        throw SchemaError("/schema_version", "unsupported version " + std::to_string(ver));
    m.schema_version = static_cast<int>(ver);
    if (auto it = j.find("name"); it != j.end()) {
        if (!it->is_string()) throw SchemaError("/name", "expected a string");
        m.name = it->get<std::string>();
    }
    m.dimension = detail::require_size(detail::require(j, "dimension", root), "/dimension", 1);
    if (m.dimension % 2 != 0) throw SchemaError("/dimension", "must be even");
    if (auto it = j.find("coordinates"); it != j.end()) {
        detail::require_array(*it, "/coordinates");
        if (it->size() != m.dimension) throw SchemaError("/coordinates", "expected one name per dimension");
        std::set<std::string> seen;
        for (std::size_t i = 0; i < it->size(); ++i) {
            if (!(*it)[i].is_string()) throw SchemaError("/coordinates/" + std::to_string(i), "expected a string");
            m.coordinates.push_back((*it)[i].get<std::string>());
            if (!seen.insert(m.coordinates.back()).second)
                throw SchemaError("/coordinates/" + std::to_string(i), "duplicate coordinate name");
        }
    } else {
        for (std::size_t i = 0; i < m.dimension; ++i) m.coordinates.push_back("x" + std::to_string(i));
    }

    const Json& st = detail::require(j, "structure", root);
    detail::check_keys(st, {"Omega", "omega", "h"}, "/structure");
    m.big_omega = form_from_json(detail::require(st, "Omega", "/structure"), m.dimension, 2, m.coordinates, "/structure/Omega");
    m.omega = form_from_json(detail::require(st, "omega", "/structure"), m.dimension, 1, m.coordinates, "/structure/omega");
    if (auto it = st.find("h"); it != st.end()) m.potential = coeff_fn_from_json(*it, m.dimension, "/structure/h");

    if (auto it = j.find("generators"); it != j.end()) {
        detail::require_array(*it, "/generators");
        for (std::size_t i = 0; i < it->size(); ++i)
            m.generators.push_back(affine_map_from_json((*it)[i], m.dimension, "/generators/" + std::to_string(i)));
    }
    if (auto it = j.find("lie_algebra"); it != j.end()) {
        detail::check_keys(*it, {"dim", "brackets", "omega", "coframe"}, "/lie_algebra");
        m.lie_algebra = lie_algebra_from_json(*it, "/lie_algebra");
        if (auto w = it->find("omega"); w != it->end()) {
            m.lie_omega = rational_vector_from_json(*w, "/lie_algebra/omega");
            if (m.lie_omega->size() != m.lie_algebra->dimension())
                throw SchemaError("/lie_algebra/omega", "length must match the Lie algebra dimension");
        }
        if (auto c = it->find("coframe"); c != it->end()) {
            detail::require_array(*c, "/lie_algebra/coframe");
            if (c->size() != m.lie_algebra->dimension())
                throw SchemaError("/lie_algebra/coframe", "expected one 1-form per basis element");
            for (std::size_t i = 0; i < c->size(); ++i)
                m.coframe.push_back(form_from_json((*c)[i], m.dimension, 1, m.coordinates,
                                                   "/lie_algebra/coframe/" + std::to_string(i)));
        }
    }
    if (auto it = j.find("grid"); it != j.end()) {
        detail::check_keys(*it, {"N"}, "/grid");
        m.grid_resolution = detail::require_size(detail::require(*it, "N", "/grid"), "/grid/N", 2);
    }
    const Json& jobs = detail::require(j, "jobs", root);
    detail::require_array(jobs, "/jobs");
    for (std::size_t i = 0; i < jobs.size(); ++i)
        m.jobs.push_back(detail::job_from_json(jobs[i], m, "/jobs/" + std::to_string(i)));
    return m;
}

/// Canonical JSON; parsing it back gives a structurally equal manifest.
inline Json manifest_to_json(const Manifest& m) {
    Json j;
    j["schema_version"] = m.schema_version;
    if (!m.name.empty()) j["name"] = m.name;
    j["dimension"] = m.dimension;
    j["coordinates"] = m.coordinates;
    Json st;
    st["Omega"] = to_json(m.big_omega);
    st["omega"] = to_json(m.omega);
    if (m.potential) st["h"] = to_json(*m.potential);
    j["structure"] = std::move(st);
    if (!m.generators.empty()) {
        Json g = Json::array();
        for (const auto& a : m.generators) g.push_back(to_json(a));
        j["generators"] = std::move(g);
    }
    if (m.lie_algebra) {
        Json la = to_json(*m.lie_algebra);
        if (m.lie_omega) la["omega"] = to_json(*m.lie_omega);
        if (!m.coframe.empty()) {
            Json cf = Json::array();
            for (const auto& e : m.coframe) cf.push_back(to_json(e));
            la["coframe"] = std::move(cf);
        }
        j["lie_algebra"] = std::move(la);
    }
    j["grid"] = {{"N", m.grid_resolution}};
    Json jobs = Json::array();
    for (const auto& job : m.jobs) jobs.push_back(detail::job_to_json(job));
    j["jobs"] = std::move(jobs);
    return j;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("error while reading " + path);
    return ss.str();
}

inline Manifest parse_manifest_text(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw SchemaError("line " + std::to_string(line) + ", column " + std::to_string(col), "malformed JSON");
    }
    return manifest_from_json(j);
}

inline Manifest parse_manifest(const std::string& path) { return parse_manifest_text(read_file(path)); }

// ---------------------------------------------------------------------------
// Execution

struct JobOutcome {
    Json result;
    double seconds = 0.0;
};

struct Report {
    std::vector<JobOutcome> jobs;
    std::vector<std::string> coordinates;

    bool all_pass() const {
        for (const auto& j : jobs)
            if (j.result.at("verdict") != "pass") return false;
        return true;
    }
};

namespace detail {

using lcslab::to_json;

class JobContext {
public:
    explicit JobContext(const Manifest& m) : m_(m) {
        try {
            l_ = LcsStructure::make(m.big_omega, m.omega, m.potential);
        } catch (const std::exception& e) {
            error_ = e.what();
        }
    }

    const Manifest& manifest() const { return m_; }

    const LcsStructure& structure() const {
        if (!l_) throw std::domain_error("structure is not a valid LCS structure: " + error_);
        return *l_;
    }

    Isotopy field(const Job& job) const {
        if (job.field) return *job.field;
        const auto& l = structure();
        Isotopy iso{m_.dimension, {}};
        for (const auto& h : job.field_hamiltonian->coeffs) {
            const auto s = hamiltonian_field(l, h);
            if (!s.symbolic) throw std::domain_error("Hamiltonian field has no closed form in the coefficient algebra");
            iso.coeffs.push_back(*s.field);
        }
        if (iso.coeffs.empty()) iso.coeffs.emplace_back(m_.dimension);
        return iso;
    }

    FluxOptions flux_options(const Job& job) const {
        FluxOptions o;
        o.backends = job.backends;
        o.search = job.search;
        o.generators = m_.generators;
        if (m_.lie_algebra && !m_.coframe.empty()) o.ce = CeContext{*m_.lie_algebra, m_.coframe};
        o.lattice.resolution = job.lattice_n;
        return o;
    }

    std::string text(const Form& f) const { return f.str(m_.coordinates); }
    std::string text(const CoeffFn& f) const { return f.str(m_.coordinates); }

private:
    const Manifest& m_;
    std::optional<LcsStructure> l_;
    std::string error_;
};

inline bool expectation_holds(const Job& job, const Json& actual) { return job.expect.is_null() || job.expect == actual; }

inline void attach_expect(Json& out, const Job& job, const Json& actual, bool& pass) {
    if (job.expect.is_null()) return;
    out["expected"] = job.expect;
    if (!expectation_holds(job, actual)) pass = false;
}

inline Json run_validate(const JobContext& cx) {
    const auto& m = cx.manifest();
    const auto rep = validate(m.big_omega, m.omega);
    const bool pass = rep.pass() && rep.nondegenerate;
    Json out;
    out["verdict"] = pass ? "pass" : "fail";
    out["closed_lee_form"] = is_closed(m.omega);
    out["nondegenerate"] = rep.nondegenerate;
    out["pfaffian_unit"] = rep.pfaffian_unit;
    out["closedness_residual"] = to_json(rep.closedness_residual);
    out["structure_residual"] = to_json(rep.structure_residual);
    out["structure_residual_text"] = cx.text(rep.structure_residual);
    if (!pass) out["residual"] = to_json(rep.structure_residual);
    return out;
}

inline Json run_volume(const JobContext& cx, const Job& job) {
    const auto& l = cx.structure();
    Json out;
    bool pass = true;
    out["volume"] = to_json(l.volume());
    out["volume_text"] = cx.text(l.volume());
    out["orientation"] = l.orientation();
    if (!job.expect.is_null()) {
        const Form want = form_from_json(job.expect, l.dimension(), static_cast<int>(l.dimension()),
                                         cx.manifest().coordinates, "/expect");
        out["expected"] = job.expect;
        pass = want == l.volume();
    }
    out["verdict"] = pass ? "pass" : "fail";
    return out;
}

inline Json run_descent(const JobContext& cx, const Job& job) {
    const auto& m = cx.manifest();
    const Form target = job.form ? *job.form : (job.target == "omega" ? m.omega : m.big_omega);
    Json gens = Json::array();
    Json kinds = Json::array();
    bool all = true;
    const auto res = descent_check(target, m.generators);
    for (std::size_t g = 0; g < res.size(); ++g) {
        Json r;
        r["generator"] = g;
        r["kind"] = to_string(res[g].kind);
        if (res[g].factor) r["factor"] = to_json(*res[g].factor);
        else {
            r["residual"] = to_json(res[g].residual);
            r["residual_text"] = cx.text(res[g].residual);
        }
        kinds.push_back(to_string(res[g].kind));
        if (res[g].kind == DescentKind::fails) all = false;
        gens.push_back(std::move(r));
    }
    Json out;
    out["target"] = job.target;
    out["generators"] = std::move(gens);
    bool pass = job.expect.is_null() ? all : true;
    attach_expect(out, job, kinds, pass);
    out["verdict"] = pass ? "pass" : "fail";
    return out;
}

inline Json run_cohomology(const JobContext& cx, const Job& job) {
    const auto& m = cx.manifest();
    const auto& g = *m.lie_algebra;
    RationalVector w;
    std::string source;
    if (job.ce_omega) {
        w = *job.ce_omega;
        source = "job";
    } else if (m.lie_omega) {
        w = *m.lie_omega;
        source = "lie_algebra";
    } else if (!m.coframe.empty()) {
        auto c = express_in_coframe(m.omega, m.coframe);
        if (!c) throw std::domain_error("Lee form is not an invariant combination of the coframe");
        w = *c;
        source = "structure";
    } else {
        w.assign(g.dimension(), Rational(0));
        source = "zero";
    }
    const auto cx_w = CeComplex::build(g, w);
    RationalVector neg;
    for (const auto& q : w) neg.push_back(-q);
    const auto b = betti(cx_w);
    const auto b_dual = betti(CeComplex::build(g, neg));
    bool duality = true;
    for (std::size_t p = 0; p < b.size(); ++p) duality = duality && b[p] == b_dual[b.size() - 1 - p];
    const long chi = euler_characteristic(b);
    bool pass = duality && chi == 0;
    Json out;
    out["omega"] = to_json(w);
    out["omega_source"] = source;
    out["betti"] = b;
    out["euler_characteristic"] = chi;
    out["poincare_duality"] = duality;
    attach_expect(out, job, Json(b), pass);
    out["verdict"] = pass ? "pass" : "fail";
    return out;
}

/// Uniform in [-1, 1) from raw generator bits, identical across standard libraries.
inline double unit_random(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

inline Json run_hodge(const JobContext& cx, const Job& job) {
    const auto& m = cx.manifest();
    const std::size_t n = m.dimension;
    std::vector<double> w;
    if (job.lattice_omega) {
        w = *job.lattice_omega;
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const CoeffFn c = m.omega.coefficient({static_cast<int>(i)});
            if (!c.is_constant()) throw std::domain_error("lattice needs a constant Lee form; pass omega explicitly");
            w.push_back(c.constant_value().to_double());
        }
    }
    const Grid grid(n, job.resolution.value_or(m.grid_resolution));
    const auto ops = build_operators(grid, w);
    HarmonicOptions opt;
    opt.iterative = job.iterative;
    const std::size_t dim = harmonic_dim(ops, job.degree, opt);
    Json out;
    out["p"] = job.degree;
    out["N"] = grid.resolution();
    out["omega"] = w;
    out["harmonic_dim"] = dim;
    bool pass = true;
    if (job.split_samples > 0) {
        std::mt19937_64 rng(job.seed);
        double recon = 0.0, orth = 0.0, lap = 0.0;
        bool converged = true;
        const std::size_t size = grid.cell_count(job.degree);
        for (std::size_t s = 0; s < job.split_samples; ++s) {
            Cochain a{job.degree, Eigen::VectorXd(static_cast<Eigen::Index>(size))};
            for (Eigen::Index i = 0; i < a.values.size(); ++i) a.values[i] = unit_random(rng);
            const auto sp = hodge_split(ops, a);
            const double na = ops.norm(a.values);
            const Eigen::VectorXd r = a.values - sp.exact_part - sp.coexact_part - sp.harmonic.values;
            recon = std::max(recon, ops.norm(r) / na);
            orth = std::max({orth, std::abs(ops.inner(sp.exact_part, sp.coexact_part)) / (na * na),
                             std::abs(ops.inner(sp.exact_part, sp.harmonic.values)) / (na * na),
                             std::abs(ops.inner(sp.coexact_part, sp.harmonic.values)) / (na * na)});
            lap = std::max(lap, ops.norm(ops.laplacian(job.degree) * sp.harmonic.values) / na);
            converged = converged && sp.converged;
        }
        out["split_samples"] = job.split_samples;
        out["max_reconstruction_residual"] = recon;
        out["max_orthogonality_residual"] = orth;
        out["max_harmonic_laplacian"] = lap;
        out["cg_converged"] = converged;
        pass = recon < 1e-8 && orth < 1e-8 && converged;
    }
    attach_expect(out, job, Json(dim), pass);
    out["verdict"] = pass ? "pass" : "fail";
    return out;
}

inline Json verdicts_to_json(const JobContext& cx, const std::vector<BackendVerdict>& vs) {
    Json a = Json::array();
    for (const auto& v : vs) {
        Json r;
        r["backend"] = v.backend;
        r["verdict"] = to_string(v.verdict);
        r["bounds"] = v.bounds;
        if (v.primitive) {
            r["primitive"] = to_json(*v.primitive);
            r["primitive_text"] = cx.text(*v.primitive);
        }
        if (v.backend == "lattice" && v.verdict != Verdict::not_applicable) r["harmonic_magnitude"] = v.harmonic_magnitude;
        if (!v.note.empty()) r["note"] = v.note;
        a.push_back(std::move(r));
    }
    return a;
}

inline void put_flux(Json& out, const JobContext& cx, const FluxResult& f) {
    out["flux"] = to_json(f.form);
    out["flux_text"] = cx.text(f.form);
    out["closed"] = f.closed;
    out["strict"] = f.strict;
    Json ts = Json::array();
    for (const auto& t : f.checked_times) ts.push_back(to_json(t));
    out["strictness_times"] = std::move(ts);
    out["warnings"] = f.warnings;
    out["class_verdicts"] = verdicts_to_json(cx, f.verdicts);
}

inline Json run_flux(const JobContext& cx, const Job& job) {
    const auto& l = cx.structure();
    const auto f = flux(l, cx.field(job), cx.flux_options(job));
    Json out;
    put_flux(out, cx, f);
    bool pass = f.closed;
    if (!job.expect.is_null()) {
        out["expected"] = job.expect;
        pass = pass && form_from_json(job.expect, l.dimension(), 1, cx.manifest().coordinates, "/expect") == f.form;
    }
    out["verdict"] = pass ? "pass" : "fail";
    return out;
}

inline Json run_flux_vanishing(const JobContext& cx, const Job& job) {
    const auto v = flux_vanishing_test(cx.structure(), cx.field(job), cx.flux_options(job));
    Json out;
    const std::string result = v.vanishes ? "vanishes" : "obstructed up to search bounds";
    out["result"] = result;
    if (v.primitive) {
        out["primitive"] = to_json(*v.primitive);
        out["primitive_text"] = cx.text(*v.primitive);
        out["witness_backend"] = v.witness_backend;
    }
    put_flux(out, cx, v.flux);
    bool pass = v.flux.closed;
    attach_expect(out, job, Json(result), pass);
    out["verdict"] = pass ? "pass" : "fail";
    return out;
}

inline Json run_calabi(const JobContext& cx, const Job& job) {
    const ExpScalar c = calabi(cx.structure(), *job.hamiltonian);
    Json out;
    out["calabi"] = to_json(c);
    out["calabi_text"] = c.str();
    bool pass = true;
    if (!job.expect.is_null()) {
        out["expected"] = job.expect;
        pass = exp_scalar_from_json(job.expect, "/expect") == c;
    }
    out["verdict"] = pass ? "pass" : "fail";
    return out;
}

inline Json run_hofer(const JobContext& cx, const Job& job) {
    const auto r = hofer_energy(cx.structure(), *job.hamiltonian, job.mode, job.level);
    Json out;
    out["mode"] = to_string(job.mode);
    out["energy"] = r.energy;
    out["lower_bound"] = true;
    out["level"] = r.level;
    out["grid_points_per_axis"] = (1 << r.level) + 1;
    out["verdict"] = "pass";
    return out;
}

inline Json run_energy_capacity(const JobContext& cx, const Job& job) {
    const auto r = energy_capacity_check(cx.structure(), *job.hamiltonian, job.level);
    Json out;
    out["calabi_abs"] = r.calabi_abs;
    out["volume"] = r.volume;
    out["energy"] = r.energy;
    out["volume_times_energy"] = r.rhs;
    out["slack"] = kEnergyCapacitySlack;
    out["holds"] = r.holds;
    out["level"] = job.level;
    out["verdict"] = r.holds ? "pass" : "fail";
    return out;
}

inline Json run_flow(const JobContext& cx, const Job& job) {
    const auto r = flow(cx.field(job), job.points, job.steps, job.wrap);
    Json out;
    out["steps"] = job.steps;
    out["wrap"] = job.wrap;
    out["endpoints"] = r.endpoints;
    bool blew = std::any_of(r.blew_up.begin(), r.blew_up.end(), [](bool b) { return b; });
    out["blew_up"] = r.blew_up;
    out["verdict"] = blew ? "fail" : "pass";
    return out;
}

inline Json run_job(const JobContext& cx, const Job& job) {
    if (job.type == "validate") return run_validate(cx);
    if (job.type == "volume") return run_volume(cx, job);
    if (job.type == "descent") return run_descent(cx, job);
    if (job.type == "cohomology-ce") return run_cohomology(cx, job);
    if (job.type == "hodge") return run_hodge(cx, job);
    if (job.type == "flux") return run_flux(cx, job);
    if (job.type == "flux-vanishing") return run_flux_vanishing(cx, job);
    if (job.type == "calabi") return run_calabi(cx, job);
    if (job.type == "hofer") return run_hofer(cx, job);
    if (job.type == "energy-capacity") return run_energy_capacity(cx, job);
    if (job.type == "flow") return run_flow(cx, job);
    throw std::invalid_argument("unknown job type " + job.type);
}

}  // namespace detail

/// Runs the jobs in order. A job that throws is reported with verdict
/// "error" and does not stop the others.
inline Report execute(const Manifest& m) {
    Report rep;
    rep.coordinates = m.coordinates;
    const detail::JobContext cx(m);
    for (std::size_t i = 0; i < m.jobs.size(); ++i) {
        const Job& job = m.jobs[i];
        Json head;
        head["index"] = i;
        head["type"] = job.type;
        const auto t0 = std::chrono::steady_clock::now();
        Json body;
        try {
            body = detail::run_job(cx, job);
        } catch (const std::exception& e) {
            body = Json::object();
            body["verdict"] = "error";
            body["error"] = e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        head["verdict"] = body["verdict"];
        for (auto it = body.begin(); it != body.end(); ++it)
            if (it.key() != "verdict") head[it.key()] = it.value();
        if (!job.claim.is_null()) head["published_claim"] = job.claim;
        rep.jobs.push_back({std::move(head), secs});
    }
    return rep;
}

enum class ReportFormat { json, text };

/// JSON output carries no timings so that it is byte-stable.
inline std::string emit_report(const Report& rep, ReportFormat fmt) {
    if (fmt == ReportFormat::json) {
        Json jobs = Json::array();
        for (const auto& j : rep.jobs) jobs.push_back(j.result);
        Json out;
        out["jobs"] = std::move(jobs);
        return out.dump();
    }
    std::ostringstream os;
    std::size_t passed = 0;
    for (const auto& j : rep.jobs) {
        const auto& r = j.result;
        std::string v = r.at("verdict").get<std::string>();
        if (v == "pass") ++passed;
        std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        os << "[" << v << "] #" << r.at("index").get<std::size_t>() << " " << r.at("type").get<std::string>() << " ("
           << std::fixed << std::setprecision(3) << j.seconds << " s)\n";
        os.unsetf(std::ios::floatfield);
        for (auto it = r.begin(); it != r.end(); ++it) {
            const std::string& k = it.key();
            if (k == "index" || k == "type" || k == "verdict") continue;
            const Json& val = it.value();
            // Long literal encodings are skipped when a rendered *_text twin exists.
            if (r.contains(k + "_text")) continue;
            auto clip = [](std::string s) { return s.size() > 200 ? s.substr(0, 197) + "..." : s; };
            if (val.is_array() && !val.empty() && val[0].is_object()) {
                os << "    " << k << ":\n";
                for (const auto& e : val) os << "      " << clip(e.dump()) << "\n";
                continue;
            }
            os << "    " << k << ": " << clip(val.is_string() ? val.get<std::string>() : val.dump()) << "\n";
        }
    }
    os << passed << "/" << rep.jobs.size() << " jobs passed\n";
    return os.str();
}

}  // namespace lcslab

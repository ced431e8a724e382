#pragma once

// Run configuration: JSON in, JSON out.  Unknown fields are rejected so that a
// misspelled key cannot silently fall back to a default.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "json.hpp"
#include "vim/coeffs.hpp"
#include "vim/errors.hpp"

namespace vim {

struct AnalysisConfig {
    double tol = 1e-10;
    double domain_cap = 1e4;
    friend bool operator==(const AnalysisConfig&, const AnalysisConfig&) = default;
};

struct McConfig {
    std::uint64_t seed = 0;
    std::size_t n_paths = 1000;
    double dt = 1e-3;
    double horizon = 10.0;
    unsigned threads = 1;
    friend bool operator==(const McConfig&, const McConfig&) = default;
};

struct ExcursionConfig {
    std::vector<double> epsilon{0.4, 0.2, 0.1, 0.05};
    double start_eps_factor = 1e-3;
    int retry_cap = 100;
    friend bool operator==(const ExcursionConfig&, const ExcursionConfig&) = default;
};

struct TreeConfig {
    double x0 = 1.0;
    std::size_t node_cap = 1'000'000;
    std::optional<double> delta;  ///< defaults to 1e-3 x0
    [[nodiscard]] double delta_or_default() const { return delta.value_or(1e-3 * x0); }
    friend bool operator==(const TreeConfig&, const TreeConfig&) = default;
};

struct OutputConfig {
    std::string directory = "out";
    friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct RunConfig {
    CoefficientSet::Family model = LogisticFeller{};
    AnalysisConfig analysis;
    McConfig mc;
    ExcursionConfig excursion;
    TreeConfig tree;
    OutputConfig outputs;

    [[nodiscard]] CoefficientSet coefficients() const { return CoefficientSet(model, analysis.domain_cap); }
};

inline bool operator==(const LogisticFeller& a, const LogisticFeller& b) {
    return a.kappa == b.kappa && a.gamma == b.gamma && a.K == b.K && a.beta == b.beta;
}
inline bool operator==(const PowerLaw& a, const PowerLaw& b) {
    return a.c1 == b.c1 && a.c2 == b.c2 && a.c3 == b.c3 && a.c4 == b.c4 && a.k1 == b.k1 && a.k2 == b.k2 && a.k3 == b.k3;
}
inline bool operator==(const Tabulated& a, const Tabulated& b) {
    return a.y == b.y && a.a == b.a && a.h == b.h && a.g == b.g && a.c1 == b.c1 && a.c2 == b.c2;
}
inline bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.model == b.model && a.analysis == b.analysis && a.mc == b.mc && a.excursion == b.excursion &&
           a.tree == b.tree && a.outputs == b.outputs;
}

namespace config_detail {

using nlohmann::json;

/// Doubles as JSON numbers; non-finite values as the strings "inf", "-inf", "nan".
inline json number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline double to_double(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw ConfigError(where + ": expected a number");
}

inline void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [k, v] : j.items()) {
        bool known = false;
        for (const char* allowed : keys) known = known || k == allowed;
        if (!known) throw ConfigError(where + ": unknown field '" + k + "'");
    }
}

inline void read(const json& j, const std::string& where, const char* key, double& out) {
    if (j.contains(key)) out = to_double(j.at(key), where + "." + key);
}

template <class T>
    requires std::is_integral_v<T>
void read(const json& j, const std::string& where, const char* key, T& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (std::is_unsigned_v<T> ? !v.is_number_unsigned() : !v.is_number_integer())
        throw ConfigError(where + "." + key + ": expected " + (std::is_unsigned_v<T> ? "a non-negative integer" : "an integer"));
    out = v.get<T>();
}

inline void read(const json& j, const std::string& where, const char* key, std::vector<double>& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array()) throw ConfigError(where + "." + key + ": expected an array");
    out.clear();
    for (const auto& x : v) out.push_back(to_double(x, where + "." + key));
}

inline json vec(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

inline json model_to_json(const CoefficientSet::Family& f) {
    return std::visit(
        [](const auto& m) -> json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LogisticFeller>)
                return {{"family", "LogisticFeller"}, {"kappa", number(m.kappa)}, {"gamma", number(m.gamma)},
                        {"K", number(m.K)}, {"beta", number(m.beta)}};
            else if constexpr (std::is_same_v<T, PowerLaw>)
                return {{"family", "PowerLaw"}, {"c1", number(m.c1)}, {"c2", number(m.c2)}, {"c3", number(m.c3)},
                        {"c4", number(m.c4)}, {"k1", number(m.k1)}, {"k2", number(m.k2)}, {"k3", number(m.k3)}};
            else
                return {{"family", "Tabulated"}, {"y", vec(m.y)}, {"a", vec(m.a)}, {"h", vec(m.h)}, {"g", vec(m.g)},
                        {"c1", number(m.c1)}, {"c2", number(m.c2)}};
        },
        f);
}

inline CoefficientSet::Family model_from_json(const json& j) {
    if (!j.is_object() || !j.contains("family") || !j.at("family").is_string())
        throw ConfigError("model.family: required string");
    const auto fam = j.at("family").get<std::string>();
    const std::string w = "model";
    if (fam == "LogisticFeller") {
        only_keys(j, w, {"family", "kappa", "gamma", "K", "beta"});
        LogisticFeller m;
        read(j, w, "kappa", m.kappa);
        read(j, w, "gamma", m.gamma);
        read(j, w, "K", m.K);
        read(j, w, "beta", m.beta);
        return m;
    }
    if (fam == "PowerLaw") {
        only_keys(j, w, {"family", "c1", "c2", "c3", "c4", "k1", "k2", "k3"});
        PowerLaw m;
        read(j, w, "c1", m.c1);
        read(j, w, "c2", m.c2);
        read(j, w, "c3", m.c3);
        read(j, w, "c4", m.c4);
        read(j, w, "k1", m.k1);
        read(j, w, "k2", m.k2);
        read(j, w, "k3", m.k3);
        return m;
    }
    if (fam == "Tabulated") {
        only_keys(j, w, {"family", "y", "a", "h", "g", "c1", "c2"});
        Tabulated m;
        read(j, w, "y", m.y);
        read(j, w, "a", m.a);
        read(j, w, "h", m.h);
        read(j, w, "g", m.g);
        read(j, w, "c1", m.c1);
        read(j, w, "c2", m.c2);
        return m;
    }
    throw ConfigError("model.family: unknown family '" + fam + "'");
}

}  // namespace config_detail

inline nlohmann::json to_json(const RunConfig& c) {
    using namespace config_detail;
    json j;
    j["model"] = model_to_json(c.model);
    j["analysis"] = {{"tol", number(c.analysis.tol)}, {"domain_cap", number(c.analysis.domain_cap)}};
    j["mc"] = {{"seed", c.mc.seed}, {"n_paths", c.mc.n_paths}, {"dt", number(c.mc.dt)},
               {"horizon", number(c.mc.horizon)}, {"threads", c.mc.threads}};
    j["excursion"] = {{"epsilon", vec(c.excursion.epsilon)},
                      {"start_eps_factor", number(c.excursion.start_eps_factor)},
                      {"retry_cap", c.excursion.retry_cap}};
    j["tree"] = {{"x0", number(c.tree.x0)}, {"node_cap", c.tree.node_cap}};
    if (c.tree.delta) j["tree"]["delta"] = number(*c.tree.delta);
    j["outputs"] = {{"directory", c.outputs.directory}};
    return j;
}

/// Checks the invariants that parsing alone cannot.
inline void validate(const RunConfig& c) {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    require(c.analysis.tol > 0.0 && c.analysis.tol < 1.0, "analysis.tol must be in (0, 1)");
    require(std::isfinite(c.analysis.domain_cap) && c.analysis.domain_cap > 0.0, "analysis.domain_cap must be positive and finite");
    require(c.mc.n_paths > 0, "mc.n_paths must be positive");
    require(std::isfinite(c.mc.dt) && c.mc.dt > 0.0, "mc.dt must be positive");
    require(std::isfinite(c.mc.horizon) && c.mc.horizon > 0.0, "mc.horizon must be positive");
    require(!c.excursion.epsilon.empty(), "excursion.epsilon must not be empty");
    for (std::size_t i = 0; i < c.excursion.epsilon.size(); ++i) {
        require(c.excursion.epsilon[i] > 0.0 && std::isfinite(c.excursion.epsilon[i]), "excursion.epsilon entries must be positive");
        if (i > 0) require(c.excursion.epsilon[i] < c.excursion.epsilon[i - 1], "excursion.epsilon must be strictly decreasing");
    }
    require(c.excursion.start_eps_factor > 0.0 && c.excursion.start_eps_factor < 1.0, "excursion.start_eps_factor must be in (0, 1)");
    require(c.excursion.retry_cap >= 1, "excursion.retry_cap must be >= 1");
    require(c.tree.x0 >= 0.0 && std::isfinite(c.tree.x0), "tree.x0 must be >= 0");
    require(c.tree.node_cap >= 1, "tree.node_cap must be >= 1");
    if (c.tree.delta) require(*c.tree.delta >= 0.0, "tree.delta must be >= 0");
    require(!c.outputs.directory.empty(), "outputs.directory must not be empty");
    try {
        (void)c.coefficients();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

/// Parses and validates.  mc.seed is mandatory.
inline RunConfig parse_config(const nlohmann::json& j) {
    using namespace config_detail;
    only_keys(j, "config", {"model", "analysis", "mc", "excursion", "tree", "outputs"});
    if (!j.contains("model")) throw ConfigError("model: required");
    if (!j.contains("mc") || !j.at("mc").is_object() || !j.at("mc").contains("seed"))
        throw ConfigError("mc.seed: required (no entropy default)");
    RunConfig c;
    c.model = model_from_json(j.at("model"));
    if (j.contains("analysis")) {
        const auto& a = j.at("analysis");
        only_keys(a, "analysis", {"tol", "domain_cap"});
        read(a, "analysis", "tol", c.analysis.tol);
        read(a, "analysis", "domain_cap", c.analysis.domain_cap);
    }
    const auto& m = j.at("mc");
    only_keys(m, "mc", {"seed", "n_paths", "dt", "horizon", "threads"});
    read(m, "mc", "seed", c.mc.seed);
    read(m, "mc", "n_paths", c.mc.n_paths);
    read(m, "mc", "dt", c.mc.dt);
    read(m, "mc", "horizon", c.mc.horizon);
    read(m, "mc", "threads", c.mc.threads);
    if (j.contains("excursion")) {
        const auto& e = j.at("excursion");
        only_keys(e, "excursion", {"epsilon", "start_eps_factor", "retry_cap"});
        read(e, "excursion", "epsilon", c.excursion.epsilon);
        read(e, "excursion", "start_eps_factor", c.excursion.start_eps_factor);
        read(e, "excursion", "retry_cap", c.excursion.retry_cap);
    }
    if (j.contains("tree")) {
        const auto& t = j.at("tree");
        only_keys(t, "tree", {"x0", "node_cap", "delta"});
        read(t, "tree", "x0", c.tree.x0);
        read(t, "tree", "node_cap", c.tree.node_cap);
        if (t.contains("delta")) c.tree.delta = to_double(t.at("delta"), "tree.delta");
    }
    if (j.contains("outputs")) {
        const auto& o = j.at("outputs");
        only_keys(o, "outputs", {"directory"});
        if (o.contains("directory")) {
            if (!o.at("directory").is_string()) throw ConfigError("outputs.directory: expected a string");
            c.outputs.directory = o.at("directory").get<std::string>();
        }
    }
    validate(c);
    return c;
}

inline RunConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

}  // namespace vim

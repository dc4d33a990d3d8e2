#pragma once

// JSON run configuration: one measure space, named spaces, operators and
// vector measures, a search budget and per-checker instances.

#include "latticelab/theorems.hpp"

#include "json.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace latticelab {

class ConfigError : public Error {
  public:
    using Error::Error;
};

struct RunConfig {
    std::shared_ptr<const MeasureSpace> space;
    std::map<std::string, SpaceExpr> spaces;
    std::map<std::string, Operator> operators;
    std::map<std::string, VectorMeasure> measures;
    Budget budget;
    /// The document fixed the seed (otherwise LATTICELAB_SEED may).
    bool seed_set = false;
    std::size_t samples = 20;
    Tolerances tol;
    /// Checker instances by id.
    nlohmann::json checks = nlohmann::json::object();

    const SpaceExpr& space_named(const std::string& name) const {
        auto it = spaces.find(name);
        if (it == spaces.end())
            throw ConfigError("unknown space '" + name + "'");
        return it->second;
    }
    const Operator& operator_named(const std::string& name) const {
        auto it = operators.find(name);
        if (it == operators.end())
            throw ConfigError("unknown operator '" + name + "'");
        return it->second;
    }
    const VectorMeasure& measure_named(const std::string& name) const {
        auto it = measures.find(name);
        if (it == measures.end())
            throw ConfigError("unknown measure '" + name + "'");
        return it->second;
    }
};

namespace detail {

using nlohmann::json;

/// A number, or the string "inf".
inline double extended_number(const json& j, const std::string& what) {
    if (j.is_number())
        return j.get<double>();
    if (j.is_string() && (j.get<std::string>() == "inf" || j.get<std::string>() == "infinity"))
        return inf;
    throw ConfigError(what + ": expected a number or \"inf\"");
}

inline const json& field(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key))
        throw ConfigError(where + ": missing field '" + key + "'");
    return j.at(key);
}

inline std::vector<double> weight_list(const json& j, const std::string& where) {
    if (!j.is_array())
        throw ConfigError(where + ": weights must be an array");
    std::vector<double> w;
    for (const auto& v : j)
        w.push_back(extended_number(v, where));
    return w;
}

inline NormedCodomain parse_codomain(const json& j, std::optional<std::size_t> dim, const std::string& where) {
    const double s = extended_number(field(j, "l", where), where + ".l");
    std::size_t d = 0;
    if (j.contains("dim"))
        d = j.at("dim").get<std::size_t>();
    else if (dim)
        d = *dim;
    else
        throw ConfigError(where + ": codomain dimension missing");
    if (dim && d != *dim)
        throw ConfigError(where + ": codomain dimension " + std::to_string(d) + " does not match " +
                          std::to_string(*dim));
    return NormedCodomain(d, s);
}

class SpaceParser {
  public:
    SpaceParser(const RunConfig& cfg, const json& decls) : cfg_(cfg), decls_(decls) {}

    SpaceExpr named(const std::string& name) {
        if (auto it = done_.find(name); it != done_.end())
            return it->second;
        if (auto it = cfg_.spaces.find(name); it != cfg_.spaces.end())
            return it->second;
        if (!decls_.is_object() || !decls_.contains(name))
            throw ConfigError("unresolved space name '" + name + "'");
        if (!active_.insert(name).second)
            throw ConfigError("space '" + name + "' refers to itself");
        SpaceExpr x = parse(decls_.at(name), "spaces." + name);
        active_.erase(name);
        done_.emplace(name, x);
        return x;
    }

    SpaceExpr parse(const json& j, const std::string& where) {
        if (j.is_string())
            return named(j.get<std::string>());
        if (!j.is_object())
            throw ConfigError(where + ": a space is an object or a name");
        if (j.contains("ref"))
            return named(j.at("ref").get<std::string>());
        const std::string kind = field(j, "kind", where).get<std::string>();
        if (kind == "lp") {
            std::optional<std::vector<double>> w;
            if (j.contains("weights"))
                w = weight_list(j.at("weights"), where + ".weights");
            return SpaceExpr::lp(cfg_.space, extended_number(field(j, "p", where), where + ".p"), w);
        }
        if (kind == "power")
            return SpaceExpr::power(parse(field(j, "base", where), where + ".base"),
                                    extended_number(field(j, "p", where), where + ".p"));
        if (kind == "sum")
            return SpaceExpr::sum(parse(field(j, "left", where), where + ".left"),
                                  parse(field(j, "right", where), where + ".right"));
        if (kind == "intersection")
            return SpaceExpr::intersection(parse(field(j, "left", where), where + ".left"),
                                           parse(field(j, "right", where), where + ".right"));
        if (kind == "core")
            return SpaceExpr::core(parse(field(j, "base", where), where + ".base"),
                                   extended_number(field(j, "q", where), where + ".q"));
        if (kind == "l1m")
            return SpaceExpr::l1m(cfg_.space, cfg_.measure_named(field(j, "measure", where).get<std::string>()));
        if (kind == "lpm")
            return SpaceExpr::lpm(cfg_.space, cfg_.measure_named(field(j, "measure", where).get<std::string>()),
                                  extended_number(field(j, "p", where), where + ".p"));
        throw ConfigError(where + ": unknown space kind '" + kind + "'");
    }

  private:
    const RunConfig& cfg_;
    const json& decls_;
    std::map<std::string, SpaceExpr> done_;
    std::set<std::string> active_;
};

/// {"matrix": [[...]], "domain": space, "codomain": {"l": s}}
inline Operator parse_operator(const RunConfig& cfg, const json& oj, const std::string& where) {
    static const json no_decls = json::object();
    SpaceParser parser(cfg, no_decls);
    auto mat = field(oj, "matrix", where).get<std::vector<std::vector<double>>>();
    SpaceExpr dom = parser.parse(field(oj, "domain", where), where + ".domain");
    const auto cod = parse_codomain(field(oj, "codomain", where), mat.size(), where + ".codomain");
    return Operator(std::move(mat), std::move(dom), cod);
}

/// A space given by name or inline.
inline SpaceExpr parse_space(const RunConfig& cfg, const json& j, const std::string& where) {
    static const json no_decls = json::object();
    SpaceParser parser(cfg, no_decls);
    return parser.parse(j, where);
}

} // namespace detail

/// Build a RunConfig from a parsed document. Library errors raised while
/// building (bad exponents, dimension mismatches) surface as ConfigError.
inline RunConfig load_config(const nlohmann::json& doc) {
    using detail::field;
    RunConfig cfg;
    try {
        if (!doc.is_object())
            throw ConfigError("configuration must be a JSON object");
        cfg.space = std::make_shared<const MeasureSpace>(
            detail::weight_list(field(field(doc, "measure", "config"), "weights", "measure"), "measure.weights"));
        const std::size_t n = cfg.space->size();

        if (doc.contains("measures"))
            for (const auto& [name, mj] : doc.at("measures").items()) {
                const std::string where = "measures." + name;
                const auto& atoms = field(mj, "atoms", where);
                if (!atoms.is_array() || atoms.size() != n)
                    throw ConfigError(where + ": needs one entry per atom (" + std::to_string(n) + ")");
                std::optional<std::size_t> dim;
                std::vector<std::optional<FnVec>> values;
                for (const auto& a : atoms) {
                    if (a.is_null()) {
                        values.emplace_back();
                        continue;
                    }
                    values.emplace_back(a.get<FnVec>());
                    dim = values.back()->size();
                }
                const auto cod = detail::parse_codomain(field(mj, "codomain", where), dim, where + ".codomain");
                cfg.measures.emplace(name, VectorMeasure(std::move(values), cod));
            }

        if (doc.contains("spaces")) {
            detail::SpaceParser parser(cfg, doc.at("spaces"));
            for (const auto& [name, _] : doc.at("spaces").items())
                cfg.spaces.emplace(name, parser.named(name));
        }

        if (doc.contains("operators")) {
            for (const auto& [name, oj] : doc.at("operators").items())
                cfg.operators.emplace(name, detail::parse_operator(cfg, oj, "operators." + name));
        }

        if (doc.contains("budget")) {
            const auto& b = doc.at("budget");
            cfg.budget.restarts = b.value("restarts", cfg.budget.restarts);
            cfg.budget.k_max = b.value("k_max", cfg.budget.k_max);
            cfg.budget.grid = b.value("grid", cfg.budget.grid);
            cfg.budget.max_iters = b.value("max_iters", cfg.budget.max_iters);
            cfg.budget.stabilization_tol = b.value("stabilization_tol", cfg.budget.stabilization_tol);
            cfg.budget.seed = b.value("seed", cfg.budget.seed);
        }
        if (doc.contains("budget") && doc.at("budget").contains("seed"))
            cfg.seed_set = true;
        if (doc.contains("seed")) {
            cfg.budget.seed = doc.at("seed").get<std::uint64_t>();
            cfg.seed_set = true;
        }
        cfg.samples = doc.value("samples", cfg.samples);
        if (doc.contains("tol")) {
            const auto& t = doc.at("tol");
            cfg.tol.linear = t.value("linear", cfg.tol.linear);
            cfg.tol.closed_form = t.value("closed_form", cfg.tol.closed_form);
            cfg.tol.optimizer = t.value("optimizer", cfg.tol.optimizer);
            cfg.tol.band = t.value("band", cfg.tol.band);
        }
        if (doc.contains("checks"))
            cfg.checks = doc.at("checks");
    } catch (const ConfigError&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed configuration: ") + e.what());
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

inline RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse '" + path + "': " + e.what());
    }
    return load_config(doc);
}

} // namespace latticelab

#pragma once

// Command dispatch for the latticelab tool.
//
// Exit codes: 0 success or pass, 1 some check failed, 2 configuration or
// usage error, 3 every check was skipped for an unmet hypothesis.

#include "latticelab/config.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace latticelab::cli {

using nlohmann::json;

inline constexpr int exit_ok = 0;
inline constexpr int exit_fail = 1;
inline constexpr int exit_config = 2;
inline constexpr int exit_skip = 3;

inline const std::vector<std::string>& check_ids() {
    static const std::vector<std::string> ids = {"extension",           "im-concavity",   "lpm-power-concavity",
                                                 "maurey-rosenthal",    "maximality",     "power-core",
                                                 "quasinorm-profile",   "representation", "sum-lemma"};
    return ids;
}

/// Infinities and NaN go out as strings so the document stays valid JSON.
inline json num(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return v;
}

inline json vec(std::span<const double> v) {
    json a = json::array();
    for (double x : v)
        a.push_back(num(x));
    return a;
}

inline json family(const std::vector<FnVec>& fam) {
    json a = json::array();
    for (const auto& f : fam)
        a.push_back(vec(f));
    return a;
}

inline json report_json(const CheckReport& r) {
    json margins = json::object();
    for (const auto& m : r.margins)
        margins[m.name] = {{"value", num(m.value)}, {"tolerance", num(m.tolerance)}, {"ok", m.ok}};
    json witnesses = json::array();
    for (const auto& w : r.witnesses)
        witnesses.push_back({{"kind", to_string(w.kind)}, {"ratio", num(w.reported_ratio)}, {"family", family(w.family)}});
    json decomps = json::array();
    for (const auto& d : r.decompositions)
        decomps.push_back({{"q", num(d.q)}, {"parts", family(d.parts)}});
    return {{"id", r.theorem_id},     {"passed", r.passed()},      {"status", to_string(r.status)},
            {"margins", margins},     {"witness", witnesses},      {"decompositions", decomps},
            {"seed", r.seed},         {"fingerprint", r.fingerprint}, {"instance", r.instance},
            {"notes", r.notes}};
}

inline json estimate_json(const std::string& id, const ConstantEstimate& e, std::uint64_t seed) {
    json trace = json::array();
    for (const auto& [k, v] : e.k_trace)
        trace.push_back({k, num(v)});
    json out = {{"id", id},
                {"value", num(e.lower_bound)},
                {"exact", e.exact},
                {"divergent", e.divergent},
                {"witness", family(e.witness.family)},
                {"k_trace", trace},
                {"seed", seed}};
    out["closed_form"] = e.closed_form ? num(*e.closed_form) : json(nullptr);
    if (!e.trace.empty())
        out["notes"] = e.trace;
    return out;
}

/// Table output: one header line per result, then indented key: value lines.
class Emitter {
  public:
    Emitter(std::ostream& out, bool json_mode, int precision) : out_(out), json_(json_mode), precision_(precision) {}

    void emit(const json& obj) {
        if (json_) {
            out_ << obj.dump() << '\n';
            return;
        }
        out_ << "[" << obj.value("id", std::string("result")) << "]\n";
        for (const auto& [key, v] : obj.items()) {
            if (key == "id")
                continue;
            out_ << "  " << key << ": " << render(v) << '\n';
        }
    }

  private:
    std::string render(const json& v) const {
        std::ostringstream os;
        if (v.is_number_float()) {
            os << std::setprecision(precision_) << v.get<double>();
        } else if (v.is_number()) {
            os << v.dump();
        } else if (v.is_string()) {
            os << v.get<std::string>();
        } else if (v.is_array()) {
            os << '[';
            bool first = true;
            for (const auto& e : v) {
                os << (first ? "" : ", ") << render(e);
                first = false;
            }
            os << ']';
        } else if (v.is_object()) {
            os << '{';
            bool first = true;
            for (const auto& [k, e] : v.items()) {
                os << (first ? "" : ", ") << k << '=' << render(e);
                first = false;
            }
            os << '}';
        } else {
            os << v.dump();
        }
        return os.str();
    }

    std::ostream& out_;
    bool json_;
    int precision_;
};

inline FnVec parse_vector(const std::string& text) {
    FnVec out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos)
            continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item.substr(b), &used));
            if (item.find_first_not_of(" \t", b + used) != std::string::npos)
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("cannot read '" + item + "' as a number");
        }
    }
    return out;
}

/// 1-based atom list to a set.
inline MSet parse_set(const std::string& text, std::size_t n) {
    MSet a;
    for (double v : parse_vector(text)) {
        if (v < 1 || v > static_cast<double>(n) || v != std::floor(v))
            throw ConfigError("atom index " + std::to_string(v) + " out of range 1.." + std::to_string(n));
        a.mask |= std::uint64_t{1} << static_cast<std::size_t>(v - 1);
    }
    return a;
}

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> restarts, kmax, samples;
    std::optional<double> tol;
    std::string format = "table";
    int precision = 12;
    std::string space, other, op, measure, f, set;
    std::optional<double> p, q;
    std::string check_id;
};

/// Runs one configured checker instance.
inline CheckReport run_check(const std::string& id, const RunConfig& cfg) {
    if (!cfg.checks.contains(id))
        throw ConfigError("no instance for check '" + id + "' in the configuration");
    const json& c = cfg.checks.at(id);
    const std::string where = "checks." + id;
    const Budget& b = cfg.budget;
    auto number = [&](const char* key, std::optional<double> dflt = std::nullopt) {
        if (!c.contains(key)) {
            if (dflt)
                return *dflt;
            throw ConfigError(where + ": missing field '" + key + "'");
        }
        return detail::extended_number(c.at(key), where + "." + key);
    };
    auto space = [&](const char* key) { return detail::parse_space(cfg, detail::field(c, key, where), where + "." + key); };
    auto op = [&](const char* key) {
        const json& j = detail::field(c, key, where);
        return j.is_string() ? cfg.operator_named(j.get<std::string>()) : detail::parse_operator(cfg, j, where + "." + key);
    };
    auto measure = [&]() {
        if (c.contains("measure"))
            return cfg.measure_named(c.at("measure").get<std::string>());
        if (c.contains("op"))
            return measure_from_operator(op("op"), b);
        throw ConfigError(where + ": needs 'measure' or 'op'");
    };
    auto explicit_samples = [&](std::vector<FnVec> dflt) {
        if (!c.contains("f"))
            return dflt;
        return c.at("f").get<std::vector<FnVec>>();
    };

    try {
        if (id == "power-core") {
            const SpaceExpr x = space("space");
            return check_power_core(x, number("p"), number("q"), explicit_samples(sample_functions(x, cfg.samples, b.seed, b)),
                                    b, cfg.tol);
        }
        if (id == "sum-lemma")
            return check_sum_lemma(space("x"), space("y"), op("op"), number("q"), b, cfg.tol);
        if (id == "extension") {
            const Operator t = op("op");
            return check_extension(t, number("p", 1.0), number("q"),
                                   explicit_samples(sample_functions(t.domain(), cfg.samples, b.seed, b)), b, cfg.tol);
        }
        if (id == "maximality") {
            const Operator t = op("op");
            std::vector<SpaceExpr> catalog;
            if (c.contains("catalog"))
                for (const auto& z : c.at("catalog"))
                    catalog.push_back(detail::parse_space(cfg, z, where + ".catalog"));
            else
                catalog = default_catalog(t.domain().space_ptr());
            return check_maximality(t, number("p", 1.0), number("q"), catalog, cfg.samples, b, number("bound", 1e6));
        }
        if (id == "im-concavity")
            return check_im_concavity(measure(), number("q"), b, cfg.tol);
        if (id == "lpm-power-concavity")
            return check_lpm_power_concavity(measure(), number("p"), number("q"), b, cfg.tol);
        if (id == "representation") {
            const SpaceExpr z = space("space");
            return check_representation(z, number("p", 1.0), number("q"),
                                        explicit_samples(sample_functions(z, cfg.samples, b.seed, b)), b, cfg.tol);
        }
        if (id == "maurey-rosenthal")
            return maurey_rosenthal_factor(op("op"), number("q"), b, cfg.samples, cfg.tol).report;
        if (id == "quasinorm-profile")
            return check_quasinorm_profile(space("space"), static_cast<std::size_t>(number("pairs", 10000.0)),
                                           static_cast<std::size_t>(number("families", 1000.0)), b);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
    throw ConfigError("unknown check id '" + id + "'");
}

namespace detail {

inline RunConfig prepare(const Options& o) {
    if (o.config.empty())
        throw ConfigError("--config is required");
    RunConfig cfg = load_config_file(o.config);
    if (o.seed)
        cfg.budget.seed = *o.seed;
    else if (!cfg.seed_set)
        if (const char* env = std::getenv("LATTICELAB_SEED")) {
            try {
                cfg.budget.seed = std::stoull(env);
            } catch (const std::exception&) {
                throw ConfigError("LATTICELAB_SEED is not an unsigned integer");
            }
        }
    if (o.restarts)
        cfg.budget.restarts = *o.restarts;
    if (o.kmax)
        cfg.budget.k_max = *o.kmax;
    if (o.samples)
        cfg.samples = *o.samples;
    if (o.tol)
        cfg.tol.optimizer = *o.tol;
    return cfg;
}

inline const std::string& need(const std::string& v, const char* flag) {
    if (v.empty())
        throw ConfigError(std::string(flag) + " is required for this command");
    return v;
}

inline double need(const std::optional<double>& v, const char* flag) {
    if (!v)
        throw ConfigError(std::string(flag) + " is required for this command");
    return *v;
}

} // namespace detail

/// Parse argv and run one command; output goes to `out`, diagnostics to `err`.
inline int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"latticelab: quasi-Banach function lattices on finite atomic measure spaces"};
    app.name("latticelab");
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    std::string p_text, q_text;
    app.add_option("--config", o.config, "JSON configuration file");
    app.add_option("--seed", o.seed, "RNG seed (falls back to the config, then LATTICELAB_SEED)");
    app.add_option("--restarts", o.restarts, "multistart count");
    app.add_option("--kmax", o.kmax, "cap on parts / family size");
    app.add_option("--samples", o.samples, "random samples per check");
    app.add_option("--tol", o.tol, "relative tolerance for optimizer-mediated equalities");
    app.add_option("--format", o.format, "table or json")->check(CLI::IsMember({"table", "json"}));
    app.add_option("--precision", o.precision, "significant digits in table output")->check(CLI::Range(1, 17));
    app.add_option("--space", o.space, "space name");
    app.add_option("--other", o.other, "second space name (space sum)");
    app.add_option("--op", o.op, "operator name");
    app.add_option("--measure", o.measure, "measure name");
    app.add_option("--f", o.f, "function values, comma separated");
    app.add_option("--p", p_text, "exponent p (number or inf)");
    app.add_option("--q", q_text, "exponent q (number or inf)");
    app.add_option("--set", o.set, "1-based atom list");

    auto group = [&](const char* name, const char* help, std::vector<std::pair<const char*, const char*>> subs) {
        auto* g = app.add_subcommand(name, help);
        g->require_subcommand(1);
        g->fallthrough();
        for (auto [s, h] : subs)
            g->add_subcommand(s, h)->fallthrough();
        return g;
    };
    auto* space_cmd = group("space", "space norms", {{"eval", "norm of --f in --space"},
                                                     {"core", "q-concave core norm"},
                                                     {"sum", "sum-space norm with the optimal split"},
                                                     {"simplify", "rewrite a space expression"}});
    auto* const_cmd = group("const", "constant estimates", {{"concavity", "q-concavity of --op"},
                                                            {"convexity", "p-convexity of --space"},
                                                            {"power-concavity", "(p,q)-power-concavity of --op"}});
    auto* measure_cmd = group("measure", "vector measures", {{"from-op", "m_T(A) = T(chi_A)"},
                                                             {"semivar", "semivariation of --set"},
                                                             {"l1norm", "L^1(m) norm of --f"},
                                                             {"lpnorm", "L^p(m) norm of --f"},
                                                             {"integrate", "integral of --f over --set (default all)"}});
    auto* check_cmd = app.add_subcommand("check", "run theorem checkers");
    check_cmd->fallthrough();
    check_cmd->add_option("id", o.check_id, "checker id or 'all'")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    }

    try {
        RunConfig cfg = detail::prepare(o);
        if (!p_text.empty())
            o.p = latticelab::detail::extended_number(json::parse(p_text == "inf" ? "\"inf\"" : p_text), "--p");
        if (!q_text.empty())
            o.q = latticelab::detail::extended_number(json::parse(q_text == "inf" ? "\"inf\"" : q_text), "--q");
        Emitter emit(out, o.format == "json", o.precision);
        const Budget& b = cfg.budget;
        const std::uint64_t seed = b.seed;
        auto the_space = [&](const std::string& name, const char* flag) {
            return cfg.space_named(detail::need(name, flag));
        };
        auto the_measure = [&]() {
            if (!o.measure.empty())
                return cfg.measure_named(o.measure);
            if (!o.op.empty())
                return measure_from_operator(cfg.operator_named(o.op), b);
            throw ConfigError("--measure or --op is required for this command");
        };
        auto the_f = [&](std::size_t n) {
            FnVec f = parse_vector(detail::need(o.f, "--f"));
            if (f.size() != n)
                throw ConfigError("--f has " + std::to_string(f.size()) + " values, expected " + std::to_string(n));
            return f;
        };

        if (space_cmd->parsed()) {
            const SpaceExpr x = the_space(o.space, "--space");
            if (space_cmd->got_subcommand("eval")) {
                emit.emit({{"id", "eval"}, {"space", x.to_string()}, {"value", num(eval_norm(x, the_f(x.atoms()), b))}});
            } else if (space_cmd->got_subcommand("core")) {
                const FnVec f = the_f(x.atoms());
                const auto r = core_norm(x, detail::need(o.q, "--q"), f, b.parts_cap(x.atoms()), b);
                json trace = json::array();
                for (const auto& [k, v] : r.trace)
                    trace.push_back({k, num(v)});
                emit.emit({{"id", "core"},
                           {"space", x.to_string()},
                           {"value", num(r.value)},
                           {"parts", family(r.decomposition.parts)},
                           {"reconstruction_error", num(r.decomposition.reconstruction_error(x.space(), f))},
                           {"trace", trace},
                           {"seed", seed}});
            } else if (space_cmd->got_subcommand("sum")) {
                const SpaceExpr y = the_space(o.other, "--other");
                const auto r = sum_norm(x, y, the_f(x.atoms()), b);
                emit.emit({{"id", "sum"},
                           {"space", SpaceExpr::sum(x, y).to_string()},
                           {"value", num(r.value)},
                           {"first", vec(r.first)},
                           {"second", vec(r.second)},
                           {"seed", seed}});
            } else {
                emit.emit({{"id", "simplify"}, {"space", x.to_string()}, {"value", simplify(x).to_string()}});
            }
            return exit_ok;
        }

        if (const_cmd->parsed()) {
            if (const_cmd->got_subcommand("convexity")) {
                const SpaceExpr x = the_space(o.space, "--space");
                emit.emit(estimate_json("convexity", convexity_constant(x, detail::need(o.p, "--p"), b), seed));
                return exit_ok;
            }
            const Operator& t = cfg.operator_named(detail::need(o.op, "--op"));
            if (const_cmd->got_subcommand("concavity"))
                emit.emit(estimate_json("concavity", concavity_constant(t, detail::need(o.q, "--q"), b), seed));
            else
                emit.emit(estimate_json("power-concavity",
                                        power_concavity_constant(t, detail::need(o.p, "--p"), detail::need(o.q, "--q"), b),
                                        seed));
            return exit_ok;
        }

        if (measure_cmd->parsed()) {
            const VectorMeasure m = the_measure();
            const std::size_t n = m.atoms();
            if (measure_cmd->got_subcommand("from-op")) {
                json atoms = json::array();
                for (std::size_t i = 0; i < n; ++i)
                    atoms.push_back(m.defined(i) ? vec(m.atom_value(i)) : json(nullptr));
                emit.emit({{"id", "from-op"}, {"atoms", atoms}, {"codomain", m.codomain().label()}});
            } else if (measure_cmd->got_subcommand("semivar")) {
                emit.emit({{"id", "semivar"}, {"value", num(semivariation(m, parse_set(detail::need(o.set, "--set"), n)))}});
            } else if (measure_cmd->got_subcommand("l1norm")) {
                emit.emit({{"id", "l1norm"}, {"value", num(l1m_norm(m, the_f(n)))}});
            } else if (measure_cmd->got_subcommand("lpnorm")) {
                emit.emit({{"id", "lpnorm"}, {"value", num(lpm_norm(m, detail::need(o.p, "--p"), the_f(n)))}});
            } else {
                const MSet a = o.set.empty() ? MSet::full(n) : parse_set(o.set, n);
                emit.emit({{"id", "integrate"}, {"value", vec(integrate(m, the_f(n), a))}});
            }
            return exit_ok;
        }

        // check <id> | check all
        std::vector<std::string> ids;
        if (o.check_id == "all") {
            for (const auto& [key, _] : cfg.checks.items()) {
                if (std::find(check_ids().begin(), check_ids().end(), key) == check_ids().end())
                    throw ConfigError("unknown check id '" + key + "' in the configuration");
                ids.push_back(key);
            }
            std::sort(ids.begin(), ids.end());
            if (ids.empty())
                throw ConfigError("the configuration declares no checks");
        } else {
            if (std::find(check_ids().begin(), check_ids().end(), o.check_id) == check_ids().end())
                throw ConfigError("unknown check id '" + o.check_id + "'");
            ids.push_back(o.check_id);
        }
        bool failed = false, all_skipped = true;
        for (const auto& id : ids) {
            const CheckReport r = run_check(id, cfg);
            emit.emit(report_json(r));
            failed = failed || r.status == CheckStatus::Fail;
            all_skipped = all_skipped && r.status == CheckStatus::Skip;
        }
        if (failed)
            return exit_fail;
        return all_skipped ? exit_skip : exit_ok;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const HypothesisError& e) {
        err << "hypothesis unmet: " << e.what() << '\n';
        return exit_skip;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const nlohmann::json::exception& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    }
}

inline int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.push_back("latticelab");
    for (const auto& a : args)
        argv.push_back(a.c_str());
    return run_command(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace latticelab::cli

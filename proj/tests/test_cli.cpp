#include "catch_amalgamated.hpp"

#include "latticelab/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace latticelab;
using Catch::Approx;
using nlohmann::json;

namespace {

const std::string demo = std::string(LATTICELAB_CONFIG_DIR) + "/demo.json";

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run_command(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<json> lines(const std::string& text) {
    std::vector<json> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line))
        out.push_back(json::parse(line));
    return out;
}

std::string write_config(const std::string& name, const std::string& body) {
    const auto path = std::filesystem::temp_directory_path() / ("latticelab_" + name + ".json");
    std::ofstream(path) << body;
    return path.string();
}

} // namespace

TEST_CASE("space eval prints the norm", "[cli]") {
    const auto r = run({"space", "eval", "--config", demo, "--space", "X", "--f", "3,4"});
    CHECK(r.code == 0);
    CHECK(r.out.find("value: 5\n") != std::string::npos);

    const auto j = run({"space", "eval", "--config", demo, "--space", "Linf", "--f", "3, -4", "--format", "json"});
    REQUIRE(j.code == 0);
    CHECK(lines(j.out).at(0)["value"] == 4.0);
}

TEST_CASE("space commands", "[cli]") {
    const auto core = run({"space", "core", "--config", demo, "--space", "Linf", "--q", "2", "--f", "3,4", "--format", "json"});
    REQUIRE(core.code == 0);
    CHECK(lines(core.out).at(0)["value"].get<double>() == Approx(5.0).epsilon(1e-3));

    const auto sum = run({"space", "sum", "--config", demo, "--space", "L1", "--other", "Linf", "--f", "1,1", "--format", "json"});
    REQUIRE(sum.code == 0);
    CHECK(lines(sum.out).at(0)["value"].get<double>() == Approx(1.0).epsilon(1e-9));

    const auto simp = run({"space", "simplify", "--config", demo, "--space", "P", "--format", "json"});
    REQUIRE(simp.code == 0);
    CHECK(lines(simp.out).at(0)["value"].get<std::string>().find("core") != std::string::npos);
}

TEST_CASE("const concavity on l-infinity", "[cli]") {
    const auto r = run({"const", "concavity", "--config", demo, "--op", "Iinf", "--q", "1", "--format", "json"});
    REQUIRE(r.code == 0);
    const json j = lines(r.out).at(0);
    CHECK(j["value"].get<double>() == Approx(2.0).epsilon(0.02));
    const auto fam = j["witness"].get<std::vector<std::vector<double>>>();
    REQUIRE(fam.size() == 2);
    // Witness is (e1, e2) up to scaling and order.
    CHECK(std::min(std::fabs(fam[0][0]), std::fabs(fam[0][1])) < 1e-6 * std::max(std::fabs(fam[0][0]), std::fabs(fam[0][1])));

    const auto conv = run({"const", "convexity", "--config", demo, "--space", "L1", "--p", "2", "--format", "json"});
    REQUIRE(conv.code == 0);
    CHECK(lines(conv.out).at(0)["value"].get<double>() == Approx(std::sqrt(2.0)).epsilon(0.02));

    const auto pc = run({"const", "power-concavity", "--config", demo, "--op", "Sum", "--p", "1", "--q", "1"});
    CHECK(pc.code == 0);
}

TEST_CASE("measure commands", "[cli]") {
    auto value = [](std::vector<std::string> args) {
        args.insert(args.end(), {"--config", demo, "--format", "json"});
        const auto r = run(args);
        REQUIRE(r.code == 0);
        return lines(r.out).at(0)["value"];
    };
    CHECK(value({"measure", "semivar", "--measure", "id2", "--set", "1,2"}).get<double>() == Approx(std::sqrt(2.0)));
    CHECK(value({"measure", "l1norm", "--measure", "id2", "--f", "3,4"}).get<double>() == Approx(5.0));
    CHECK(value({"measure", "l1norm", "--op", "Sum", "--f", "3,4"}).get<double>() == Approx(7.0));
    CHECK(value({"measure", "lpnorm", "--measure", "id2", "--p", "2", "--f", "1.7320508075688772,2"}).get<double>() ==
          Approx(std::sqrt(5.0)));
    CHECK(value({"measure", "integrate", "--op", "Sum", "--f", "3,-4"}) == json::array({-1.0}));
    CHECK(value({"measure", "integrate", "--measure", "id2", "--f", "5,7", "--set", "2"}) == json::array({0.0, 7.0}));

    const auto r = run({"measure", "from-op", "--config", demo, "--op", "D", "--format", "json"});
    REQUIRE(r.code == 0);
    CHECK(lines(r.out).at(0)["atoms"] == json::parse("[[2.0, 0.0], [0.0, 1.0]]"));
}

TEST_CASE("check power-core on the demo instance", "[cli]") {
    const auto r = run({"check", "power-core", "--config", demo, "--format", "json"});
    CHECK(r.code == 0);
    const json j = lines(r.out).at(0);
    CHECK(j["id"] == "power-core");
    CHECK(j["passed"] == true);
    CHECK(j["margins"]["max_relative_discrepancy"]["value"].get<double>() <= 1e-3);
    CHECK(j.contains("seed"));
    CHECK(j.contains("witness"));
}

TEST_CASE("check all: sorted, valid and reproducible", "[cli]") {
    const auto a = run({"check", "all", "--config", demo, "--format", "json"});
    CHECK(a.code == 0);
    const auto objs = lines(a.out);
    REQUIRE(objs.size() == cli::check_ids().size());
    for (std::size_t i = 0; i < objs.size(); ++i) {
        CHECK(objs[i]["id"] == cli::check_ids()[i]);
        CHECK(objs[i]["passed"] == true);
        for (const char* key : {"id", "passed", "margins", "witness", "seed"})
            CHECK(objs[i].contains(key));
    }
    const auto b = run({"check", "all", "--config", demo, "--format", "json"});
    CHECK(a.out == b.out);
}

TEST_CASE("exit codes", "[cli]") {
    CHECK(run({"check", "nonsense", "--config", demo}).code == cli::exit_config);
    CHECK(run({"frobnicate"}).code == cli::exit_config);
    CHECK(run({"space", "eval", "--space", "X", "--f", "1,1"}).code == cli::exit_config);
    CHECK(run({"space", "eval", "--config", "/nonexistent/c.json", "--space", "X", "--f", "1"}).code == cli::exit_config);
    CHECK(run({"space", "eval", "--config", demo, "--space", "Nope", "--f", "1,1"}).code == cli::exit_config);
    CHECK(run({"space", "eval", "--config", demo, "--space", "X", "--f", "1,x"}).code == cli::exit_config);
    CHECK(run({"space", "eval", "--config", demo, "--space", "X", "--f", "1,2,3"}).code == cli::exit_config);

    const auto malformed = write_config("malformed", "{\"measure\": {\"weights\": [1, 1]");
    const auto r = run({"space", "eval", "--config", malformed, "--space", "X", "--f", "1,1"});
    CHECK(r.code == cli::exit_config);
    CHECK_FALSE(r.err.empty());

    // Zero tolerance: two independent searches never agree to the last bit.
    const auto strict = write_config("strict", R"({"measure": {"weights": [1, 2, 0.5]},
        "spaces": {"X": {"kind": "lp", "p": 2}}, "tol": {"optimizer": 0}, "samples": 4,
        "checks": {"power-core": {"space": "X", "p": 0.7, "q": 1.3}}})");
    CHECK(run({"check", "power-core", "--config", strict}).code == cli::exit_fail);

    // sigma-property fails: every check is skipped.
    const auto skip = write_config("skip", R"({"measure": {"weights": [1, "inf"]},
        "spaces": {"L1": {"kind": "lp", "p": 1}},
        "operators": {"I": {"matrix": [[1, 0], [0, 1]], "domain": "L1", "codomain": {"l": 2}}},
        "checks": {"extension": {"op": "I", "q": 1}}})");
    CHECK(run({"check", "all", "--config", skip}).code == cli::exit_skip);
    CHECK(run({"measure", "from-op", "--config", skip, "--op", "I"}).code == cli::exit_skip);
}

TEST_CASE("seed precedence", "[cli]") {
    const auto noseed = write_config("noseed", R"({"measure": {"weights": [1, 1]},
        "spaces": {"L": {"kind": "lp", "p": "inf"}},
        "operators": {"I": {"matrix": [[1, 0], [0, 1]], "domain": "L", "codomain": {"l": "inf"}}}})");
    auto seed_of = [&](std::vector<std::string> extra) {
        std::vector<std::string> args = {"const", "concavity", "--config", noseed, "--op", "I", "--q", "1", "--format", "json"};
        args.insert(args.end(), extra.begin(), extra.end());
        const auto r = run(args);
        REQUIRE(r.code == 0);
        return lines(r.out).at(0)["seed"].get<std::uint64_t>();
    };
    ::unsetenv("LATTICELAB_SEED");
    CHECK(seed_of({}) == 0);
    ::setenv("LATTICELAB_SEED", "42", 1);
    CHECK(seed_of({}) == 42);
    CHECK(seed_of({"--seed", "5"}) == 5);
    ::setenv("LATTICELAB_SEED", "junk", 1);
    CHECK(run({"const", "concavity", "--config", noseed, "--op", "I", "--q", "1"}).code == cli::exit_config);
    ::unsetenv("LATTICELAB_SEED");

    // A seed in the document wins over the environment.
    ::setenv("LATTICELAB_SEED", "42", 1);
    const auto r = run({"check", "power-core", "--config", demo, "--format", "json"});
    CHECK(lines(r.out).at(0)["seed"] == 7);
    ::unsetenv("LATTICELAB_SEED");
}

TEST_CASE("precision applies to table output only", "[cli]") {
    const auto t = run({"space", "eval", "--config", demo, "--space", "X", "--f", "1,1", "--precision", "3"});
    CHECK(t.out.find("value: 1.41\n") != std::string::npos);
    const auto j = run({"space", "eval", "--config", demo, "--space", "X", "--f", "1,1", "--precision", "3", "--format", "json"});
    CHECK(lines(j.out).at(0)["value"].get<double>() == std::sqrt(2.0));
    CHECK(run({"space", "eval", "--config", demo, "--space", "X", "--f", "1,1", "--precision", "40"}).code == cli::exit_config);
}

TEST_CASE("infinities survive json", "[cli]") {
    const auto partial = write_config("partial", R"({"measure": {"weights": [1, 1]},
        "measures": {"m": {"atoms": [[1], null], "codomain": {"l": 2, "dim": 1}}}})");
    const auto r = run({"measure", "l1norm", "--config", partial, "--measure", "m", "--f", "1,1", "--format", "json"});
    REQUIRE(r.code == 0);
    CHECK(lines(r.out).at(0)["value"] == "inf");
}

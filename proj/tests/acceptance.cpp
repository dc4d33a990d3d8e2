// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "latticelab.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace latticelab;

namespace {

std::shared_ptr<const MeasureSpace> space(std::vector<double> w) { return std::make_shared<const MeasureSpace>(std::move(w)); }

Budget budget(std::uint64_t seed, std::size_t restarts = 8, std::size_t iters = 120) {
    Budget b;
    b.restarts = restarts;
    b.max_iters = iters;
    b.seed = seed;
    return b;
}

FnVec random_vec(std::size_t n, Rng& rng) {
    FnVec f(n);
    for (auto& x : f)
        x = 4 * uniform01(rng) - 2;
    return f;
}

std::vector<double> random_weights(std::size_t n, Rng& rng) {
    std::vector<double> w(n);
    for (auto& x : w)
        x = 0.5 + 2 * uniform01(rng);
    return w;
}

std::vector<std::vector<double>> random_matrix(std::size_t m, std::size_t n, Rng& rng) {
    std::vector<std::vector<double>> a(m, std::vector<double>(n));
    for (auto& row : a)
        for (auto& v : row)
            v = 2 * uniform01(rng) - 1;
    return a;
}

SpaceExpr random_leaf(const std::shared_ptr<const MeasureSpace>& mu, Rng& rng) {
    static const double ps[] = {0.5, 1, 2, 3, inf};
    return SpaceExpr::lp(mu, ps[rng() % 5]);
}

SpaceExpr random_space(const std::shared_ptr<const MeasureSpace>& mu, Rng& rng) {
    switch (rng() % 6) {
    case 0:
        return random_leaf(mu, rng);
    case 1:
        return SpaceExpr::power(random_leaf(mu, rng), std::vector<double>{0.5, 2, 3}[rng() % 3]);
    case 2:
        return SpaceExpr::sum(random_leaf(mu, rng), random_leaf(mu, rng));
    case 3:
        return SpaceExpr::intersection(random_leaf(mu, rng), random_leaf(mu, rng));
    case 4:
        return SpaceExpr::core(random_leaf(mu, rng), std::vector<double>{0.5, 1, 2}[rng() % 3]);
    default:
        return SpaceExpr::power(SpaceExpr::intersection(random_leaf(mu, rng), random_leaf(mu, rng)), 2);
    }
}

struct Outcome {
    bool ok = true;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0 && secs > limit_s) {
        o.ok = false;
        o.detail += " (over the " + std::to_string(static_cast<int>(limit_s)) + " s limit)";
    }
    if (!o.ok)
        ++failures;
    std::printf("%s criterion %2d: %s | %s [%.2f s]\n", o.ok ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

double rel(double a, double b) { return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)}); }

} // namespace

int main() {
    criterion(1, "homogeneity and lattice ideal, 500 pairs", 10, [] {
        Rng rng(2024);
        Budget b = budget(1, 4, 60);
        b.k_max = 3;
        double worst_h = 0.0, worst_i = 0.0;
        int bad = 0;
        for (int t = 0; t < 500; ++t) {
            const std::size_t n = 1 + t % 4;
            auto mu = space(random_weights(n, rng));
            const auto x = random_space(mu, rng);
            const FnVec f = random_vec(n, rng);
            const double a = (uniform01(rng) < 0.5 ? -1 : 1) * (0.1 + 5 * uniform01(rng));
            FnVec af = f, g = f;
            for (auto& v : af)
                v *= a;
            for (auto& v : g)
                v *= uniform01(rng) * (uniform01(rng) < 0.5 ? -1 : 1);
            const double nf = eval_norm(x, f, b);
            const double h = nf > 0 ? std::fabs(eval_norm(x, af, b) - std::fabs(a) * nf) / (std::fabs(a) * nf) : 0.0;
            const double i = nf > 0 ? eval_norm(x, g, b) / nf - 1.0 : 0.0;
            worst_h = std::max(worst_h, h);
            worst_i = std::max(worst_i, i);
            bad += h > 1e-12 || i > 1e-12;
        }
        return Outcome{bad == 0, "worst homogeneity " + num(worst_h) + ", worst ideal excess " + num(worst_i) +
                                     ", violations " + std::to_string(bad)};
    });

    criterion(2, "estimators reach the grid oracle within 2%", 300, [] {
        Rng rng(7);
        double worst = inf;
        int count = 0;
        auto track = [&](double got, double ref) {
            ++count;
            if (ref > 0)
                worst = std::min(worst, got / ref);
        };
        // core norms of leaves, parts <= 3
        for (int t = 0; t < 8; ++t) {
            const std::size_t n = 2 + t % 2;
            const auto w = random_weights(n, rng);
            const double p = std::vector<double>{1, 2, 3, inf}[t % 4];
            const double q = std::vector<double>{0.5, 1, 2}[t % 3];
            const FnVec f = random_vec(n, rng);
            auto norm = [w, p](const oracle::Vec& v) { return oracle::lp(w, p, v); };
            const double ref = oracle::core_grid(norm, q, f, 3, n == 2 ? 40 : 12);
            track(core_norm(SpaceExpr::lp(space(w), p), q, f, 3, budget(t)).value, ref);
        }
        // concavity constants
        for (int t = 0; t < 6; ++t) {
            auto mu = space({1, 0.5 + uniform01(rng)});
            const Operator op(random_matrix(2, 2, rng), SpaceExpr::lp(mu, std::vector<double>{1, 2, inf}[t % 3]),
                              NormedCodomain(2, 1 + t % 2));
            OracleInstance inst;
            inst.op = op;
            inst.exponent = 1 + t % 2;
            inst.k_max = 2;
            inst.grid = 12;
            track(concavity_constant(op, inst.exponent, budget(t)).lower_bound, oracle_constant(inst));
        }
        {
            const Operator op(random_matrix(2, 3, rng), SpaceExpr::lp(space({1, 1, 1}), inf), NormedCodomain(2, 2));
            OracleInstance inst;
            inst.op = op;
            inst.exponent = 1;
            inst.k_max = 3;
            inst.grid = 2;
            track(concavity_constant(op, 1, budget(3)).lower_bound, oracle_constant(inst));
        }
        // convexity constants
        for (double p : {1.0, 1.5, 3.0}) {
            OracleInstance inst;
            inst.kind = OracleKind::Convexity;
            inst.space = SpaceExpr::lp(space({1, 2}), p);
            inst.exponent = 2;
            inst.k_max = 2;
            inst.grid = 20;
            track(convexity_constant(*inst.space, 2, budget(0)).lower_bound, oracle_constant(inst));
        }
        {
            OracleInstance inst;
            inst.kind = OracleKind::Convexity;
            inst.space = SpaceExpr::lp(space({1, 1, 1}), 1);
            inst.exponent = 3;
            inst.k_max = 3;
            inst.grid = 4;
            track(convexity_constant(*inst.space, 3, budget(0)).lower_bound, oracle_constant(inst));
        }
        return Outcome{worst >= 0.98, std::to_string(count) + " instances, worst estimate/oracle " + num(worst)};
    });

    criterion(3, "closed-form constants", 60, [] {
        auto mu = space({1, 1});
        const double c = concavity_constant(Operator::identity(SpaceExpr::lp(mu, inf), inf), 1, budget(0)).lower_bound;
        const double m = convexity_constant(SpaceExpr::lp(mu, 1), 2, budget(0)).lower_bound;
        const bool ok = c >= 2 * 0.98 && c <= 2 * (1 + 1e-9) && m >= oracle::sqrt2 * 0.98 && m <= oracle::sqrt2 * (1 + 1e-9);
        return Outcome{ok, "1-concavity of id on l-inf^2 " + num(c) + ", 2-convexity of l1^2 " + num(m)};
    });

    criterion(4, "L1(m) sign enumeration vs dual ball, 200 instances", 60, [] {
        Rng rng(4);
        std::normal_distribution<double> g(0.0, 1.0);
        double worst = 0.0;
        for (int t = 0; t < 200; ++t) {
            const std::size_t n = 1 + t % 10, d = 1 + t % 3;
            std::vector<FnVec> v(n, FnVec(d));
            for (auto& x : v)
                for (auto& c : x)
                    c = g(rng);
            const VectorMeasure m(v, NormedCodomain(d, 2));
            const FnVec f = random_vec(n, rng);
            std::vector<oracle::Vec> w = v;
            for (std::size_t i = 0; i < n; ++i)
                for (auto& c : w[i])
                    c *= f[i];
            worst = std::max(worst, rel(l1m_norm(m, f), oracle::dual_ball_l2(w, d)));
        }
        return Outcome{worst <= 1e-9, "worst relative gap " + num(worst)};
    });

    criterion(5, "power/core commutation", 300, [] {
        auto mu = space({1, 1});
        const auto x = SpaceExpr::lp(mu, inf);
        const FnVec f{3, 4};
        const Budget b = budget(0);
        const double a = std::pow(core_norm(x, 2, pow_abs(f, 2), 3, b).value, 0.5);
        const double c = core_norm(SpaceExpr::power(x, 2), 4, f, 3, b).value;
        auto rep = check_power_core(x, 2, 2, {f}, b);
        bool ok = rep.passed() && rel(a, oracle::power_core_34) <= 1e-3 && rel(c, oracle::power_core_34) <= 1e-3;
        double worst = rep.margins.at(0).value;
        Rng rng(5);
        int passed = 0;
        for (int t = 0; t < 20; ++t) {
            const std::size_t n = 1 + t % 3;
            const auto xs = SpaceExpr::lp(space(random_weights(n, rng)), std::vector<double>{1, 2, 3, inf}[t % 4]);
            const double p = 0.5 + 2 * uniform01(rng), q = 0.5 + 2 * uniform01(rng);
            const auto r = check_power_core(xs, p, q, sample_functions(n, MSet::full(n), 3, t), budget(t, 6, 100));
            passed += r.passed();
            worst = std::max(worst, r.margins.at(0).value);
        }
        ok = ok && passed == 20;
        return Outcome{ok, "routes " + num(a) + " and " + num(c) + " vs 337^(1/4) " + num(oracle::power_core_34) +
                               "; random " + std::to_string(passed) + "/20, worst margin " + num(worst)};
    });

    criterion(6, "extension identity T f = I_{m_T} f, 100 instances", 120, [] {
        Rng rng(6);
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            const std::size_t n = 1 + t % 5, m = 1 + (t / 5) % 5;
            const auto x = SpaceExpr::lp(space(random_weights(n, rng)), std::vector<double>{0.5, 1, 2, 3, inf}[t % 5]);
            const Operator op(random_matrix(m, n, rng), x, NormedCodomain(m, std::vector<double>{1, 2, inf}[t % 3]));
            const VectorMeasure mt = measure_from_operator(op);
            for (int s = 0; s < 3; ++s) {
                const FnVec f = random_vec(n, rng);
                const FnVec a = op.apply(f), b = integrate(mt, f);
                double scale = 1.0, err = 0.0;
                for (std::size_t k = 0; k < m; ++k) {
                    scale = std::max(scale, std::fabs(a[k]));
                    err = std::max(err, std::fabs(a[k] - b[k]));
                }
                worst = std::max(worst, err / scale);
            }
        }
        // The full checker, which also builds the optimal domain, on a subset.
        int passed = 0;
        for (int t = 0; t < 10; ++t) {
            const std::size_t n = 2 + t % 3;
            const Operator op(random_matrix(2, n, rng), SpaceExpr::lp(space(random_weights(n, rng)), std::vector<double>{1, 2, inf}[t % 3]),
                              NormedCodomain(2, 2));
            passed += check_extension(op, 1, 1 + t % 2, sample_functions(n, MSet::full(n), 4, t), budget(t, 4, 60)).passed();
        }
        return Outcome{worst <= 1e-9 && passed == 10,
                       "worst error " + num(worst) + ", extension checker " + std::to_string(passed) + "/10"};
    });

    criterion(7, "optimal domain of [[1,1]] on l2 is l1", 120, [] {
        auto mu = space({1, 1});
        const auto x = SpaceExpr::lp(mu, 2);
        const Operator t({{1, 1}}, x, NormedCodomain(1, 2));
        const Budget b = budget(0);
        const auto od = optimal_domain(t, 1, 1, b);
        Rng rng(7);
        double worst = 0.0, widest = 0.0;
        for (int s = 0; s < 50; ++s) {
            const FnVec f = random_vec(2, rng);
            const double v = eval_norm(od, f, b);
            worst = std::max(worst, rel(v, std::fabs(f[0]) + std::fabs(f[1])));
            widest = std::max(widest, v / eval_norm(x, f));
        }
        // On chi_Omega the two norms differ by sqrt 2: not isometric.
        const double gap = eval_norm(od, FnVec{1, 1}, b) / eval_norm(x, FnVec{1, 1});
        return Outcome{worst <= 1e-3 && gap > 1.4, "worst relative gap to l1 " + num(worst) + ", max ||f||_opt/||f||_2 " +
                                                       num(widest) + ", ratio at chi_Omega " + num(gap)};
    });

    criterion(8, "representation with equal norms", 300, [] {
        struct Case {
            const char* name;
            SpaceExpr z;
            double p;
        };
        const std::vector<Case> cases = {{"l1", SpaceExpr::lp(space({1, 1, 1}), 1), 1},
                                         {"l2", SpaceExpr::lp(space({1, 1, 1}), 2), 2},
                                         {"weighted l3", SpaceExpr::lp(space({0.5, 1, 2}), 3), 3}};
        bool ok = true;
        std::string detail;
        for (const auto& c : cases) {
            const auto samples = sample_functions(3, MSet::full(3), 50, 8);
            const auto r = check_representation(c.z, c.p, c.p, samples, budget(8));
            double disc = -1, ratio = -1;
            for (const auto& m : r.margins) {
                if (m.name == "max_norm_discrepancy")
                    disc = m.value;
                if (m.name == "im_concavity_over_z")
                    ratio = m.value;
            }
            ok = ok && r.passed() && disc >= 0 && disc <= 1e-6 && ratio >= 0 && ratio <= 1.05;
            detail += std::string(detail.empty() ? "" : "; ") + c.name + ": " + to_string(r.status) + ", norm gap " +
                      num(disc) + ", C(I_m)/C(Z)^p " + num(ratio);
        }
        return Outcome{ok, detail};
    });

    criterion(9, "sum lemma, 20 random instances", 600, [] {
        Rng rng(9);
        int passed = 0, skipped = 0;
        std::string first_bad;
        for (int t = 0; t < 20; ++t) {
            const std::size_t n = 2 + t % 2;
            auto mu = space(random_weights(n, rng));
            const double ps[] = {1, 2, 3, inf};
            const auto x = SpaceExpr::lp(mu, ps[rng() % 4]);
            const auto y = SpaceExpr::lp(mu, ps[rng() % 4]);
            const Operator op(random_matrix(2, n, rng), x, NormedCodomain(2, 1 + t % 2));
            const double q = std::vector<double>{1, 1.5, 2}[t % 3];
            const auto r = check_sum_lemma(x, y, op, q, budget(t, 6, 100));
            passed += r.passed();
            skipped += r.status == CheckStatus::Skip;
            if (r.status == CheckStatus::Fail && first_bad.empty())
                first_bad = " first failure: " + r.instance;
        }
        return Outcome{passed == 20, std::to_string(passed) + "/20 passed, " + std::to_string(skipped) + " skipped" + first_bad};
    });

    criterion(10, "Maurey-Rosenthal factorization of diag(2,1)", 120, [] {
        const Operator t({{2, 0}, {0, 1}}, SpaceExpr::lp(space({1, 1}), 2), NormedCodomain(2, 2));
        const auto r = maurey_rosenthal_factor(t, 2, budget(0));
        double err = inf;
        for (const auto& m : r.report.margins)
            if (m.name == "max_commutation_error")
                err = m.value;
        std::string g;
        for (double v : r.g)
            g += (g.empty() ? "" : ",") + num(v);
        return Outcome{r.report.passed() && std::isfinite(r.c1 * r.c2) && err <= 1e-9,
                       std::string(to_string(r.report.status)) + ", g=(" + g + "), c1*c2 " + num(r.c1 * r.c2) +
                           ", commutation error " + num(err)};
    });

    criterion(11, "quasi-norm profile of l^(1/2) on 2 atoms", 120, [] {
        const auto prof = quasinorm_profile(SpaceExpr::lp(space({1, 1}), 0.5), 10000, 1000, 11);
        const bool ok = prof.declared_k == 2.0 && prof.observed_k <= 2.0 * (1 + 1e-12) && prof.modulus_violations == 0 &&
                        prof.rsum_violations == 0;
        return Outcome{ok, "declared K " + num(prof.declared_k) + ", observed K " + num(prof.observed_k) +
                               ", modulus violations " + std::to_string(prof.modulus_violations) + ", r-sum violations " +
                               std::to_string(prof.rsum_violations)};
    });

    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}

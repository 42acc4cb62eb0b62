#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli_harness.hpp"
#include "estim/checks.hpp"
#include "estim/errors.hpp"
#include "estim/expr.hpp"
#include "estim/generator.hpp"
#include "estim/oracle.hpp"
#include "estim/parser.hpp"
#include "estim/printer.hpp"
#include "estim/rewrite.hpp"

using namespace estim;
using nlohmann::json;

namespace {

// Budgets and tolerances, pinned.
constexpr double kTruthTableBudgetMs = 1.0;
constexpr double kReplayBudgetMs = 1000.0;
constexpr double kIdentitySuiteBudgetMs = 10000.0;
constexpr double kRequirementBudgetMs = 30000.0;
constexpr double kExpectationBudgetMs = 1000.0;
constexpr double kGridBudgetMs = 1000.0;
constexpr double kRoundTripBudgetMs = 5000.0;
constexpr double kGridTolerance = 1e-6;
constexpr double kTriangularTolerance = 1e-3;

struct Criterion {
    bool pass = true;
    std::string detail;
    std::vector<std::string> problems;

    void fail(const std::string& why) {
        pass = false;
        if (problems.size() < 5) problems.push_back(why);
    }
    void require(bool condition, const std::string& why) {
        if (!condition) fail(why);
    }
};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string with_ms(std::string detail, double elapsed_ms) {
    std::ostringstream out;
    out << detail << " (" << elapsed_ms << " ms)";
    return out.str();
}

void report(int index, const std::string& name, const Criterion& c) {
    std::cout << (c.pass ? "PASS" : "FAIL") << " criterion " << index << ": " << name;
    if (!c.detail.empty()) std::cout << " -- " << c.detail;
    std::cout << "\n";
    for (const std::string& p : c.problems) std::cout << "      " << p << "\n";
    std::cout.flush();
}

// Uniformly random two-atom table with weights k/64 renormalized.
Model random_two_bit(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> numerator(0, 64);
    std::vector<Rational> w(4);
    Rational total = 0;
    for (auto& x : w) {
        x = Rational(numerator(rng), 64);
        total += x;
    }
    if (total == 0) {
        w[0] = 1;
        total = 1;
    }
    for (auto& x : w) x /= total;
    return Model({}, {"A", "B"}, w);
}

Model point_mass_bits(bool a, bool b) {
    Model probe({}, {"A", "B"}, {1, 0, 0, 0});
    std::vector<Rational> w(4);
    w[probe.outcome_index({}, {a, b})] = 1;
    return Model({}, {"A", "B"}, w);
}

}  // namespace

TEST_CASE("connective tables are reproduced exactly") {
    Criterion c;
    const Prop A = Prop::atom("A");
    const Prop B = Prop::atom("B");
    const Expr e_not = encode_prop(Prop::negation(A));
    const Expr e_and = encode_prop(Prop::conjunction(A, B));
    const Expr e_or = encode_prop(Prop::disjunction(A, B));
    // Exclusive or as arithmetic over the encodings: a + b - 2ab.
    const Expr e_xor = Expr::sub(Expr::add({encode_prop(A), encode_prop(B)}),
                                 Expr::mul({Expr::constant(2), encode_prop(A),
                                            encode_prop(B)}));

    const auto start = Clock::now();
    for (int bits = 0; bits < 4; ++bits) {
        const bool a = bits & 1;
        const bool b = bits & 2;
        const std::map<std::string, bool> atoms = {{"A", a}, {"B", b}};
        c.require(eval_ground(e_and, {}, atoms) == Rational((a && b) ? 1 : 0),
                  "conjunction table mismatch");
        c.require(eval_ground(e_or, {}, atoms) == Rational((a || b) ? 1 : 0),
                  "disjunction table mismatch");
        c.require(eval_ground(e_xor, {}, atoms) == Rational((a != b) ? 1 : 0),
                  "modulo-2 sum table mismatch");
    }
    for (const bool a : {false, true}) {
        c.require(eval_ground(e_not, {}, {{"A", a}, {"B", false}}) == Rational(a ? 0 : 1),
                  "negation table mismatch");
    }
    const double elapsed = ms_since(start);
    c.require(elapsed < kTruthTableBudgetMs, "time budget exceeded");
    c.detail = with_ms("negation, conjunction, disjunction, modulo-2 sum; exact", elapsed);
    report(1, "truth-table reproduction", c);
    CHECK(c.pass);
}

TEST_CASE("the emitted product trace replays and stays oracle-equal") {
    Criterion c;
    const auto start = Clock::now();

    const CliResult run = run_cli({"derive", "product", "--format", "json"});
    c.require(run.exit_code == 0, "derive product exited " + std::to_string(run.exit_code));
    json doc;
    std::vector<Expr> states;
    if (c.pass) {
        doc = json::parse(run.out);
        c.require(parse_expr(doc["initial"].get<std::string>()) ==
                      parse_expr("est(n(A) * n(B) | I)"),
                  "initial state is not the estimated product");
        c.require(parse_expr(doc["final"].get<std::string>()) ==
                      parse_expr("est(n(A) | I) * est(n(B) | A, I)"),
                  "final state is not the chained product form");
        c.require(doc["steps"].size() == 4, "expected exactly 4 steps");
        const std::vector<std::string> expected_rules = {"tower_expand", "scalar_out",
                                                         "two_valued", "const_out"};
        for (std::size_t i = 0; i < doc["steps"].size() && i < 4; ++i) {
            c.require(doc["steps"][i]["rule"] == expected_rules[i],
                      "step " + std::to_string(i + 1) + " uses rule " +
                          doc["steps"][i]["rule"].get<std::string>() + ", expected " +
                          expected_rules[i]);
        }
        states.push_back(parse_expr(doc["initial"].get<std::string>()));
        for (const auto& step : doc["steps"]) {
            states.push_back(parse_expr(step["before"].get<std::string>()));
            states.push_back(parse_expr(step["after"].get<std::string>()));
        }
        states.push_back(parse_expr(doc["final"].get<std::string>()));
    }

    int skipped = 0;
    int checked = 0;
    if (c.pass) {
        std::mt19937_64 rng(1002);
        for (int t = 0; t < 100; ++t) {
            const Model model = random_two_bit(rng);
            OracleEvaluator ev(model);
            try {
                const Rational reference = ev.eval(states.front());
                for (const Expr& s : states) {
                    if (ev.eval(s) != reference) {
                        c.fail("state diverges on model " + model.to_json().dump());
                        break;
                    }
                }
                ++checked;
            } catch (const ZeroWeightConditioning&) {
                ++skipped;  // conditioning on A is undefined when P(A) = 0
            }
            if (!c.pass) break;
        }
        c.require(checked + skipped == 100, "model accounting is off");
    }

    // The skip branch itself, on a table with P(A) = 0.
    if (c.pass) {
        const Model zero_a = point_mass_bits(false, true);
        OracleEvaluator ev(zero_a);
        try {
            ev.eval(parse_expr("est(n(B) | A, I)"));
            c.fail("conditioning on weight-zero A did not raise");
        } catch (const ZeroWeightConditioning&) {
        }
    }

    const double elapsed = ms_since(start);
    c.require(elapsed < kReplayBudgetMs, "time budget exceeded");
    c.detail = with_ms("4 pinned steps; " + std::to_string(checked) +
                           " random two-bit models oracle-equal, " +
                           std::to_string(skipped) + " skipped at P(A)=0",
                       elapsed);
    report(2, "product derivation replay", c);
    CHECK(c.pass);
}

TEST_CASE("negation, sum, and product identities across random tables") {
    Criterion c;
    const auto start = Clock::now();
    std::mt19937_64 rng(1003);
    int skipped = 0;
    for (int t = 0; t < 1000 && c.pass; ++t) {
        const Model model = random_two_bit(rng);
        const IdentityReport r = verify_identities(model);
        c.require(r.negation_ok, "negation identity fails: " + r.detail);
        c.require(r.sum_ok, "sum identity fails: " + r.detail);
        const Rational pa = oracle_eval(parse_expr("est(n(A) | I)"), model);
        if (r.product_skipped) {
            ++skipped;
            c.require(pa == 0, "product skipped although P(A) is " + to_string(pa));
        } else {
            c.require(r.product_ok, "product identity fails: " + r.detail);
            c.require(pa != 0, "product checked although P(A) = 0");
        }
    }
    // Edge tables exercise the skip branch deterministically.
    for (const Model& edge : {point_mass_bits(false, false), point_mass_bits(false, true)}) {
        const IdentityReport r = verify_identities(edge);
        c.require(r.ok() && r.product_skipped, "weight-zero A table was not skipped");
    }
    const double elapsed = ms_since(start);
    c.require(elapsed < kIdentitySuiteBudgetMs, "time budget exceeded");
    c.detail = with_ms("1000 random weight tables, denominator 64; exact; product skipped on " +
                           std::to_string(skipped),
                       elapsed);
    report(3, "probability-rule suite", c);
    CHECK(c.pass);
}

TEST_CASE("the four defining properties across random model-expression pairs") {
    Criterion c;
    const auto start = Clock::now();
    std::mt19937_64 rng(1004);
    PropertyStats known, bounds, linearity, tower;
    for (int t = 0; t < 1000 && c.pass; ++t) {
        const Model model = random_model(rng);
        const RequirementsReport r = check_requirements(model, 1, rng(), 5);
        const auto absorb = [&c](PropertyStats& into, const PropertyStats& from) {
            into.trials += from.trials;
            into.passed += from.passed;
            into.failed += from.failed;
            into.skipped += from.skipped;
            for (const std::string& f : from.failures) c.fail(f);
        };
        absorb(known, r.known_evaluation);
        absorb(bounds, r.bounds);
        absorb(linearity, r.linearity);
        absorb(tower, r.tower);
    }
    c.require(known.trials == 1000 && known.failed == 0, "known-evaluation failures");
    c.require(bounds.trials == 1000 && bounds.failed == 0, "bounds failures");
    c.require(linearity.trials == 1000 && linearity.failed == 0, "linearity failures");
    c.require(tower.trials == 1000 && tower.failed == 0, "tower failures");
    const double elapsed = ms_since(start);
    c.require(elapsed < kRequirementBudgetMs, "time budget exceeded");
    std::ostringstream d;
    d << "1000 pairs, depth <= 5; skips: bounds " << bounds.skipped << ", linearity "
      << linearity.skipped << ", tower " << tower.skipped;
    c.detail = with_ms(d.str(), elapsed);
    report(4, "estimation requirements suite", c);
    CHECK(c.pass);
}

TEST_CASE("expectation decomposition fixtures: exact probability laws") {
    Criterion c;
    const auto start = Clock::now();
    std::vector<Model> fixtures;
    for (int size = 2; size <= 8; ++size) {
        std::vector<Rational> domain;
        for (int v = 0; v < size; ++v) domain.push_back(v);
        const auto make = [&](std::vector<Rational> weights) {
            fixtures.emplace_back(
                std::vector<Model::Variable>{Model::Variable{"x", domain}},
                std::vector<std::string>{}, std::move(weights));
        };
        // Uniform over the domain.
        make(std::vector<Rational>(size, Rational(1, size)));
        // Point mass on the last value: every other point has weight zero.
        std::vector<Rational> point(size, 0);
        point.back() = 1;
        make(std::move(point));
        // Skewed, with an interior zero-weight point.
        std::vector<Rational> skew;
        Rational total = 0;
        for (int v = 0; v < size; ++v) {
            const Rational w = (v == size / 2) ? Rational(0) : Rational(v + 1);
            skew.push_back(w);
            total += w;
        }
        for (auto& w : skew) w /= total;
        make(std::move(skew));
    }
    // One fixture with an atom, so decomposition marginalizes over it.
    fixtures.emplace_back(
        std::vector<Model::Variable>{Model::Variable{"x", {1, 2}}},
        std::vector<std::string>{"A"},
        std::vector<Rational>{Rational(1, 6), Rational(1, 3), Rational(1, 4),
                              Rational(1, 4)});

    int checked = 0;
    for (const Model& model : fixtures) {
        try {
            const ExpectationDecomposition d = expectation_decomposition(model, "x");
            const auto& domain = model.variables()[0].domain;
            Rational total = 0;
            Rational weighted = 0;
            for (std::size_t i = 0; i < d.probabilities.size(); ++i) {
                c.require(d.probabilities[i] >= 0, "negative probability weight");
                total += d.probabilities[i];
                weighted += domain[i] * d.probabilities[i];
            }
            c.require(total == 1, "weights sum to " + to_string(total));
            c.require(weighted == d.estimate, "weighted sum disagrees with the estimate");
            c.require(d.estimate == oracle_eval(parse_expr("est(x | I)"), model),
                      "estimate disagrees with direct evaluation");
            ++checked;
        } catch (const Error& e) {
            c.fail(std::string("fixture rejected: ") + e.what() + " on " +
                   model.to_json().dump());
        }
    }
    const double elapsed = ms_since(start);
    c.require(elapsed < kExpectationBudgetMs, "time budget exceeded");
    c.detail = with_ms(std::to_string(checked) +
                           " fixtures, domain sizes 2-8 with point masses and "
                           "zero-weight points; exact",
                       elapsed);
    report(5, "expectation theorem", c);
    CHECK(c.pass);
}

TEST_CASE("continuous grids: uniform and triangular densities") {
    Criterion c;
    const auto start = Clock::now();
    const int n = 1000;

    const GridEstimate uniform = grid_eval(GridModel{0.0, 1.0, std::vector<double>(n, 1.0)});
    c.require(std::abs(uniform.value - 0.5) <= kGridTolerance,
              "uniform mean off by " + std::to_string(uniform.value - 0.5));
    c.require(std::abs(uniform.normalization - 1.0) <= kGridTolerance,
              "uniform normalization off");

    GridModel tri{0.0, 1.0, {}};
    for (int i = 0; i < n; ++i) tri.densities.push_back(2.0 * (i + 0.5) / n);
    const GridEstimate triangular = grid_eval(tri);
    c.require(std::abs(triangular.value - 2.0 / 3.0) <= kTriangularTolerance,
              "triangular mean off by " + std::to_string(triangular.value - 2.0 / 3.0));
    c.require(std::abs(triangular.normalization - 1.0) <= kGridTolerance,
              "triangular normalization off");

    const double elapsed = ms_since(start);
    c.require(elapsed < kGridBudgetMs, "time budget exceeded");
    std::ostringstream d;
    d << "n=" << n << ": uniform mean " << uniform.value << ", triangular mean "
      << triangular.value;
    c.detail = with_ms(d.str(), elapsed);
    report(6, "continuous grid estimates", c);
    CHECK(c.pass);
}

TEST_CASE("corrupting any single rule makes the check suite fail") {
    Criterion c;
    const auto start = Clock::now();
    int detected = 0;
    std::vector<std::string> names;
    for (const RewriteRule& r : all_rules()) names.push_back(r.name);
    for (const std::string& name : names) {
        CheckConfig config;
        config.trials = 5;
        config.seed = 11;
        const CheckReport report = run_checks(config, make_tampered(all_rules(), name));
        const PropertyResult* soundness = report.find("rule-soundness");
        const bool caught = !report.ok() && soundness != nullptr && soundness->failed > 0 &&
                            !soundness->counterexamples.empty();
        if (caught) {
            ++detected;
        } else {
            c.fail("corrupting '" + name + "' went unnoticed");
        }
    }
    c.require(detected == static_cast<int>(names.size()), "not every corruption detected");
    const double elapsed = ms_since(start);
    c.detail = with_ms(std::to_string(detected) + "/" + std::to_string(names.size()) +
                           " corrupted rules rejected with counterexamples",
                       elapsed);
    report(7, "rewrite soundness under mutation", c);
    CHECK(c.pass);
}

TEST_CASE("printing and reparsing random expressions is the identity") {
    Criterion c;
    const auto start = Clock::now();
    std::mt19937_64 rng(1008);
    int checked = 0;
    for (int t = 0; t < 1000 && c.pass; ++t) {
        const Expr e = random_syntax_expr(rng, 6);
        c.require(canonicalize(e) == e, "generator output is not canonical");
        const std::string printed = print_expr(e);
        Expr back = Expr::constant(0);
        try {
            back = parse_expr(printed);
        } catch (const SyntaxError& err) {
            c.fail("unparseable rendering: " + printed + " (" + err.what() + ")");
            break;
        }
        c.require(back == e, "round trip changed: " + printed);
        c.require(print_expr(back) == printed, "second rendering differs: " + printed);
        ++checked;
    }
    const double elapsed = ms_since(start);
    c.require(elapsed < kRoundTripBudgetMs, "time budget exceeded");
    c.detail = with_ms(std::to_string(checked) + " random expressions, depth <= 6", elapsed);
    report(8, "parser round-trip", c);
    CHECK(c.pass);
}

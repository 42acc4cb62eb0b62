#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "estim/errors.hpp"
#include "estim/expr.hpp"
#include "estim/oracle.hpp"
#include "estim/parser.hpp"
#include "estim/printer.hpp"
#include "estim/rewrite.hpp"

using namespace estim;

namespace {

const Prop A = Prop::atom("A");
const Prop B = Prop::atom("B");

Expr parsed(const std::string& text) { return parse_expr(text); }

// Applies the named registry rule at the path and returns the rendering.
std::string fire(const std::string& rule, const std::string& text,
                 std::vector<std::size_t> path = {}) {
    const auto r = find_rule(rule);
    REQUIRE(r.has_value());
    return print_expr(apply_rule_at(parsed(text), *r, path));
}

// Both atoms, uniform and skewed weight tables for oracle cross-checks.
Model uniform_bits() {
    return Model({}, {"A", "B"},
                 {Rational(1, 4), Rational(1, 4), Rational(1, 4), Rational(1, 4)});
}

Model skewed_bits() {
    Model probe({}, {"A", "B"}, {1, 0, 0, 0});
    std::vector<Rational> w(4);
    w[probe.outcome_index({}, {false, false})] = Rational(1, 2);
    w[probe.outcome_index({}, {true, false})] = Rational(1, 4);
    w[probe.outcome_index({}, {false, true})] = Rational(1, 8);
    w[probe.outcome_index({}, {true, true})] = Rational(1, 8);
    return Model({}, {"A", "B"}, w);
}

// Every step of the trace preserves the oracle value of the whole
// expression, and the endpoints match initial and final.
void check_trace_sound(const DerivationTrace& trace, const Model& model) {
    OracleEvaluator ev(model);
    const Rational reference = ev.eval(trace.initial);
    for (const TraceStep& s : trace.steps) {
        CAPTURE(s.rule.name);
        CHECK(ev.eval(s.before) == reference);
        CHECK(ev.eval(s.after) == reference);
    }
    CHECK(ev.eval(trace.final) == reference);
    if (!trace.steps.empty()) {
        CHECK(trace.steps.front().before == trace.initial);
        CHECK(trace.steps.back().after == trace.final);
    }
}

}  // namespace

TEST_CASE("registry: names, order, and law strings") {
    const auto& norm = normalization_rules();
    const std::vector<std::string> expected = {"known_eval",  "prop_encode", "delta_as_prop",
                                               "linear_sum",  "scalar_out",  "tower",
                                               "const_out",   "two_valued"};
    REQUIRE(norm.size() == expected.size());
    for (std::size_t i = 0; i < norm.size(); ++i) CHECK(norm[i].name == expected[i]);

    const auto all = all_rules();
    CHECK(all.size() == norm.size() + 2);
    CHECK(all[norm.size()].name == "affine_out");
    CHECK(all[norm.size() + 1].name == "sum_fold");
    for (const auto& r : all) {
        CHECK_FALSE(r.law.empty());
        CHECK(static_cast<bool>(r.apply));
    }
    CHECK(find_rule("sum_fold").has_value());
    CHECK_FALSE(find_rule("no_such_rule").has_value());
}

TEST_CASE("each rule fires with its pinned result") {
    CHECK(fire("known_eval", "est(2*x | x=1, I)") == "2");
    CHECK(fire("prop_encode", "est(n(not A) | I)", {0}) == "est(1 - n(A) | I)");
    CHECK(fire("prop_encode", "est(n(A and B) | I)", {0}) == "est(n(A) * n(B) | I)");
    CHECK(fire("prop_encode", "est(n(A or B) | I)", {0}) ==
          "est(n(A) + n(B) - n(A) * n(B) | I)");
    CHECK(fire("delta_as_prop", "est(delta(x, 1) | I)", {0}) == "est(n(x=1) | I)");
    CHECK(fire("linear_sum", "est(x + n(A) | I)") == "est(x | I) + est(n(A) | I)");
    CHECK(fire("scalar_out", "est(x * n(A) | x=?, I)") == "x * est(n(A) | x, I)");
    CHECK(fire("tower", "est(est(x | x=?, I) | I)") == "est(x | I)");
    CHECK(fire("const_out", "est(est(x | I) * n(A) | I)") ==
          "est(x | I) * est(n(A) | I)");
    CHECK(fire("two_valued", "n(A) * n(A)") == "n(A)");
    CHECK(fire("affine_out", "est(2*x + 3 | I)") == "3 + 2 * est(x | I)");
    CHECK(fire("sum_fold", "est(x | I) + est(n(A) | I)") == "est(x + n(A) | I)");
}

TEST_CASE("rules refuse to fire off their domain") {
    const auto rejects = [](const std::string& rule, const std::string& text,
                            std::vector<std::size_t> path = {}) {
        const auto r = find_rule(rule);
        REQUIRE(r.has_value());
        CAPTURE(rule);
        CAPTURE(text);
        CHECK_THROWS_AS(apply_rule_at(parsed(text), *r, path), DomainError);
    };
    rejects("known_eval", "est(x | I)");             // nothing determines x
    rejects("prop_encode", "est(n(A) | I)", {0});    // atoms stay as leaves
    rejects("linear_sum", "est(x | I)");             // no sum in the body
    rejects("scalar_out", "est(x * n(A) | I)");      // x is not known here
    rejects("tower", "est(est(x | x=2, I) | I)");    // assignment, not parameter
    rejects("const_out", "est(x * n(A) | I)");       // x is bound by the body
    rejects("two_valued", "x * x");                  // not certified two-valued
    rejects("sum_fold", "est(x | I) + est(n(A) | J)");  // contexts differ
}

TEST_CASE("two-valued substitution: direct form and certification") {
    // Replaces the factor by 1 in the other factors only.
    CHECK(print_expr(apply_two_valued(parsed("n(A) * (1 + n(A))"), parsed("n(A)"))) ==
          "2 * n(A)");
    RuleOptions certified;
    certified.two_valued_unknowns.insert("t");
    CHECK(print_expr(apply_two_valued(parsed("t * (x + t)"), parsed("t"), certified)) ==
          "t * (1 + x)");

    const auto message = [](const auto& thunk, const std::string& fragment) {
        try {
            thunk();
            FAIL_CHECK("expected a domain error");
        } catch (const DomainError& e) {
            CHECK(std::string(e.what()).find(fragment) != std::string::npos);
        }
    };
    message([&] { apply_two_valued(parsed("x * n(A)"), parsed("x")); },
            "not certified two-valued");
    message([&] { apply_two_valued(parsed("n(A) * n(B)"), parsed("n(C)")); },
            "not a factor of the product");
    message([&] { apply_two_valued(parsed("n(A) * n(B)"), parsed("n(A)")); },
            "no other factor depends on");
}

TEST_CASE("navigation: subexpressions, splicing, misapplication") {
    const Expr e = parsed("est(x + n(A) | I)");
    CHECK(subexpr_at(e, {}) == e);
    CHECK(print_expr(subexpr_at(e, {0})) == "x + n(A)");
    CHECK(print_expr(subexpr_at(e, {0, 1})) == "n(A)");
    CHECK_THROWS_AS(subexpr_at(parsed("x + 1"), {5}), DomainError);
    CHECK_THROWS_AS(subexpr_at(e, {0, 0, 0}), DomainError);

    // Splicing recanonicalizes the spine: replacing x in 1 + x folds to 3.
    CHECK(print_expr(splice_at(e, {0, 0}, parsed("5"))) == "est(5 + n(A) | I)");
    CHECK(splice_at(parsed("x + 1"), {1}, parsed("2")) == Expr::constant(3));
    CHECK(print_expr(splice_at(parsed("x + 1"), {0}, parsed("2"))) == "2 + x");

    const auto rule = find_rule("linear_sum");
    try {
        apply_rule_at(parsed("est(x | I)"), *rule, {});
        FAIL_CHECK("expected a domain error");
    } catch (const DomainError& err) {
        CHECK(std::string(err.what()) == "rule 'linear_sum' does not apply at root");
    }
}

TEST_CASE("normalize: pinned end states and step counts") {
    const auto n1 = normalize(parsed("est(n(not A) | I)"));
    CHECK(print_expr(n1.first) == "1 - est(n(A) | I)");
    CHECK(n1.second.steps.size() == 4);
    CHECK(n1.second.initial == parsed("est(n(not A) | I)"));
    CHECK(n1.second.final == n1.first);

    // Fully determined bodies collapse to constants.
    const auto n2 = normalize(parsed("est(delta(x, 2) + 3 | x=2, I)"));
    CHECK(n2.first == Expr::constant(4));

    // Partial estimation collapses through the tower rule.
    const auto n3 = normalize(parsed("est(est(n(A) | B=?, I) | I)"));
    CHECK(print_expr(n3.first) == "est(n(A) | I)");
    CHECK(n3.second.steps.size() == 1);
    CHECK(n3.second.steps[0].rule.name == "tower");

    // Fixpoints produce empty traces.
    const auto n4 = normalize(parsed("5"));
    CHECK(n4.first == Expr::constant(5));
    CHECK(n4.second.steps.empty());
    const auto n5 = normalize(parsed("est(n(A) | I)"));
    CHECK(n5.first == parsed("est(n(A) | I)"));
    CHECK(n5.second.steps.empty());
}

TEST_CASE("normalize runs out of fuel rather than looping") {
    RuleStrategy strategy;
    strategy.fuel = 1;
    try {
        normalize(parsed("est(n(A or B) | I) + est(n(not A) | I)"), strategy);
        FAIL_CHECK("expected fuel exhaustion");
    } catch (const FuelExhausted& e) {
        CHECK(e.steps == 1);
        CHECK(std::string(e.what()) == "rewrite fuel exhausted after 1 steps");
    }
    // The same input finishes with enough fuel.
    strategy.fuel = 100;
    CHECK_NOTHROW(normalize(parsed("est(n(A or B) | I) + est(n(not A) | I)"), strategy));
}

TEST_CASE("restricting the rule set restricts the fixpoint") {
    RuleStrategy only_encode;
    only_encode.rules = {"prop_encode"};
    const auto n = normalize(parsed("est(n(not A) | I)"), only_encode);
    CHECK(print_expr(n.first) == "est(1 - n(A) | I)");
    CHECK(n.second.steps.size() == 1);

    RuleStrategy unknown_name;
    unknown_name.rules = {"definitely_missing"};
    CHECK_THROWS_AS(normalize(parsed("x"), unknown_name), DomainError);
}

TEST_CASE("negation derivation: two steps to the complement form") {
    const DerivationTrace t = derive_negation(A, Context("I"));
    CHECK(t.initial == parsed("est(n(not A) | I)"));
    CHECK(print_expr(t.final) == "1 - est(n(A) | I)");
    REQUIRE(t.steps.size() == 2);
    CHECK(t.steps[0].rule.name == "prop_encode");
    CHECK(t.steps[0].path == std::vector<std::size_t>{0});
    CHECK(t.steps[1].rule.name == "affine_out");
    CHECK(t.steps[1].path.empty());
    CHECK(replay(t));
    check_trace_sound(t, uniform_bits());
    check_trace_sound(t, skewed_bits());
}

TEST_CASE("sum derivation: two steps to inclusion-exclusion") {
    const DerivationTrace t = derive_sum(A, B, Context("I"));
    CHECK(t.initial == parsed("est(n(A or B) | I)"));
    CHECK(print_expr(t.final) ==
          "est(n(A) | I) + est(n(B) | I) - est(n(A) * n(B) | I)");
    REQUIRE(t.steps.size() == 2);
    CHECK(t.steps[0].rule.name == "prop_encode");
    CHECK(t.steps[1].rule.name == "affine_out");
    CHECK(replay(t));
    check_trace_sound(t, uniform_bits());
    check_trace_sound(t, skewed_bits());
}

TEST_CASE("product derivation: the four-step auxiliary-variable route") {
    const DerivationTrace t = derive_product(A, B, Context("I"));
    CHECK(t.initial == parsed("est(n(A) * n(B) | I)"));
    CHECK(t.final == parsed("est(n(A) | I) * est(n(B) | A, I)"));
    REQUIRE(t.steps.size() == 4);
    CHECK(t.steps[0].rule.name == "tower_expand");
    CHECK(t.steps[0].path.empty());
    CHECK(t.steps[1].rule.name == "scalar_out");
    CHECK(t.steps[1].path == std::vector<std::size_t>{0});
    CHECK(t.steps[2].rule.name == "two_valued");
    CHECK(t.steps[2].path == std::vector<std::size_t>{0});
    CHECK(t.steps[3].rule.name == "const_out");
    CHECK(t.steps[3].path.empty());

    // The intermediate states, pinned.
    CHECK(print_expr(t.steps[0].after) == "est(est(n(A) * n(B) | A=?, I) | I)");
    CHECK(print_expr(t.steps[1].after) == "est(n(A) * est(n(B) | A=?, I) | I)");
    CHECK(print_expr(t.steps[2].after) == "est(n(A) * est(n(B) | A, I) | I)");

    CHECK(to_probability_form(t.final) == "P(A|I)P(B|A,I)");
    CHECK(replay(t));
    check_trace_sound(t, uniform_bits());
    check_trace_sound(t, skewed_bits());

    // The same derivation relative to extra background knowledge that leaves
    // A and B undetermined.
    const Prop C = Prop::atom("C");
    const DerivationTrace cond = derive_product(A, B, Context("I", {CtxGiven{C}}));
    CHECK(cond.initial == parsed("est(n(A) * n(B) | C, I)"));
    CHECK(cond.final == parsed("est(n(A) | C, I) * est(n(B) | A, C, I)"));
    CHECK(replay(cond));
    const Model three({}, {"A", "B", "C"},
                      std::vector<Rational>(8, Rational(1, 8)));
    check_trace_sound(cond, three);

    CHECK_THROWS_AS(derive_product(A, A, Context("I")), DomainError);
    try {
        derive_product(A, A, Context("I"));
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()) ==
              "the product derivation needs two distinct propositions");
    }

    // A context that already settles one proposition cannot host the script.
    try {
        derive_product(A, B, Context("I", {CtxGiven{B}}));
        FAIL_CHECK("expected a domain error");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("leaves both propositions undetermined") !=
              std::string::npos);
    }
    CHECK_THROWS_AS(derive_product(A, B, Context("I", {CtxKnownTruth{A}})), DomainError);
}

TEST_CASE("trace text: numbered steps with rule, path, and arrow") {
    const std::string text = format_trace(derive_product(A, B, Context("I")));
    CHECK(text ==
          "step 1: [tower_expand @ root] est(n(A) * n(B) | I) ⇒ "
          "est(est(n(A) * n(B) | A=?, I) | I)\n"
          "step 2: [scalar_out @ 0] est(est(n(A) * n(B) | A=?, I) | I) ⇒ "
          "est(n(A) * est(n(B) | A=?, I) | I)\n"
          "step 3: [two_valued @ 0] est(n(A) * est(n(B) | A=?, I) | I) ⇒ "
          "est(n(A) * est(n(B) | A, I) | I)\n"
          "step 4: [const_out @ root] est(n(A) * est(n(B) | A, I) | I) ⇒ "
          "est(n(A) | I) * est(n(B) | A, I)\n");
    CHECK(format_path({}) == "root");
    CHECK(format_path({0, 2, 1}) == "0.2.1");
    // Probability rendering converts each convertible estimate.
    const std::string prob = format_trace(derive_negation(A, Context("I")), true);
    CHECK(prob.find("1 - P(A|I)") != std::string::npos);
}

TEST_CASE("expectation derivation: decomposition and unit normalization") {
    const ExpectationDerivation d = derive_expectation("x", {1, 2, 3}, Context("I"));

    CHECK(d.decomposition.initial == parsed("est(x | I)"));
    CHECK(print_expr(d.decomposition.final) ==
          "est(delta(1, x) | I) + 2 * est(delta(2, x) | I) + 3 * est(delta(3, x) | I)");
    REQUIRE(d.decomposition.steps.size() == 4);
    CHECK(d.decomposition.steps[0].rule.name == "completeness_expand");
    CHECK(d.decomposition.steps[1].rule.name == "linear_sum");
    CHECK(d.decomposition.steps[2].rule.name == "scalar_out");
    CHECK(d.decomposition.steps[3].rule.name == "scalar_out");
    CHECK(replay(d.decomposition));

    CHECK(d.normalization.initial ==
          parsed("est(delta(1, x) | I) + est(delta(2, x) | I) + est(delta(3, x) | I)"));
    CHECK(d.normalization.final == Expr::constant(1));
    REQUIRE(d.normalization.steps.size() == 3);
    CHECK(d.normalization.steps[0].rule.name == "sum_fold");
    CHECK(d.normalization.steps[1].rule.name == "delta_complete");
    CHECK(d.normalization.steps[2].rule.name == "known_eval");
    CHECK(replay(d.normalization));

    const Model m({Model::Variable{"x", {1, 2, 3}}}, {},
                  {Rational(1, 6), Rational(1, 3), Rational(1, 2)});
    check_trace_sound(d.decomposition, m);
    check_trace_sound(d.normalization, m);

    CHECK_THROWS_AS(derive_expectation("x", {}, Context("I")), DomainError);
    CHECK_THROWS_AS(derive_expectation("x", {1, 1}, Context("I")), DomainError);
}

TEST_CASE("parameterized rules: expansion factories") {
    const RewriteRule grow = make_tower_expand(CtxParam{"y"});
    CHECK(grow.name == "tower_expand");
    CHECK(print_expr(apply_rule_at(parsed("est(n(A) | I)"), grow, {})) ==
          "est(est(n(A) | y, I) | I)");

    const RewriteRule mark = make_tower_expand(CtxKnownTruth{A});
    CHECK(print_expr(apply_rule_at(parsed("est(n(A) * n(B) | I)"), mark, {})) ==
          "est(est(n(A) * n(B) | A=?, I) | I)");

    CHECK_THROWS_AS(make_tower_expand(CtxAssign{"x", Rational(1)}), DomainError);
    CHECK_THROWS_AS(make_tower_expand(CtxGiven{A}), DomainError);

    const RewriteRule spread = make_completeness_expand("x", {1, 2});
    CHECK(spread.name == "completeness_expand");
    CHECK(print_expr(apply_rule_at(parsed("est(x | I)"), spread, {0})) ==
          "est(delta(1, x) + 2 * delta(2, x) | I)");
    CHECK_THROWS_AS(make_completeness_expand("x", {}), DomainError);
    CHECK_THROWS_AS(make_completeness_expand("x", {1, 1}), DomainError);

    const RewriteRule unit = make_delta_complete("x", {1, 2});
    CHECK(unit.name == "delta_complete");
    CHECK(print_expr(apply_rule_at(parsed("est(delta(1, x) + delta(2, x) | I)"), unit,
                                   {0})) == "est(1 | I)");
    CHECK_THROWS_AS(make_delta_complete("x", {}), DomainError);
}

TEST_CASE("replay notices a falsified trace") {
    DerivationTrace t = derive_product(A, B, Context("I"));
    REQUIRE(replay(t));

    DerivationTrace wrong_after = t;
    wrong_after.steps[1].after = parsed("est(n(A) | I)");
    std::string why;
    CHECK_FALSE(replay(wrong_after, &why));
    CHECK_FALSE(why.empty());

    DerivationTrace wrong_final = t;
    wrong_final.final = parsed("est(n(B) | I) * est(n(A) | B, I)");
    why.clear();
    CHECK_FALSE(replay(wrong_final, &why));
    CHECK_FALSE(why.empty());

    DerivationTrace wrong_rule = t;
    wrong_rule.steps[0].rule = *find_rule("linear_sum");
    CHECK_FALSE(replay(wrong_rule));

    DerivationTrace wrong_path = t;
    wrong_path.steps[3].path = {0};
    CHECK_FALSE(replay(wrong_path));
}

TEST_CASE("normalize traces replay and stay oracle-equal per step") {
    const Model bits = skewed_bits();
    const Model mixed({Model::Variable{"x", {1, 2}}}, {"A"},
                      {Rational(1, 4), Rational(1, 4), Rational(1, 4), Rational(1, 4)});
    const std::vector<std::pair<std::string, const Model*>> inputs = {
        {"est(n(not (A and B)) | I)", &bits},
        {"est(n(A or B) + 2 * n(A) | I)", &bits},
        {"est(est(n(A) | B=?, I) | I)", &bits},
        {"est(delta(x, 1) | x=1, I) + est(n(A) | I)", &mixed},
        {"est(x * n(A) | x=2, I)", &mixed},
    };
    for (const auto& [text, model] : inputs) {
        CAPTURE(text);
        const auto [result, trace] = normalize(parsed(text));
        CHECK(replay(trace));
        check_trace_sound(trace, *model);
        // Normal forms are fixpoints.
        const auto again = normalize(result);
        CHECK(again.first == result);
        CHECK(again.second.steps.empty());
    }
}

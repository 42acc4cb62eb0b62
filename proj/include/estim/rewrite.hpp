#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "estim/expr.hpp"

namespace estim {

// Per-run knobs a rule may consult. An unknown listed here is certified to
// take only the values 0 and 1.
struct RuleOptions {
    std::set<std::string> two_valued_unknowns;
};

// A named rewrite. apply attempts the rewrite at the root of the given node
// and returns the replacement, or nullopt when the rule does not match there.
struct RewriteRule {
    std::string name;
    // The identity the rule applies, stated over the concrete syntax.
    std::string law;
    std::function<std::optional<Expr>(const Expr&, const RuleOptions&)> apply;
};

// Rules tried by normalize at every node, in fixed priority order:
// known_eval, prop_encode, delta_as_prop, linear_sum, scalar_out, tower,
// const_out, two_valued.
const std::vector<RewriteRule>& normalization_rules();

// Normalization rules plus the freestanding derivation rules (affine_out,
// sum_fold). Parameterized rules come from the make_* factories below.
std::vector<RewriteRule> all_rules();
std::optional<RewriteRule> find_rule(const std::string& name);

// est(f | C) = est(est(f | item, C) | C): introduces a marginalization
// variable. The item must be a Param or KnownTruth; anything else would
// condition instead of marginalize, and is rejected with DomainError.
RewriteRule make_tower_expand(CtxItem item);

// x = sum_i x_i * delta(x_i, x) over the declared domain. The domain must be
// nonempty and duplicate-free.
RewriteRule make_completeness_expand(std::string unknown, std::vector<Rational> domain);

// sum_i delta(x_i, x) = 1 over the declared domain.
RewriteRule make_delta_complete(std::string unknown, std::vector<Rational> domain);

// Direct form of the two-valued substitution: within a product that contains
// the given factor, replaces that factor by 1 everywhere else it occurs.
// Throws DomainError when the factor is not certified two-valued, is not a
// factor of the product, or nothing would change.
Expr apply_two_valued(const Expr& product, const Expr& factor, const RuleOptions& opts = {});

struct RuleStrategy {
    int fuel = 10000;
    // Names resolved against normalization_rules() order; empty means all.
    std::vector<std::string> rules;
    std::set<std::string> two_valued_unknowns;
};

struct TraceStep {
    RewriteRule rule;
    std::vector<std::size_t> path;  // child indices from the root; empty = root
    Expr before;                    // whole expression before the step
    Expr after;                     // whole expression after, canonical
};

struct DerivationTrace {
    Expr initial;
    Expr final;
    RuleOptions options;
    std::vector<TraceStep> steps;
};

// The subexpression at a child path; DomainError when the path is invalid.
Expr subexpr_at(const Expr& e, const std::vector<std::size_t>& path);

// Replaces the subexpression at the path and recanonicalizes the spine.
Expr splice_at(const Expr& e, const std::vector<std::size_t>& path, Expr replacement);

// Applies the rule at the path; DomainError when it does not match there.
Expr apply_rule_at(const Expr& e, const RewriteRule& rule,
                   const std::vector<std::size_t>& path, const RuleOptions& opts = {});

// Innermost-first, leftmost, priority-ordered rewriting to a fixpoint.
// Throws FuelExhausted when the budget runs out.
std::pair<Expr, DerivationTrace> normalize(const Expr& e, const RuleStrategy& strategy = {});

// Re-applies every step of the trace and checks each intermediate and the
// final expression match. Returns false (and fills why, if given) on any
// mismatch.
bool replay(const DerivationTrace& trace, std::string* why = nullptr);

// Scripted derivations. Each returned trace replays.
//
// est(n(not A) | C)  to  1 - est(n(A) | C)
DerivationTrace derive_negation(const Prop& a, const Context& ctx);
// est(n(A or B) | C)  to  est(n(A) | C) + est(n(B) | C) - est(n(A)*n(B) | C)
DerivationTrace derive_sum(const Prop& a, const Prop& b, const Context& ctx);
// est(n(A)*n(B) | C)  to  est(n(A) | C) * est(n(B) | A, C), via the
// auxiliary-variable route: tower expansion, scalar extraction, two-valued
// substitution, constant extraction.
DerivationTrace derive_product(const Prop& a, const Prop& b, const Context& ctx);

struct ExpectationDerivation {
    // est(x | C) to sum_i x_i * est(delta(x_i, x) | C)
    DerivationTrace decomposition;
    // sum_i est(delta(x_i, x) | C) to 1
    DerivationTrace normalization;
};
ExpectationDerivation derive_expectation(const std::string& unknown,
                                         const std::vector<Rational>& domain,
                                         const Context& ctx);

// "step k: [rule @ path] before => after", one line per step.
std::string format_trace(const DerivationTrace& trace, bool probability_form = false);
std::string format_path(const std::vector<std::size_t>& path);

}  // namespace estim

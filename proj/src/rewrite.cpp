#include "estim/rewrite.hpp"

#include <algorithm>
#include <sstream>

#include "estim/errors.hpp"
#include "estim/printer.hpp"

namespace estim {

namespace {

bool contains_estim(const Expr& e) {
    if (e.kind() == ExprKind::Estim) return true;
    for (const Expr& c : e.children()) {
        if (contains_estim(c)) return true;
    }
    return false;
}

// Splits a canonical term into (coefficient, core); a pure constant has no
// core.
std::pair<Rational, std::optional<Expr>> split_coefficient(const Expr& t) {
    if (t.kind() == ExprKind::Const) return {t.const_value(), std::nullopt};
    if (t.kind() == ExprKind::Mul && t.children().front().kind() == ExprKind::Const) {
        const auto& kids = t.children();
        std::vector<Expr> rest(kids.begin() + 1, kids.end());
        return {kids.front().const_value(), Expr::mul(std::move(rest))};
    }
    return {Rational(1), t};
}

// The value of f as determined by the context facts: assignments and given
// truths substituted, remaining references all supplied by Param or
// truth-known items. nullopt when the context does not determine f.
std::optional<Expr> known_form(const Expr& f, const Context& ctx) {
    std::map<std::string, Rational> sigma;
    for (const CtxItem& it : ctx.items()) {
        if (const auto* a = std::get_if<CtxAssign>(&it)) sigma.emplace(a->name, a->value);
    }
    Expr g = substitute_unknowns(f, sigma);
    for (const CtxItem& it : ctx.items()) {
        if (const auto* gv = std::get_if<CtxGiven>(&it)) {
            g = substitute_prop_truth(g, gv->prop, true);
        }
    }
    const FreeRefs refs = free_refs(g);
    for (const auto& u : refs.unknowns) {
        if (!ctx.has_param(u)) return std::nullopt;
    }
    for (const auto& name : refs.atoms) {
        const Prop atom = Prop::atom(name);
        if (!ctx.has_given(atom) && !ctx.has_known_truth(atom)) return std::nullopt;
    }
    return g;
}

bool certified_two_valued(const Expr& t, const RuleOptions& opts) {
    switch (t.kind()) {
        case ExprKind::PropEnc:
        case ExprKind::KDelta:
            return true;
        case ExprKind::Unknown:
            return opts.two_valued_unknowns.count(t.unknown_name()) > 0;
        default:
            return false;
    }
}

// Structural replacement of free occurrences, stopping at Estim boundaries.
Expr replace_occurrences(const Expr& e, const Expr& target, const Expr& repl) {
    if (e == target) return repl;
    switch (e.kind()) {
        case ExprKind::Add:
        case ExprKind::Mul:
        case ExprKind::KDelta: {
            std::vector<Expr> kids;
            kids.reserve(e.children().size());
            bool changed = false;
            for (const Expr& c : e.children()) {
                kids.push_back(replace_occurrences(c, target, repl));
                changed = changed || kids.back() != c;
            }
            if (!changed) return e;
            if (e.kind() == ExprKind::Add) return Expr::add(std::move(kids));
            if (e.kind() == ExprKind::Mul) return Expr::mul(std::move(kids));
            return Expr::kdelta(std::move(kids[0]), std::move(kids[1]));
        }
        default:
            return e;
    }
}

// Fixes the two-valued factor's value at 1 inside a sibling.
Expr substitute_factor_one(const Expr& sibling, const Expr& factor) {
    switch (factor.kind()) {
        case ExprKind::PropEnc:
            return substitute_prop_truth(sibling, factor.prop(), true);
        case ExprKind::Unknown:
            return substitute_unknowns(sibling, {{factor.unknown_name(), Rational(1)}});
        default:
            return replace_occurrences(sibling, factor, Expr::constant(1));
    }
}

// ---------------------------------------------------------------------------
// Normalization rule bodies

std::optional<Expr> known_eval_apply(const Expr& e, const RuleOptions&) {
    if (e.kind() != ExprKind::Estim) return std::nullopt;
    std::map<std::string, Rational> sigma;
    for (const CtxItem& it : e.context().items()) {
        if (const auto* a = std::get_if<CtxAssign>(&it)) sigma.emplace(a->name, a->value);
    }
    Expr g = substitute_unknowns(e.estim_body(), sigma);
    for (const CtxItem& it : e.context().items()) {
        if (const auto* gv = std::get_if<CtxGiven>(&it)) {
            g = substitute_prop_truth(g, gv->prop, true);
        }
    }
    if (g.kind() == ExprKind::Const) return g;
    return std::nullopt;
}

std::optional<Expr> prop_encode_apply(const Expr& e, const RuleOptions&) {
    if (e.kind() != ExprKind::PropEnc) return std::nullopt;
    const Prop& p = e.prop();
    switch (p.kind()) {
        case PropKind::Not:
            return Expr::sub(Expr::constant(1), Expr::prop_enc(p.lhs()));
        case PropKind::And:
            return Expr::mul({Expr::prop_enc(p.lhs()), Expr::prop_enc(p.rhs())});
        case PropKind::Or: {
            Expr l = Expr::prop_enc(p.lhs());
            Expr r = Expr::prop_enc(p.rhs());
            return Expr::add({l, r, Expr::neg(Expr::mul({l, r}))});
        }
        default:
            return std::nullopt;
    }
}

std::optional<Expr> delta_as_prop_apply(const Expr& e, const RuleOptions&) {
    if (e.kind() != ExprKind::KDelta) return std::nullopt;
    const Expr& a = e.children()[0];
    const Expr& b = e.children()[1];
    if (a.kind() == ExprKind::Unknown && b.kind() == ExprKind::Const) {
        return Expr::prop_enc(Prop::equals(a.unknown_name(), b.const_value()));
    }
    if (a.kind() == ExprKind::Const && b.kind() == ExprKind::Unknown) {
        return Expr::prop_enc(Prop::equals(b.unknown_name(), a.const_value()));
    }
    return std::nullopt;
}

std::optional<Expr> linear_sum_apply(const Expr& e, const RuleOptions&) {
    if (e.kind() != ExprKind::Estim) return std::nullopt;
    const Expr& body = e.estim_body();
    if (body.kind() != ExprKind::Add) return std::nullopt;
    std::vector<Expr> terms;
    terms.reserve(body.children().size());
    for (const Expr& t : body.children()) {
        terms.push_back(Expr::estim(t, e.context()));
    }
    return Expr::add(std::move(terms));
}

std::optional<Expr> scalar_out_apply(const Expr& e, const RuleOptions&) {
    if (e.kind() != ExprKind::Estim) return std::nullopt;
    const Expr& body = e.estim_body();
    if (body.kind() != ExprKind::Mul) return std::nullopt;
    std::vector<Expr> known;
    std::vector<Expr> rest;
    for (const Expr& f : body.children()) {
        if (!contains_estim(f)) {
            if (auto k = known_form(f, e.context())) {
                known.push_back(std::move(*k));
                continue;
            }
        }
        rest.push_back(f);
    }
    if (known.empty()) return std::nullopt;
    if (!rest.empty()) known.push_back(Expr::estim(Expr::mul(std::move(rest)), e.context()));
    return Expr::mul(std::move(known));
}

std::optional<Expr> tower_apply(const Expr& e, const RuleOptions&) {
    if (e.kind() != ExprKind::Estim) return std::nullopt;
    const Expr& inner = e.estim_body();
    if (inner.kind() != ExprKind::Estim) return std::nullopt;
    const Context& outer_ctx = e.context();
    const Context& inner_ctx = inner.context();
    if (outer_ctx.background() != inner_ctx.background()) return std::nullopt;

    const auto fixed_items = [](const Context& c) {
        std::vector<CtxItem> out;
        for (const CtxItem& it : c.items()) {
            if (std::holds_alternative<CtxAssign>(it) || std::holds_alternative<CtxGiven>(it)) {
                out.push_back(it);
            }
        }
        return out;
    };
    const auto of = fixed_items(outer_ctx);
    const auto inf = fixed_items(inner_ctx);
    if (of.size() != inf.size()) return std::nullopt;
    for (std::size_t i = 0; i < of.size(); ++i) {
        if (compare(of[i], inf[i]) != 0) return std::nullopt;
    }
    // Every outer marginalization item must be visible inside, or collapsing
    // would change what the inner estimate depends on.
    for (const CtxItem& it : outer_ctx.items()) {
        if (const auto* p = std::get_if<CtxParam>(&it)) {
            if (!inner_ctx.has_param(p->name)) return std::nullopt;
        } else if (const auto* k = std::get_if<CtxKnownTruth>(&it)) {
            if (!inner_ctx.has_known_truth(k->prop)) return std::nullopt;
        }
    }
    return Expr::estim(inner.estim_body(), outer_ctx);
}

std::optional<Expr> const_out_apply(const Expr& e, const RuleOptions&) {
    if (e.kind() != ExprKind::Estim) return std::nullopt;
    const Expr& body = e.estim_body();
    if (free_refs(body).empty() && contains_estim(body)) return body;
    if (body.kind() != ExprKind::Mul) return std::nullopt;
    std::vector<Expr> closed;
    std::vector<Expr> rest;
    for (const Expr& f : body.children()) {
        if (contains_estim(f) && free_refs(f).empty()) {
            closed.push_back(f);
        } else {
            rest.push_back(f);
        }
    }
    if (closed.empty()) return std::nullopt;
    if (!rest.empty()) closed.push_back(Expr::estim(Expr::mul(std::move(rest)), e.context()));
    return Expr::mul(std::move(closed));
}

std::optional<Expr> two_valued_apply(const Expr& e, const RuleOptions& opts) {
    if (e.kind() != ExprKind::Mul) return std::nullopt;
    const auto& kids = e.children();
    for (std::size_t i = 0; i < kids.size(); ++i) {
        if (!certified_two_valued(kids[i], opts)) continue;
        std::vector<Expr> out;
        out.reserve(kids.size());
        bool changed = false;
        for (std::size_t j = 0; j < kids.size(); ++j) {
            if (j == i) {
                out.push_back(kids[j]);
                continue;
            }
            Expr s = substitute_factor_one(kids[j], kids[i]);
            changed = changed || s != kids[j];
            out.push_back(std::move(s));
        }
        if (changed) return Expr::mul(std::move(out));
    }
    return std::nullopt;
}

std::optional<Expr> affine_out_apply(const Expr& e, const RuleOptions&) {
    if (e.kind() != ExprKind::Estim) return std::nullopt;
    const Expr& body = e.estim_body();
    const Context& ctx = e.context();
    const auto lifted_term = [&ctx](const Expr& t) {
        auto [coeff, core] = split_coefficient(t);
        if (!core) return Expr::constant(coeff);
        Expr est = Expr::estim(*core, ctx);
        return coeff == 1 ? est : Expr::mul({Expr::constant(coeff), est});
    };
    if (body.kind() == ExprKind::Add) {
        std::vector<Expr> terms;
        terms.reserve(body.children().size());
        for (const Expr& t : body.children()) terms.push_back(lifted_term(t));
        return Expr::add(std::move(terms));
    }
    if (body.kind() == ExprKind::Mul && body.children().front().kind() == ExprKind::Const) {
        return lifted_term(body);
    }
    return std::nullopt;
}

std::optional<Expr> sum_fold_apply(const Expr& e, const RuleOptions&) {
    if (e.kind() != ExprKind::Add) return std::nullopt;
    std::optional<Context> ctx;
    std::vector<Expr> bodies;
    for (const Expr& t : e.children()) {
        if (t.kind() == ExprKind::Estim) {
            if (ctx && *ctx != t.context()) return std::nullopt;
            if (!ctx) ctx = t.context();
            bodies.push_back(t.estim_body());
        } else if (t.kind() == ExprKind::Const) {
            bodies.push_back(t);
        } else if (t.kind() == ExprKind::Mul && t.children().size() == 2 &&
                   t.children()[0].kind() == ExprKind::Const &&
                   t.children()[1].kind() == ExprKind::Estim) {
            const Expr& est = t.children()[1];
            if (ctx && *ctx != est.context()) return std::nullopt;
            if (!ctx) ctx = est.context();
            bodies.push_back(Expr::mul({t.children()[0], est.estim_body()}));
        } else {
            return std::nullopt;
        }
    }
    if (!ctx) return std::nullopt;
    return Expr::estim(Expr::add(std::move(bodies)), *ctx);
}

}  // namespace

// ---------------------------------------------------------------------------
// Registry

const std::vector<RewriteRule>& normalization_rules() {
    static const std::vector<RewriteRule> rules = {
        {"known_eval",
         "est(f | C) = v when the context's assignments and assertions determine the body as "
         "the constant v",
         known_eval_apply},
        {"prop_encode",
         "n(not P) = 1 - n(P); n(P and Q) = n(P)*n(Q); n(P or Q) = n(P) + n(Q) - n(P)*n(Q)",
         prop_encode_apply},
        {"delta_as_prop", "delta(x, c) = n(x=c)", delta_as_prop_apply},
        {"linear_sum", "est(f + g | C) = est(f | C) + est(g | C)", linear_sum_apply},
        {"scalar_out", "est(k*f | C) = k * est(f | C) when the context determines k",
         scalar_out_apply},
        {"tower", "est(est(f | v, C) | C) = est(f | C) for marginalization items v",
         tower_apply},
        {"const_out",
         "est(k | C) = k and est(k*f | C) = k * est(f | C) when k has no free reference",
         const_out_apply},
        {"two_valued", "t * f(t) = t * f(1) when t takes only the values 0 and 1",
         two_valued_apply},
    };
    return rules;
}

std::vector<RewriteRule> all_rules() {
    std::vector<RewriteRule> rules = normalization_rules();
    rules.push_back({"affine_out",
                     "est(c0 + c1*f1 + ... | C) = c0 + c1*est(f1 | C) + ...",
                     affine_out_apply});
    rules.push_back({"sum_fold", "est(f | C) + est(g | C) = est(f + g | C)", sum_fold_apply});
    return rules;
}

std::optional<RewriteRule> find_rule(const std::string& name) {
    for (const RewriteRule& r : all_rules()) {
        if (r.name == name) return r;
    }
    return std::nullopt;
}

RewriteRule make_tower_expand(CtxItem item) {
    if (!std::holds_alternative<CtxParam>(item) && !std::holds_alternative<CtxKnownTruth>(item)) {
        throw DomainError(
            "tower expansion item must be a parameter or a known-truth marker, not a "
            "conditioning fact");
    }
    return {"tower_expand",
            "est(f | C) = est(est(f | v, C) | C) for a marginalization item v",
            [item](const Expr& e, const RuleOptions&) -> std::optional<Expr> {
                if (e.kind() != ExprKind::Estim) return std::nullopt;
                try {
                    Context inner = e.context().with_item(item);
                    return Expr::estim(Expr::estim(e.estim_body(), std::move(inner)),
                                       e.context());
                } catch (const DomainError&) {
                    return std::nullopt;
                }
            }};
}

namespace {

void check_domain(const std::vector<Rational>& domain) {
    if (domain.empty()) throw DomainError("empty domain");
    for (std::size_t i = 0; i < domain.size(); ++i) {
        for (std::size_t j = i + 1; j < domain.size(); ++j) {
            if (domain[i] == domain[j]) {
                throw DomainError("duplicate domain value " + to_string(domain[i]));
            }
        }
    }
}

}  // namespace

RewriteRule make_completeness_expand(std::string unknown, std::vector<Rational> domain) {
    check_domain(domain);
    return {"completeness_expand",
            "x = sum over the domain of x_i * delta(x_i, x)",
            [unknown, domain](const Expr& e, const RuleOptions&) -> std::optional<Expr> {
                if (e.kind() != ExprKind::Unknown || e.unknown_name() != unknown) {
                    return std::nullopt;
                }
                std::vector<Expr> terms;
                terms.reserve(domain.size());
                for (const Rational& v : domain) {
                    terms.push_back(Expr::mul(
                        {Expr::constant(v),
                         Expr::kdelta(Expr::constant(v), Expr::unknown(unknown))}));
                }
                return Expr::add(std::move(terms));
            }};
}

RewriteRule make_delta_complete(std::string unknown, std::vector<Rational> domain) {
    check_domain(domain);
    std::vector<Expr> terms;
    terms.reserve(domain.size());
    for (const Rational& v : domain) {
        terms.push_back(Expr::kdelta(Expr::constant(v), Expr::unknown(unknown)));
    }
    const Expr pattern = Expr::add(std::move(terms));
    return {"delta_complete",
            "sum over the domain of delta(x_i, x) = 1",
            [pattern](const Expr& e, const RuleOptions&) -> std::optional<Expr> {
                if (e != pattern) return std::nullopt;
                return Expr::constant(1);
            }};
}

Expr apply_two_valued(const Expr& product, const Expr& factor, const RuleOptions& opts) {
    if (product.kind() != ExprKind::Mul) {
        throw DomainError("two-valued substitution applies inside a product");
    }
    if (!certified_two_valued(factor, opts)) {
        throw DomainError("factor '" + print_expr(factor) + "' is not certified two-valued");
    }
    const auto& kids = product.children();
    const auto pos = std::find(kids.begin(), kids.end(), factor);
    if (pos == kids.end()) {
        throw DomainError("'" + print_expr(factor) + "' is not a factor of the product");
    }
    std::vector<Expr> out;
    out.reserve(kids.size());
    bool changed = false;
    for (auto it = kids.begin(); it != kids.end(); ++it) {
        if (it == pos) {
            out.push_back(*it);
            continue;
        }
        Expr s = substitute_factor_one(*it, factor);
        changed = changed || s != *it;
        out.push_back(std::move(s));
    }
    if (!changed) {
        throw DomainError("no other factor depends on '" + print_expr(factor) + "'");
    }
    return Expr::mul(std::move(out));
}

// ---------------------------------------------------------------------------
// Positional application

Expr subexpr_at(const Expr& e, const std::vector<std::size_t>& path) {
    Expr cur = e;
    for (std::size_t idx : path) {
        const auto& kids = cur.children();
        if (idx >= kids.size()) {
            throw DomainError("path step " + std::to_string(idx) + " leaves the expression");
        }
        cur = kids[idx];
    }
    return cur;
}

Expr splice_at(const Expr& e, const std::vector<std::size_t>& path, Expr replacement) {
    if (path.empty()) return replacement;

    struct Rec {
        static Expr go(const Expr& node, const std::vector<std::size_t>& path, std::size_t at,
                       const Expr& repl) {
            if (at == path.size()) return repl;
            const auto& kids = node.children();
            const std::size_t idx = path[at];
            if (idx >= kids.size()) {
                throw DomainError("path step " + std::to_string(idx) +
                                  " leaves the expression");
            }
            std::vector<Expr> out = kids;
            out[idx] = go(kids[idx], path, at + 1, repl);
            switch (node.kind()) {
                case ExprKind::Add: return Expr::add(std::move(out));
                case ExprKind::Mul: return Expr::mul(std::move(out));
                case ExprKind::KDelta:
                    return Expr::kdelta(std::move(out[0]), std::move(out[1]));
                case ExprKind::Estim: return Expr::estim(std::move(out[0]), node.context());
                default:
                    throw DomainError("path descends into a leaf");
            }
        }
    };
    return Rec::go(e, path, 0, replacement);
}

Expr apply_rule_at(const Expr& e, const RewriteRule& rule, const std::vector<std::size_t>& path,
                   const RuleOptions& opts) {
    const Expr node = subexpr_at(e, path);
    auto result = rule.apply(node, opts);
    if (!result) {
        throw DomainError("rule '" + rule.name + "' does not apply at " + format_path(path));
    }
    return splice_at(e, path, std::move(*result));
}

// ---------------------------------------------------------------------------
// Normalization driver

namespace {

struct Redex {
    std::vector<std::size_t> path;
    const RewriteRule* rule;
    Expr result;
};

std::optional<Redex> find_redex(const Expr& e, const std::vector<RewriteRule>& rules,
                                const RuleOptions& opts, std::vector<std::size_t>& prefix) {
    const auto& kids = e.children();
    for (std::size_t i = 0; i < kids.size(); ++i) {
        prefix.push_back(i);
        if (auto r = find_redex(kids[i], rules, opts, prefix)) return r;
        prefix.pop_back();
    }
    for (const RewriteRule& rule : rules) {
        if (auto result = rule.apply(e, opts)) {
            return Redex{prefix, &rule, std::move(*result)};
        }
    }
    return std::nullopt;
}

}  // namespace

std::pair<Expr, DerivationTrace> normalize(const Expr& e, const RuleStrategy& strategy) {
    if (strategy.fuel < 0) throw DomainError("negative fuel budget");
    std::vector<RewriteRule> active;
    if (strategy.rules.empty()) {
        active = normalization_rules();
    } else {
        for (const std::string& name : strategy.rules) {
            auto rule = find_rule(name);
            if (!rule) throw DomainError("unknown rule '" + name + "'");
            active.push_back(std::move(*rule));
        }
    }
    const RuleOptions opts{strategy.two_valued_unknowns};

    Expr current = canonicalize(e);
    DerivationTrace trace{current, current, opts, {}};
    int steps = 0;
    for (;;) {
        std::vector<std::size_t> prefix;
        auto redex = find_redex(current, active, opts, prefix);
        if (!redex) break;
        if (steps >= strategy.fuel) throw FuelExhausted(strategy.fuel);
        Expr next = splice_at(current, redex->path, std::move(redex->result));
        trace.steps.push_back({*redex->rule, redex->path, current, next});
        current = std::move(next);
        ++steps;
    }
    trace.final = current;
    return {current, trace};
}

bool replay(const DerivationTrace& trace, std::string* why) {
    const auto fail = [&](const std::string& message) {
        if (why) *why = message;
        return false;
    };
    Expr current = trace.initial;
    for (std::size_t k = 0; k < trace.steps.size(); ++k) {
        const TraceStep& step = trace.steps[k];
        if (step.before != current) {
            return fail("step " + std::to_string(k + 1) + " starts from a different expression");
        }
        Expr redone;
        try {
            redone = apply_rule_at(current, step.rule, step.path, trace.options);
        } catch (const DomainError& e) {
            return fail("step " + std::to_string(k + 1) + ": " + e.what());
        }
        if (redone != step.after) {
            return fail("step " + std::to_string(k + 1) + " does not reproduce its result");
        }
        current = std::move(redone);
    }
    if (current != trace.final) return fail("the final expression does not match the last step");
    return true;
}

// ---------------------------------------------------------------------------
// Scripted derivations

namespace {

// Applies named steps in sequence, recording the trace.
struct Script {
    Expr current;
    DerivationTrace trace;

    explicit Script(Expr start, RuleOptions opts = {})
        : current(canonicalize(start)), trace{current, current, std::move(opts), {}} {}

    void step(const RewriteRule& rule, std::vector<std::size_t> path) {
        Expr next = apply_rule_at(current, rule, path, trace.options);
        trace.steps.push_back({rule, std::move(path), current, next});
        current = std::move(next);
    }

    void append(const DerivationTrace& sub) {
        for (const TraceStep& s : sub.steps) trace.steps.push_back(s);
        if (!sub.steps.empty()) current = sub.final;
    }

    DerivationTrace finish() {
        trace.final = current;
        std::string why;
        if (!replay(trace, &why)) throw Error("derivation does not replay: " + why);
        return trace;
    }
};

const RewriteRule& named(const char* name) {
    static std::vector<RewriteRule> rules = all_rules();
    for (const RewriteRule& r : rules) {
        if (r.name == name) return r;
    }
    throw DomainError(std::string("unknown rule '") + name + "'");
}

}  // namespace

DerivationTrace derive_negation(const Prop& a, const Context& ctx) {
    Script s(Expr::estim(Expr::prop_enc(Prop::negation(a)), ctx));
    s.step(named("prop_encode"), {0});
    s.step(named("affine_out"), {});
    return s.finish();
}

DerivationTrace derive_sum(const Prop& a, const Prop& b, const Context& ctx) {
    Script s(Expr::estim(Expr::prop_enc(Prop::disjunction(a, b)), ctx));
    s.step(named("prop_encode"), {0});
    s.step(named("affine_out"), {});
    return s.finish();
}

DerivationTrace derive_product(const Prop& a, const Prop& b, const Context& ctx) {
    if (a == b) {
        throw DomainError("the product derivation needs two distinct propositions");
    }
    // A context that already determines one of the propositions collapses
    // the intermediate product early and the scripted route loses its shape.
    if (known_form(Expr::prop_enc(a), ctx) || known_form(Expr::prop_enc(b), ctx)) {
        throw DomainError(
            "the product derivation needs a context that leaves both propositions "
            "undetermined");
    }
    Script s(Expr::estim(Expr::mul({Expr::prop_enc(a), Expr::prop_enc(b)}), ctx));
    // Marginalize over the truth of a, pull the now-known factor n(a) out of
    // the inner estimate, fix its value at 1 inside the product, and extract
    // the inner estimate, which no longer depends on anything outside.
    s.step(make_tower_expand(CtxKnownTruth{a}), {});
    s.step(named("scalar_out"), {0});
    s.step(named("two_valued"), {0});
    s.step(named("const_out"), {});
    return s.finish();
}

ExpectationDerivation derive_expectation(const std::string& unknown,
                                         const std::vector<Rational>& domain,
                                         const Context& ctx) {
    Script dec(Expr::estim(Expr::unknown(unknown), ctx));
    dec.step(make_completeness_expand(unknown, domain), {0});
    {
        RuleStrategy strategy;
        strategy.rules = {"linear_sum", "scalar_out"};
        auto [result, sub] = normalize(dec.current, strategy);
        (void)result;
        dec.append(sub);
    }

    std::vector<Expr> probabilities;
    probabilities.reserve(domain.size());
    for (const Rational& v : domain) {
        probabilities.push_back(
            Expr::estim(Expr::kdelta(Expr::constant(v), Expr::unknown(unknown)), ctx));
    }
    Script norm(Expr::add(std::move(probabilities)));
    if (domain.size() > 1) norm.step(named("sum_fold"), {});
    norm.step(make_delta_complete(unknown, domain), {0});
    norm.step(named("known_eval"), {});

    return {dec.finish(), norm.finish()};
}

// ---------------------------------------------------------------------------
// Trace formatting

std::string format_path(const std::vector<std::size_t>& path) {
    if (path.empty()) return "root";
    std::string out;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i) out += ".";
        out += std::to_string(path[i]);
    }
    return out;
}

std::string format_trace(const DerivationTrace& trace, bool probability_form) {
    const auto render = [&](const Expr& e) {
        return probability_form ? to_probability_form(e) : print_expr(e);
    };
    std::ostringstream out;
    for (std::size_t k = 0; k < trace.steps.size(); ++k) {
        const TraceStep& s = trace.steps[k];
        out << "step " << (k + 1) << ": [" << s.rule.name << " @ " << format_path(s.path)
            << "] " << render(s.before) << " ⇒ " << render(s.after) << "\n";
    }
    return out.str();
}

}  // namespace estim

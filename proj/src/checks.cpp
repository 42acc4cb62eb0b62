#include "estim/checks.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <utility>

#include "estim/errors.hpp"
#include "estim/generator.hpp"
#include "estim/parser.hpp"
#include "estim/printer.hpp"

namespace estim {
namespace {

constexpr std::size_t kMaxCounterexamples = 5;

void record_failure(PropertyResult& r, std::string what) {
    ++r.failed;
    if (r.counterexamples.size() < kMaxCounterexamples) {
        r.counterexamples.push_back(std::move(what));
    }
}

// Fixed-shape model the deterministic rule instances run against:
// x in {1, 2}, atoms A and B, uniform weights.
Model template_model() {
    std::vector<Model::Variable> vars{{"x", {Rational(1), Rational(2)}}};
    std::vector<Rational> weights(8, Rational(1, 8));
    return Model(std::move(vars), {"A", "B"}, std::move(weights));
}

struct RuleInstance {
    std::string rule;
    std::string text;
    std::vector<std::size_t> path;
};

// One concrete redex per registry rule. These guarantee every rule fires at
// least once per run, so a rule returning wrong results cannot pass by
// never matching the random draws.
const std::vector<RuleInstance>& fixed_instances() {
    static const std::vector<RuleInstance> instances = {
        {"known_eval", "est(2*x | x=1, I)", {}},
        {"prop_encode", "est(n(not A) | I)", {0}},
        {"prop_encode", "est(n(A and B) | I)", {0}},
        {"prop_encode", "est(n(A or B) | I)", {0}},
        {"delta_as_prop", "est(delta(x, 1) | I)", {0}},
        {"linear_sum", "est(x + n(A) | I)", {}},
        {"scalar_out", "est(x * n(A) | x=?, I)", {}},
        {"tower", "est(est(x | x=?, I) | I)", {}},
        {"const_out", "est(est(x | I) * n(A) | I)", {}},
        {"two_valued", "n(A) * n(A)", {}},
        {"affine_out", "est(2*x + 3 | I)", {}},
        {"sum_fold", "est(x | I) + est(n(A) | I)", {}},
    };
    return instances;
}

void all_paths(const Expr& e, std::vector<std::size_t>& cur,
               std::vector<std::vector<std::size_t>>& out) {
    out.push_back(cur);
    const auto& kids = e.children();
    for (std::size_t i = 0; i < kids.size(); ++i) {
        cur.push_back(i);
        all_paths(kids[i], cur, out);
        cur.pop_back();
    }
}

std::vector<std::vector<std::size_t>> all_paths(const Expr& e) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> cur;
    all_paths(e, cur, out);
    return out;
}

enum class Same { Yes, No, Undefined };

// Pointwise comparison over every positive-weight outcome, so expressions
// with free references are compared in every environment the model supplies.
Same oracle_same(OracleEvaluator& ev, const Model& model, const Expr& a, const Expr& b,
                 std::string* detail) {
    for (std::size_t w = 0; w < model.outcome_count(); ++w) {
        if (model.weight(w) == 0) continue;
        try {
            const Rational va = ev.eval_at(a, w);
            const Rational vb = ev.eval_at(b, w);
            if (va != vb) {
                if (detail) {
                    *detail = print_expr(a) + " = " + to_string(va) + " but " +
                              print_expr(b) + " = " + to_string(vb) + " at outcome " +
                              std::to_string(w);
                }
                return Same::No;
            }
        } catch (const ZeroWeightConditioning&) {
            return Same::Undefined;
        }
    }
    return Same::Yes;
}

const RewriteRule* rule_in(const std::vector<RewriteRule>& rules, const std::string& name) {
    for (const RewriteRule& r : rules) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

std::string model_note(const Model& model) {
    return " [model " + model.to_json().dump() + "]";
}

}  // namespace

bool CheckReport::ok() const {
    return std::all_of(properties.begin(), properties.end(),
                       [](const PropertyResult& p) { return p.ok(); });
}

const PropertyResult* CheckReport::find(const std::string& name) const {
    for (const PropertyResult& p : properties) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

CheckReport run_checks(const CheckConfig& config, const std::vector<RewriteRule>& rules) {
    // Results are accumulated in locals and appended when each block ends;
    // references into the report vector would dangle as it grows.
    CheckReport report;
    auto fresh = [](const char* name) -> PropertyResult {
        PropertyResult r;
        r.name = name;
        return r;
    };
    auto publish = [&report](PropertyResult&& r) {
        report.properties.push_back(std::move(r));
    };

    std::mt19937_64 rng(config.seed);
    auto draw_model = [&](auto adjust) -> Model {
        if (config.model) return *config.model;
        ModelGenSpec spec;
        adjust(spec);
        return random_model(rng, spec);
    };
    auto no_adjust = [](ModelGenSpec&) {};

    // Operator requirements, aggregated over models.
    {
        PropertyResult known = fresh("known-evaluation");
        PropertyResult bounds = fresh("bounds");
        PropertyResult linearity = fresh("linearity");
        PropertyResult tower = fresh("tower-collapse");
        auto absorb = [](PropertyResult& into, const PropertyStats& from) {
            into.trials += from.trials;
            into.passed += from.passed;
            into.failed += from.failed;
            into.skipped += from.skipped;
            for (const std::string& f : from.failures) {
                if (into.counterexamples.size() < kMaxCounterexamples) {
                    into.counterexamples.push_back(f);
                }
            }
        };
        for (int t = 0; t < config.trials; ++t) {
            const Model model = draw_model(no_adjust);
            const RequirementsReport req = check_requirements(model, 4, rng());
            absorb(known, req.known_evaluation);
            absorb(bounds, req.bounds);
            absorb(linearity, req.linearity);
            absorb(tower, req.tower);
        }
        publish(std::move(known));
        publish(std::move(bounds));
        publish(std::move(linearity));
        publish(std::move(tower));
    }

    // Negation, sum, and product identities.
    {
        PropertyResult negation = fresh("negation-identity");
        PropertyResult sum = fresh("sum-identity");
        PropertyResult product = fresh("product-identity");
        for (int t = 0; t < config.trials; ++t) {
            const Model model = draw_model([](ModelGenSpec& s) { s.min_atoms = 2; });
            ++negation.trials;
            ++sum.trials;
            ++product.trials;
            if (model.atoms().size() < 2) {
                ++negation.skipped;
                ++sum.skipped;
                ++product.skipped;
                continue;
            }
            const IdentityReport id = verify_identities(model);
            if (id.negation_ok) ++negation.passed;
            else record_failure(negation, id.detail + model_note(model));
            if (id.sum_ok) ++sum.passed;
            else record_failure(sum, id.detail + model_note(model));
            if (id.product_skipped) ++product.skipped;
            else if (id.product_ok) ++product.passed;
            else record_failure(product, id.detail + model_note(model));
        }
        publish(std::move(negation));
        publish(std::move(sum));
        publish(std::move(product));
    }

    // Every rewrite in the registry preserves oracle value wherever it fires:
    // first on the fixed instances, then scanning random closed expressions.
    {
        PropertyResult soundness = fresh("rule-soundness");
        {
            const Model model = template_model();
            OracleEvaluator ev(model);
            for (const RuleInstance& inst : fixed_instances()) {
                const RewriteRule* rule = rule_in(rules, inst.rule);
                if (rule == nullptr) continue;
                ++soundness.trials;
                const Expr before = parse_expr(inst.text);
                Expr after = before;
                try {
                    after = apply_rule_at(before, *rule, inst.path);
                } catch (const Error& err) {
                    record_failure(soundness, inst.rule + " did not fire on " + inst.text +
                                                  ": " + err.what());
                    continue;
                }
                std::string detail;
                switch (oracle_same(ev, model, before, after, &detail)) {
                    case Same::Yes: ++soundness.passed; break;
                    case Same::Undefined: ++soundness.skipped; break;
                    case Same::No:
                        record_failure(soundness, inst.rule + ": " + detail);
                        break;
                }
            }
        }
        for (int t = 0; t < config.trials; ++t) {
            const Model model = draw_model(no_adjust);
            OracleEvaluator ev(model);
            const Expr e = random_closed_expr(rng, model, 3);
            for (const auto& path : all_paths(e)) {
                const Expr sub = subexpr_at(e, path);
                for (const RewriteRule& rule : rules) {
                    std::optional<Expr> replacement;
                    try {
                        replacement = rule.apply(sub, RuleOptions{});
                    } catch (const Error&) {
                        continue;
                    }
                    if (!replacement) continue;
                    ++soundness.trials;
                    const Expr after = splice_at(e, path, *replacement);
                    std::string detail;
                    switch (oracle_same(ev, model, e, after, &detail)) {
                        case Same::Yes: ++soundness.passed; break;
                        case Same::Undefined: ++soundness.skipped; break;
                        case Same::No:
                            record_failure(soundness, rule.name + " at " + format_path(path) +
                                                          ": " + detail + model_note(model));
                            break;
                    }
                }
            }
        }
        publish(std::move(soundness));
    }

    // The parameterized rule factories, on instances shaped by each model.
    {
        PropertyResult factory = fresh("factory-soundness");
        for (int t = 0; t < config.trials; ++t) {
            const Model model = draw_model(no_adjust);
            OracleEvaluator ev(model);
            const Context plain("I");
            auto check_pair = [&](const std::string& label, const Expr& before,
                                  const Expr& after) {
                ++factory.trials;
                std::string detail;
                switch (oracle_same(ev, model, before, after, &detail)) {
                    case Same::Yes: ++factory.passed; break;
                    case Same::Undefined: ++factory.skipped; break;
                    case Same::No:
                        record_failure(factory, label + ": " + detail + model_note(model));
                        break;
                }
            };

            const Expr f = random_ground_expr(rng, model, 2);
            std::vector<CtxItem> items;
            for (const auto& v : model.variables()) items.push_back(CtxParam{v.name});
            for (const auto& a : model.atoms()) {
                items.push_back(CtxKnownTruth{Prop::atom(a)});
            }
            if (!items.empty()) {
                const CtxItem item = items[std::uniform_int_distribution<std::size_t>(
                    0, items.size() - 1)(rng)];
                const Expr before = Expr::estim(f, plain);
                check_pair("tower_expand",
                           before, apply_rule_at(before, make_tower_expand(item), {}));
            }
            if (!model.variables().empty()) {
                const auto& v = model.variables()[std::uniform_int_distribution<std::size_t>(
                    0, model.variables().size() - 1)(rng)];
                const Expr direct = Expr::estim(Expr::unknown(v.name), plain);
                check_pair("completeness_expand", direct,
                           apply_rule_at(direct, make_completeness_expand(v.name, v.domain),
                                         {0}));
                std::vector<Expr> deltas;
                for (const Rational& value : v.domain) {
                    deltas.push_back(
                        Expr::kdelta(Expr::constant(value), Expr::unknown(v.name)));
                }
                const Expr total = Expr::estim(Expr::add(std::move(deltas)), plain);
                check_pair("delta_complete", total,
                           apply_rule_at(total, make_delta_complete(v.name, v.domain), {0}));
            }
        }
        publish(std::move(factory));
    }

    // Normalization preserves oracle value, and its trace replays.
    {
        PropertyResult soundness = fresh("normalize-soundness");
        PropertyResult replaying = fresh("trace-replay");
        for (int t = 0; t < config.trials; ++t) {
            const Model model = draw_model(no_adjust);
            OracleEvaluator ev(model);
            const Expr e = random_closed_expr(rng, model, 3);
            ++soundness.trials;
            RuleStrategy strategy;
            strategy.fuel = config.fuel;
            Expr normalized = e;
            DerivationTrace trace;
            try {
                std::tie(normalized, trace) = normalize(e, strategy);
            } catch (const Error& err) {
                record_failure(soundness, std::string(err.what()) + " on " + print_expr(e));
                continue;
            }
            std::string detail;
            switch (oracle_same(ev, model, e, normalized, &detail)) {
                case Same::Yes: ++soundness.passed; break;
                case Same::Undefined: ++soundness.skipped; break;
                case Same::No:
                    record_failure(soundness, detail + model_note(model));
                    break;
            }
            ++replaying.trials;
            std::string why;
            if (replay(trace, &why)) {
                ++replaying.passed;
            } else {
                record_failure(replaying, why + " for " + print_expr(e));
            }
        }
        publish(std::move(soundness));
        publish(std::move(replaying));
    }

    // A normalized estimate of an encoded proposition stays a probability.
    {
        PropertyResult bounds = fresh("probability-bounds");
        for (int t = 0; t < config.trials; ++t) {
            const Model model = draw_model([](ModelGenSpec& s) { s.min_atoms = 1; });
            ++bounds.trials;
            if (model.variables().empty() && model.atoms().empty()) {
                ++bounds.skipped;
                continue;
            }
            const Prop p = random_prop(rng, model, 2);
            const Expr e =
                Expr::estim(Expr::prop_enc(p), random_context(rng, model, false));
            Expr normalized = e;
            try {
                RuleStrategy strategy;
                strategy.fuel = config.fuel;
                normalized = normalize(e, strategy).first;
                const Rational v = oracle_eval(normalized, model);
                if (v < 0 || v > 1) {
                    record_failure(bounds, print_expr(normalized) + " = " + to_string(v) +
                                               model_note(model));
                } else {
                    ++bounds.passed;
                }
            } catch (const ZeroWeightConditioning&) {
                ++bounds.skipped;
            } catch (const Error& err) {
                record_failure(bounds, std::string(err.what()) + " on " + print_expr(e));
            }
        }
        publish(std::move(bounds));
    }

    // Expectation decompositions obey the probability laws, and the scripted
    // derivations for them replay and preserve oracle value.
    {
        PropertyResult expectation = fresh("expectation-decomposition");
        for (int t = 0; t < config.trials; ++t) {
            const Model model = draw_model(no_adjust);
            ++expectation.trials;
            if (model.variables().empty()) {
                ++expectation.skipped;
                continue;
            }
            const auto& v = model.variables()[std::uniform_int_distribution<std::size_t>(
                0, model.variables().size() - 1)(rng)];
            try {
                expectation_decomposition(model, v.name);
                const ExpectationDerivation d =
                    derive_expectation(v.name, v.domain, Context("I"));
                std::string why;
                if (!replay(d.decomposition, &why) || !replay(d.normalization, &why)) {
                    record_failure(expectation, why);
                    continue;
                }
                OracleEvaluator ev(model);
                std::string detail;
                if (oracle_same(ev, model, d.decomposition.initial, d.decomposition.final,
                                &detail) == Same::No ||
                    oracle_same(ev, model, d.normalization.initial, d.normalization.final,
                                &detail) == Same::No) {
                    record_failure(expectation, detail + model_note(model));
                    continue;
                }
                ++expectation.passed;
            } catch (const Error& err) {
                record_failure(expectation, std::string(err.what()) + model_note(model));
            }
        }
        publish(std::move(expectation));
    }

    // The scripted probability-rule derivations, against random models.
    {
        PropertyResult derivation = fresh("derivation-soundness");
        for (int t = 0; t < config.trials; ++t) {
            const Model model = draw_model([](ModelGenSpec& s) { s.min_atoms = 2; });
            ++derivation.trials;
            if (model.atoms().size() < 2) {
                ++derivation.skipped;
                continue;
            }
            const Prop a = Prop::atom(model.atoms()[0]);
            const Prop b = Prop::atom(model.atoms()[1]);
            const Context plain("I");
            OracleEvaluator ev(model);
            std::vector<DerivationTrace> traces;
            try {
                traces.push_back(derive_negation(a, plain));
                traces.push_back(derive_sum(a, b, plain));
                traces.push_back(derive_product(a, b, plain));
            } catch (const Error& err) {
                record_failure(derivation, err.what());
                continue;
            }
            bool good = true;
            bool undefined = false;
            for (const DerivationTrace& trace : traces) {
                std::string why;
                if (!replay(trace, &why)) {
                    record_failure(derivation, why);
                    good = false;
                    break;
                }
                std::string detail;
                switch (oracle_same(ev, model, trace.initial, trace.final, &detail)) {
                    case Same::Yes: break;
                    case Same::Undefined: undefined = true; break;
                    case Same::No:
                        record_failure(derivation, detail + model_note(model));
                        good = false;
                        break;
                }
                if (!good) break;
            }
            if (!good) continue;
            if (undefined) ++derivation.skipped;
            else ++derivation.passed;
        }
        publish(std::move(derivation));
    }

    // Printing then parsing reproduces the expression exactly.
    {
        PropertyResult round_trip = fresh("print-parse-round-trip");
        for (int t = 0; t < config.trials; ++t) {
            ++round_trip.trials;
            const Expr e = random_syntax_expr(rng, 4);
            const std::string text = print_expr(e);
            try {
                const Expr back = parse_expr(text);
                if (back == e && print_expr(back) == text) {
                    ++round_trip.passed;
                } else {
                    record_failure(round_trip,
                                   text + " reparses as " + print_expr(back));
                }
            } catch (const Error& err) {
                record_failure(round_trip, text + " fails to parse: " + err.what());
            }
        }
        publish(std::move(round_trip));
    }

    return report;
}

CheckReport run_checks(const CheckConfig& config) { return run_checks(config, all_rules()); }

std::vector<RewriteRule> make_tampered(std::vector<RewriteRule> rules,
                                       const std::string& name) {
    bool found = false;
    for (RewriteRule& r : rules) {
        if (r.name != name) continue;
        found = true;
        auto inner = r.apply;
        r.apply = [inner](const Expr& e, const RuleOptions& opts) -> std::optional<Expr> {
            auto out = inner(e, opts);
            if (!out) return std::nullopt;
            return Expr::add({*out, Expr::constant(1)});
        };
    }
    if (!found) throw DomainError("no rule named '" + name + "'");
    return rules;
}

std::string format_report(const CheckReport& report) {
    std::ostringstream out;
    for (const PropertyResult& p : report.properties) {
        out << (p.ok() ? "ok  " : "FAIL") << "  " << p.name << ": " << p.passed << "/"
            << p.trials << " passed";
        if (p.skipped > 0) out << ", " << p.skipped << " skipped";
        if (p.failed > 0) out << ", " << p.failed << " failed";
        out << "\n";
        for (const std::string& c : p.counterexamples) {
            out << "      " << c << "\n";
        }
    }
    out << (report.ok() ? "all properties hold" : "PROPERTY FAILURES") << "\n";
    return out.str();
}

}  // namespace estim

#include "estim/oracle.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "estim/errors.hpp"
#include "estim/generator.hpp"
#include "estim/printer.hpp"

namespace estim {

// ---------------------------------------------------------------------------
// Grid quadrature

GridEstimate grid_eval(const GridModel& grid) {
    if (grid.densities.empty()) throw DomainError("grid has no cells");
    if (!(grid.b > grid.a)) throw DomainError("grid upper bound must exceed its lower bound");
    const std::size_t n = grid.densities.size();
    const double h = (grid.b - grid.a) / static_cast<double>(n);
    double norm = 0.0;
    double value = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = grid.densities[i];
        if (d < 0.0) throw DomainError("negative density in cell " + std::to_string(i));
        const double mid = grid.a + (static_cast<double>(i) + 0.5) * h;
        norm += d * h;
        value += mid * d * h;
    }
    if (std::abs(norm - 1.0) > 1e-6) {
        throw NormalizationError("grid density integrates to " + std::to_string(norm) +
                                 ", not 1");
    }
    return {value, norm};
}

// ---------------------------------------------------------------------------
// Model

namespace {

// Shared by the constructor and the JSON loader, which must reject a bad
// shape before it starts resolving outcomes against it.
std::size_t validate_shape(const std::vector<Model::Variable>& variables,
                           const std::vector<std::string>& atoms) {
    std::set<std::string> names;
    std::size_t count = 1;
    for (const Model::Variable& v : variables) {
        if (v.name.empty()) throw ModelError("variable with an empty name");
        if (!names.insert(v.name).second) throw ModelError("duplicate name '" + v.name + "'");
        if (v.domain.empty()) throw ModelError("variable '" + v.name + "' has an empty domain");
        for (std::size_t i = 0; i < v.domain.size(); ++i) {
            for (std::size_t j = i + 1; j < v.domain.size(); ++j) {
                if (v.domain[i] == v.domain[j]) {
                    throw ModelError("variable '" + v.name + "' repeats domain value " +
                                     to_string(v.domain[i]));
                }
            }
        }
        count *= v.domain.size();
    }
    for (const std::string& a : atoms) {
        if (a.empty()) throw ModelError("atom with an empty name");
        if (!names.insert(a).second) throw ModelError("duplicate name '" + a + "'");
        count *= 2;
    }
    if (count > (1u << 22)) throw ModelError("model outcome space is too large");
    return count;
}

}  // namespace

Model::Model(std::vector<Variable> variables, std::vector<std::string> atoms,
             std::vector<Rational> weights, std::optional<GridModel> grid)
    : variables_(std::move(variables)),
      atoms_(std::move(atoms)),
      weights_(std::move(weights)),
      grid_(std::move(grid)) {
    const std::size_t count = validate_shape(variables_, atoms_);
    strides_.reserve(variables_.size());
    std::size_t stride = 1;
    for (const Variable& v : variables_) {
        strides_.push_back(stride);
        stride *= v.domain.size();
    }
    if (weights_.size() != count) {
        throw ModelError("expected " + std::to_string(count) + " weights, got " +
                         std::to_string(weights_.size()));
    }
    Rational total = 0;
    for (const Rational& w : weights_) {
        if (w < 0) throw ModelError("negative weight " + to_string(w));
        total += w;
    }
    if (total != 1) throw ModelError("weights sum to " + to_string(total) + ", not 1");
}

std::optional<std::size_t> Model::variable_index(const std::string& name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (variables_[i].name == name) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> Model::atom_index(const std::string& name) const {
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (atoms_[i] == name) return i;
    }
    return std::nullopt;
}

const Rational& Model::value_of(std::size_t outcome, std::size_t variable) const {
    const Variable& v = variables_[variable];
    return v.domain[(outcome / strides_[variable]) % v.domain.size()];
}

bool Model::truth_of(std::size_t outcome, std::size_t atom) const {
    std::size_t var_block = 1;
    for (const Variable& v : variables_) var_block *= v.domain.size();
    return ((outcome / var_block) >> atom) & 1;
}

std::size_t Model::outcome_index(const std::vector<std::size_t>& digits,
                                 const std::vector<bool>& truths) const {
    if (digits.size() != variables_.size() || truths.size() != atoms_.size()) {
        throw ModelError("outcome coordinates do not match the model shape");
    }
    std::size_t index = 0;
    std::size_t var_block = 1;
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (digits[i] >= variables_[i].domain.size()) {
            throw ModelError("domain position out of range for '" + variables_[i].name + "'");
        }
        index += digits[i] * strides_[i];
        var_block *= variables_[i].domain.size();
    }
    for (std::size_t j = 0; j < atoms_.size(); ++j) {
        if (truths[j]) index += var_block << j;
    }
    return index;
}

// ---------------------------------------------------------------------------
// JSON form

namespace {

Rational rational_from_json(const nlohmann::json& v, const char* what) {
    if (v.is_string()) {
        try {
            return rational_from_string(v.get<std::string>());
        } catch (const DomainError& e) {
            throw ModelError(std::string(what) + " is not a rational: " + e.what());
        }
    }
    if (v.is_number_integer()) return Rational(v.get<long long>());
    throw ModelError(std::string(what) +
                     " must be a string rational like \"1/4\" or an integer");
}

}  // namespace

Model Model::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ModelError("model document must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (key != "variables" && key != "atoms" && key != "weights" && key != "grid") {
            throw ModelError("unknown model key '" + key + "'");
        }
    }

    std::vector<Variable> variables;
    if (doc.contains("variables")) {
        if (!doc["variables"].is_array()) throw ModelError("'variables' must be an array");
        for (const auto& v : doc["variables"]) {
            if (!v.is_object() || !v.contains("name") || !v.contains("domain")) {
                throw ModelError("each variable needs 'name' and 'domain'");
            }
            if (!v["name"].is_string()) throw ModelError("variable name must be a string");
            if (!v["domain"].is_array()) throw ModelError("variable domain must be an array");
            Variable out{v["name"].get<std::string>(), {}};
            for (const auto& d : v["domain"]) {
                out.domain.push_back(rational_from_json(d, "a domain value"));
            }
            variables.push_back(std::move(out));
        }
    }

    std::vector<std::string> atoms;
    if (doc.contains("atoms")) {
        if (!doc["atoms"].is_array()) throw ModelError("'atoms' must be an array");
        for (const auto& a : doc["atoms"]) {
            if (!a.is_string()) throw ModelError("atom names must be strings");
            atoms.push_back(a.get<std::string>());
        }
    }

    const std::size_t count = validate_shape(variables, atoms);
    std::vector<Rational> weights(count, Rational(0));

    const auto locate = [&](const nlohmann::json& outcome) {
        if (!outcome.is_object()) throw ModelError("'outcome' must be an object");
        std::vector<std::size_t> digits(variables.size());
        std::vector<bool> truths(atoms.size());
        std::set<std::string> seen;
        for (const auto& [key, value] : outcome.items()) {
            bool found = false;
            for (std::size_t i = 0; i < variables.size(); ++i) {
                if (variables[i].name != key) continue;
                const Rational r = rational_from_json(value, "an outcome value");
                bool in_domain = false;
                for (std::size_t d = 0; d < variables[i].domain.size(); ++d) {
                    if (variables[i].domain[d] == r) {
                        digits[i] = d;
                        in_domain = true;
                        break;
                    }
                }
                if (!in_domain) {
                    throw ModelError("value " + to_string(r) + " is outside the domain of '" +
                                     key + "'");
                }
                found = true;
                break;
            }
            if (!found) {
                for (std::size_t j = 0; j < atoms.size(); ++j) {
                    if (atoms[j] != key) continue;
                    if (!value.is_boolean()) {
                        throw ModelError("atom '" + key + "' needs a boolean truth value");
                    }
                    truths[j] = value.get<bool>();
                    found = true;
                    break;
                }
            }
            if (!found) throw ModelError("outcome binds unknown symbol '" + key + "'");
            seen.insert(key);
        }
        if (seen.size() != variables.size() + atoms.size()) {
            throw ModelError("an outcome must bind every variable and atom exactly once");
        }
        std::size_t index = 0;
        std::size_t stride = 1;
        for (std::size_t i = 0; i < variables.size(); ++i) {
            index += digits[i] * stride;
            stride *= variables[i].domain.size();
        }
        for (std::size_t j = 0; j < atoms.size(); ++j) {
            if (truths[j]) index += stride << j;
        }
        return index;
    };

    if (doc.contains("weights")) {
        if (!doc["weights"].is_array()) throw ModelError("'weights' must be an array");
        std::set<std::size_t> assigned;
        for (const auto& entry : doc["weights"]) {
            if (!entry.is_object() || !entry.contains("outcome") || !entry.contains("w")) {
                throw ModelError("each weight entry needs 'outcome' and 'w'");
            }
            const std::size_t index = locate(entry["outcome"]);
            if (!assigned.insert(index).second) {
                throw ModelError("an outcome is listed twice in 'weights'");
            }
            weights[index] = rational_from_json(entry["w"], "a weight");
        }
    }

    std::optional<GridModel> grid;
    if (doc.contains("grid")) {
        const auto& g = doc["grid"];
        if (!g.is_object() || !g.contains("a") || !g.contains("b") || !g.contains("n") ||
            !g.contains("densities")) {
            throw ModelError("'grid' needs 'a', 'b', 'n', and 'densities'");
        }
        GridModel out;
        if (!g["a"].is_number() || !g["b"].is_number()) {
            throw ModelError("grid bounds must be numbers");
        }
        out.a = g["a"].get<double>();
        out.b = g["b"].get<double>();
        if (!(out.b > out.a)) throw ModelError("grid needs b > a");
        if (!g["n"].is_number_integer() || g["n"].get<long long>() < 1) {
            throw ModelError("grid 'n' must be a positive integer");
        }
        if (!g["densities"].is_array()) throw ModelError("'densities' must be an array");
        for (const auto& d : g["densities"]) {
            if (!d.is_number()) throw ModelError("densities must be numbers");
            const double value = d.get<double>();
            if (value < 0.0) throw ModelError("negative density value");
            out.densities.push_back(value);
        }
        if (out.densities.size() != static_cast<std::size_t>(g["n"].get<long long>())) {
            throw ModelError("grid 'n' does not match the density count");
        }
        const double h = (out.b - out.a) / static_cast<double>(out.densities.size());
        double norm = 0.0;
        for (double d : out.densities) norm += d * h;
        if (std::abs(norm - 1.0) > 1e-9) {
            throw NormalizationError("grid density integrates to " + std::to_string(norm) +
                                     ", not 1");
        }
        grid = std::move(out);
    }

    return Model(std::move(variables), std::move(atoms), std::move(weights), std::move(grid));
}

Model Model::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError("model file '" + path + "' is not valid JSON: " + e.what());
    }
    return from_json(doc);
}

nlohmann::json Model::to_json() const {
    nlohmann::json doc;
    doc["variables"] = nlohmann::json::array();
    for (const Variable& v : variables_) {
        nlohmann::json domain = nlohmann::json::array();
        for (const Rational& d : v.domain) domain.push_back(to_string(d));
        doc["variables"].push_back({{"name", v.name}, {"domain", domain}});
    }
    doc["atoms"] = atoms_;
    doc["weights"] = nlohmann::json::array();
    for (std::size_t o = 0; o < weights_.size(); ++o) {
        if (weights_[o] == 0) continue;
        nlohmann::json outcome;
        for (std::size_t i = 0; i < variables_.size(); ++i) {
            outcome[variables_[i].name] = to_string(value_of(o, i));
        }
        for (std::size_t j = 0; j < atoms_.size(); ++j) {
            outcome[atoms_[j]] = truth_of(o, j);
        }
        doc["weights"].push_back({{"outcome", outcome}, {"w", to_string(weights_[o])}});
    }
    if (grid_) {
        doc["grid"] = {{"a", grid_->a},
                       {"b", grid_->b},
                       {"n", grid_->densities.size()},
                       {"densities", grid_->densities}};
    }
    return doc;
}

// ---------------------------------------------------------------------------
// Evaluator

bool OracleEvaluator::prop_truth(const Prop& p, std::size_t outcome) const {
    return p.truth(
        [&](const std::string& name) -> bool {
            auto i = model_.atom_index(name);
            if (!i) throw UnboundSymbol(name);
            return model_.truth_of(outcome, *i);
        },
        [&](const std::string& name) -> Rational {
            auto i = model_.variable_index(name);
            if (!i) throw UnboundSymbol(name);
            return model_.value_of(outcome, *i);
        });
}

Rational OracleEvaluator::eval(const Expr& e) {
    const FreeRefs refs = free_refs(e);
    if (!refs.empty()) {
        throw UnboundSymbol(refs.unknowns.empty() ? *refs.atoms.begin()
                                                  : *refs.unknowns.begin());
    }
    return eval_impl(e, std::nullopt);
}

Rational OracleEvaluator::eval_at(const Expr& e, std::size_t outcome) {
    return eval_impl(e, outcome);
}

Rational OracleEvaluator::eval_impl(const Expr& e, std::optional<std::size_t> outcome) {
    switch (e.kind()) {
        case ExprKind::Const:
            return e.const_value();
        case ExprKind::Unknown: {
            if (!outcome) throw UnboundSymbol(e.unknown_name());
            auto i = model_.variable_index(e.unknown_name());
            if (!i) throw UnboundSymbol(e.unknown_name());
            return model_.value_of(*outcome, *i);
        }
        case ExprKind::Add: {
            Rational sum = 0;
            for (const Expr& c : e.children()) sum += eval_impl(c, outcome);
            return sum;
        }
        case ExprKind::Mul: {
            Rational product = 1;
            for (const Expr& c : e.children()) product *= eval_impl(c, outcome);
            return product;
        }
        case ExprKind::KDelta:
            return eval_impl(e.children()[0], outcome) == eval_impl(e.children()[1], outcome)
                       ? 1
                       : 0;
        case ExprKind::PropEnc: {
            if (!outcome) {
                const FreeRefs refs = free_refs(e);
                throw UnboundSymbol(refs.atoms.empty() ? *refs.unknowns.begin()
                                                       : *refs.atoms.begin());
            }
            return prop_truth(e.prop(), *outcome) ? 1 : 0;
        }
        case ExprKind::Estim:
            return eval_estim(e, outcome);
    }
    throw DomainError("corrupt expression node");
}

Rational OracleEvaluator::eval_estim(const Expr& e, std::optional<std::size_t> outcome) {
    // Nested estimates depend on the enclosing world only through their free
    // references, so their values key the cache.
    const FreeRefs refs = free_refs(e);
    std::string signature;
    for (const std::string& u : refs.unknowns) {
        if (!outcome) throw UnboundSymbol(u);
        auto i = model_.variable_index(u);
        if (!i) throw UnboundSymbol(u);
        signature += u + "=" + to_string(model_.value_of(*outcome, *i)) + ";";
    }
    for (const std::string& a : refs.atoms) {
        if (!outcome) throw UnboundSymbol(a);
        auto i = model_.atom_index(a);
        if (!i) throw UnboundSymbol(a);
        signature += a + "=" + (model_.truth_of(*outcome, *i) ? "1" : "0") + ";";
    }
    const auto key = std::make_pair(e.identity(), signature);
    if (auto hit = cache_.find(key); hit != cache_.end()) return hit->second.value;

    const Context& ctx = e.context();
    Rational total_weight = 0;
    Rational accumulated = 0;
    for (std::size_t w = 0; w < model_.outcome_count(); ++w) {
        if (model_.weight(w) == 0) continue;
        bool matches = true;
        for (const CtxItem& item : ctx.items()) {
            if (const auto* a = std::get_if<CtxAssign>(&item)) {
                auto i = model_.variable_index(a->name);
                if (!i) throw UnboundSymbol(a->name);
                matches = model_.value_of(w, *i) == a->value;
            } else if (const auto* p = std::get_if<CtxParam>(&item)) {
                auto i = model_.variable_index(p->name);
                if (!i) throw UnboundSymbol(p->name);
                matches = model_.value_of(w, *i) == model_.value_of(*outcome, *i);
            } else if (const auto* g = std::get_if<CtxGiven>(&item)) {
                matches = prop_truth(g->prop, w);
            } else {
                const auto& k = std::get<CtxKnownTruth>(item);
                matches = prop_truth(k.prop, w) == prop_truth(k.prop, *outcome);
            }
            if (!matches) break;
        }
        if (!matches) continue;
        total_weight += model_.weight(w);
        accumulated += model_.weight(w) * eval_impl(e.estim_body(), w);
    }
    if (total_weight == 0) throw ZeroWeightConditioning(print_context(ctx));
    Rational result = accumulated / total_weight;
    cache_.emplace(key, CacheEntry{result, e});
    return result;
}

Rational oracle_eval(const Expr& e, const Model& model) {
    OracleEvaluator evaluator(model);
    return evaluator.eval(e);
}

// ---------------------------------------------------------------------------
// Requirement checks

namespace {

std::vector<std::size_t> positive_outcomes(const Model& m) {
    std::vector<std::size_t> out;
    for (std::size_t o = 0; o < m.outcome_count(); ++o) {
        if (m.weight(o) > 0) out.push_back(o);
    }
    return out;
}

std::map<std::string, Rational> outcome_values(const Model& m, std::size_t o) {
    std::map<std::string, Rational> out;
    for (std::size_t i = 0; i < m.variables().size(); ++i) {
        out.emplace(m.variables()[i].name, m.value_of(o, i));
    }
    return out;
}

std::map<std::string, bool> outcome_truths(const Model& m, std::size_t o) {
    std::map<std::string, bool> out;
    for (std::size_t j = 0; j < m.atoms().size(); ++j) {
        out.emplace(m.atoms()[j], m.truth_of(o, j));
    }
    return out;
}

Context full_conditioning(const Model& m, std::size_t o) {
    std::vector<CtxItem> items;
    for (std::size_t i = 0; i < m.variables().size(); ++i) {
        items.push_back(CtxAssign{m.variables()[i].name, m.value_of(o, i)});
    }
    for (std::size_t j = 0; j < m.atoms().size(); ++j) {
        const Prop atom = Prop::atom(m.atoms()[j]);
        items.push_back(CtxGiven{m.truth_of(o, j) ? atom : Prop::negation(atom)});
    }
    return Context("I", std::move(items));
}

bool context_matches(const Model& m, OracleEvaluator& ev, const Context& ctx, std::size_t o) {
    for (const CtxItem& item : ctx.items()) {
        if (const auto* a = std::get_if<CtxAssign>(&item)) {
            auto i = m.variable_index(a->name);
            if (!i || m.value_of(o, *i) != a->value) return false;
        } else if (const auto* g = std::get_if<CtxGiven>(&item)) {
            if (!ev.prop_truth(g->prop, o)) return false;
        } else {
            return false;  // parameter items have no meaning without a scope
        }
    }
    return true;
}

std::string describe(const Model& m, const Expr& e) {
    return print_expr(e) + "  [model " + m.to_json().dump() + "]";
}

}  // namespace

bool RequirementsReport::ok() const {
    return known_evaluation.ok() && bounds.ok() && linearity.ok() && tower.ok();
}

RequirementsReport check_requirements(const Model& model, int trials, std::uint64_t seed,
                                      int depth) {
    RequirementsReport report;
    report.known_evaluation.name = "requirement: known evaluation";
    report.bounds.name = "requirement: admissible bounds";
    report.linearity.name = "requirement: linearity";
    report.tower.name = "requirement: partial estimation";

    std::mt19937_64 rng(seed);
    const auto support = positive_outcomes(model);
    const Context plain("I");

    for (int t = 0; t < trials; ++t) {
        OracleEvaluator ev(model);

        // Conditioning on a full support outcome reproduces ground evaluation.
        {
            auto& stats = report.known_evaluation;
            ++stats.trials;
            const Expr f = random_ground_expr(rng, model, depth);
            const std::size_t o =
                support[std::uniform_int_distribution<std::size_t>(0, support.size() - 1)(rng)];
            const Expr probe = Expr::estim(f, full_conditioning(model, o));
            const Rational expected = eval_ground(f, outcome_values(model, o),
                                                  outcome_truths(model, o));
            const Rational got = ev.eval(probe);
            if (got == expected) {
                ++stats.passed;
            } else {
                ++stats.failed;
                stats.failures.push_back(describe(model, probe) + " gave " + to_string(got) +
                                         ", ground value " + to_string(expected));
            }
        }

        // The estimate stays inside the attained range of the body.
        {
            auto& stats = report.bounds;
            ++stats.trials;
            const Expr f = random_ground_expr(rng, model, depth);
            const Context ctx = random_context(rng, model, false);
            const Expr probe = Expr::estim(f, ctx);
            try {
                const Rational got = ev.eval(probe);
                std::optional<Rational> lo, hi;
                for (std::size_t o : support) {
                    if (!context_matches(model, ev, ctx, o)) continue;
                    const Rational v = eval_ground(f, outcome_values(model, o),
                                                   outcome_truths(model, o));
                    if (!lo || v < *lo) lo = v;
                    if (!hi || v > *hi) hi = v;
                }
                if (lo && *lo <= got && got <= *hi) {
                    ++stats.passed;
                } else {
                    ++stats.failed;
                    stats.failures.push_back(describe(model, probe) + " gave " +
                                             to_string(got) + " outside the attained range");
                }
            } catch (const ZeroWeightConditioning&) {
                ++stats.skipped;
            }
        }

        // est(a*f + b*g | C) = a*est(f | C) + b*est(g | C).
        {
            auto& stats = report.linearity;
            ++stats.trials;
            const int half = depth > 1 ? depth - 1 : 1;
            const Expr f = random_ground_expr(rng, model, half);
            const Expr g = random_ground_expr(rng, model, half);
            std::uniform_int_distribution<int> coeff(-3, 3);
            const Rational a(coeff(rng));
            const Rational b(coeff(rng));
            const Context ctx = random_context(rng, model, false);
            const Expr combined = Expr::add(
                {Expr::mul({Expr::constant(a), f}), Expr::mul({Expr::constant(b), g})});
            try {
                const Rational lhs = ev.eval(Expr::estim(combined, ctx));
                const Rational rhs = a * ev.eval(Expr::estim(f, ctx)) +
                                     b * ev.eval(Expr::estim(g, ctx));
                if (lhs == rhs) {
                    ++stats.passed;
                } else {
                    ++stats.failed;
                    stats.failures.push_back(describe(model, Expr::estim(combined, ctx)) +
                                             ": " + to_string(lhs) + " vs split " +
                                             to_string(rhs));
                }
            } catch (const ZeroWeightConditioning&) {
                ++stats.skipped;
            }
        }

        // Estimating the partial estimate gives the estimate itself.
        {
            auto& stats = report.tower;
            ++stats.trials;
            std::vector<CtxItem> candidates;
            for (const auto& v : model.variables()) candidates.push_back(CtxParam{v.name});
            for (const auto& a : model.atoms()) {
                candidates.push_back(CtxKnownTruth{Prop::atom(a)});
            }
            if (candidates.empty()) {
                ++stats.skipped;
            } else {
                const Expr f = random_ground_expr(rng, model, depth);
                const CtxItem item = candidates[std::uniform_int_distribution<std::size_t>(
                    0, candidates.size() - 1)(rng)];
                const Expr lhs = Expr::estim(f, plain);
                const Expr rhs = Expr::estim(Expr::estim(f, plain.with_item(item)), plain);
                const Rational a = ev.eval(lhs);
                const Rational b = ev.eval(rhs);
                if (a == b) {
                    ++stats.passed;
                } else {
                    ++stats.failed;
                    stats.failures.push_back(describe(model, rhs) + ": " + to_string(b) +
                                             " vs direct " + to_string(a));
                }
            }
        }
    }
    return report;
}

IdentityReport verify_identities(const Model& model) {
    if (model.atoms().size() < 2) {
        throw DomainError("identity verification needs at least two atoms");
    }
    const Prop a = Prop::atom(model.atoms()[0]);
    const Prop b = Prop::atom(model.atoms()[1]);
    const Context ctx("I");
    OracleEvaluator ev(model);

    IdentityReport report;
    const auto est = [&](const Expr& body) { return ev.eval(Expr::estim(body, ctx)); };

    const Rational pa = est(Expr::prop_enc(a));
    const Rational pb = est(Expr::prop_enc(b));
    const Rational pab = est(Expr::mul({Expr::prop_enc(a), Expr::prop_enc(b)}));

    report.negation_ok = est(Expr::prop_enc(Prop::negation(a))) == 1 - pa;
    report.sum_ok =
        est(Expr::prop_enc(Prop::disjunction(a, b))) == pa + pb - pab;
    if (pa == 0) {
        report.product_skipped = true;
    } else {
        const Rational conditional =
            ev.eval(Expr::estim(Expr::prop_enc(b), Context("I", {CtxGiven{a}})));
        report.product_ok = pab == pa * conditional;
    }
    if (!report.ok()) {
        report.detail = "identities fail on model " + model.to_json().dump();
    }
    return report;
}

ExpectationDecomposition expectation_decomposition(const Model& model,
                                                   const std::string& variable) {
    const auto index = model.variable_index(variable);
    if (!index) throw UnboundSymbol(variable);
    const auto& domain = model.variables()[*index].domain;
    const Context ctx("I");
    OracleEvaluator ev(model);

    ExpectationDecomposition out;
    out.estimate = ev.eval(Expr::estim(Expr::unknown(variable), ctx));
    Rational total = 0;
    Rational weighted = 0;
    for (const Rational& value : domain) {
        const Rational p = ev.eval(Expr::estim(
            Expr::kdelta(Expr::constant(value), Expr::unknown(variable)), ctx));
        if (p < 0) {
            throw Error("expectation decomposition produced a negative probability");
        }
        out.probabilities.push_back(p);
        total += p;
        weighted += value * p;
    }
    if (total != 1) {
        throw Error("expectation decomposition probabilities sum to " + to_string(total) +
                    ", not 1");
    }
    if (weighted != out.estimate) {
        throw Error("expectation decomposition disagrees with the direct estimate: " +
                    to_string(weighted) + " vs " + to_string(out.estimate));
    }
    return out;
}

}  // namespace estim

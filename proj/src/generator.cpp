#include "estim/generator.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "estim/errors.hpp"

namespace estim {
namespace {

std::size_t pick_size(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    if (hi < lo) hi = lo;
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

int pick_int(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

bool coin(std::mt19937_64& rng) { return pick_int(rng, 0, 1) == 1; }

Rational small_rational(std::mt19937_64& rng) {
    return Rational(pick_int(rng, -3, 3), pick_int(rng, 1, 3));
}

const Model::Variable& pick_variable(std::mt19937_64& rng, const Model& model) {
    return model.variables()[pick_size(rng, 0, model.variables().size() - 1)];
}

const std::string& pick_atom(std::mt19937_64& rng, const Model& model) {
    return model.atoms()[pick_size(rng, 0, model.atoms().size() - 1)];
}

Rational pick_domain_value(std::mt19937_64& rng, const Model::Variable& v) {
    return v.domain[pick_size(rng, 0, v.domain.size() - 1)];
}

}  // namespace

Model random_model(std::mt19937_64& rng, const ModelGenSpec& spec) {
    static const std::vector<std::string> kVarNames{"x", "y", "z", "w"};
    static const std::vector<std::string> kAtomNames{"A", "B", "C", "D"};

    const std::size_t nvars =
        std::min(pick_size(rng, spec.min_variables, spec.max_variables), kVarNames.size());
    const std::size_t natoms =
        std::min(pick_size(rng, spec.min_atoms, spec.max_atoms), kAtomNames.size());

    std::vector<Model::Variable> variables;
    for (std::size_t i = 0; i < nvars; ++i) {
        std::vector<int> pool{-2, -1, 0, 1, 2, 3, 4, 5};
        std::shuffle(pool.begin(), pool.end(), rng);
        const std::size_t width = pick_size(rng, spec.min_domain, spec.max_domain);
        std::vector<Rational> domain;
        for (std::size_t k = 0; k < std::min(width, pool.size()); ++k) {
            domain.push_back(Rational(pool[k]));
        }
        std::sort(domain.begin(), domain.end());
        variables.push_back({kVarNames[i], std::move(domain)});
    }

    std::vector<std::string> atoms(kAtomNames.begin(), kAtomNames.begin() + natoms);

    std::size_t count = 1;
    for (const auto& v : variables) count *= v.domain.size();
    count <<= natoms;

    const unsigned levels = std::max(2u, spec.weight_levels);
    std::vector<long> raw(count);
    long total = 0;
    for (auto& r : raw) {
        r = pick_int(rng, 0, static_cast<int>(levels) - 1);
        total += r;
    }
    if (total == 0) {
        raw[pick_size(rng, 0, count - 1)] = 1;
        total = 1;
    }
    std::vector<Rational> weights;
    weights.reserve(count);
    for (long r : raw) weights.push_back(Rational(r, total));

    return Model(std::move(variables), std::move(atoms), std::move(weights));
}

Expr random_ground_expr(std::mt19937_64& rng, const Model& model, int depth) {
    const bool has_vars = !model.variables().empty();
    const bool has_atoms = !model.atoms().empty();

    // Leaf choices, weighted toward symbol references when the model has any.
    auto leaf = [&]() -> Expr {
        const int r = pick_int(rng, 0, 5);
        if (r <= 1 || (!has_vars && !has_atoms)) return Expr::constant(small_rational(rng));
        if (has_vars && (r <= 3 || !has_atoms)) {
            return Expr::unknown(pick_variable(rng, model).name);
        }
        return Expr::prop_enc(Prop::atom(pick_atom(rng, model)));
    };

    if (depth <= 0) return leaf();

    switch (pick_int(rng, 0, 7)) {
        case 0:
        case 1:
            return leaf();
        case 2:
        case 3: {
            std::vector<Expr> terms;
            const int n = pick_int(rng, 2, 3);
            for (int i = 0; i < n; ++i) {
                terms.push_back(random_ground_expr(rng, model, depth - 1));
            }
            return Expr::add(std::move(terms));
        }
        case 4:
        case 5: {
            std::vector<Expr> factors;
            const int n = pick_int(rng, 2, 3);
            for (int i = 0; i < n; ++i) {
                factors.push_back(random_ground_expr(rng, model, depth - 1));
            }
            return Expr::mul(std::move(factors));
        }
        case 6: {
            Expr a = has_vars ? Expr::unknown(pick_variable(rng, model).name)
                              : Expr::constant(small_rational(rng));
            Expr b = Expr::constant(Rational(pick_int(rng, -2, 5)));
            return Expr::kdelta(std::move(a), std::move(b));
        }
        default: {
            if (has_atoms || has_vars) {
                return Expr::prop_enc(random_prop(rng, model, depth - 1));
            }
            return leaf();
        }
    }
}

Prop random_prop(std::mt19937_64& rng, const Model& model, int depth) {
    const bool has_vars = !model.variables().empty();
    const bool has_atoms = !model.atoms().empty();
    if (!has_vars && !has_atoms) {
        throw DomainError("cannot draw a proposition from a model with no symbols");
    }

    auto leaf = [&]() -> Prop {
        if (has_atoms && (!has_vars || coin(rng))) return Prop::atom(pick_atom(rng, model));
        const auto& v = pick_variable(rng, model);
        // Half the time aim at a value actually in the domain.
        Rational target = coin(rng) ? pick_domain_value(rng, v)
                                    : Rational(pick_int(rng, -2, 5));
        return Prop::equals(v.name, target);
    };

    if (depth <= 0) return leaf();

    switch (pick_int(rng, 0, 4)) {
        case 0:
        case 1:
            return leaf();
        case 2:
            return Prop::negation(random_prop(rng, model, depth - 1));
        case 3:
            return Prop::conjunction(random_prop(rng, model, depth - 1),
                                     random_prop(rng, model, depth - 1));
        default:
            return Prop::disjunction(random_prop(rng, model, depth - 1),
                                     random_prop(rng, model, depth - 1));
    }
}

Context random_context(std::mt19937_64& rng, const Model& model, bool allow_params) {
    std::vector<CtxItem> items;
    for (const auto& v : model.variables()) {
        switch (pick_int(rng, 0, 2)) {
            case 0:
                break;
            case 1:
                items.push_back(CtxAssign{v.name, pick_domain_value(rng, v)});
                break;
            default:
                if (allow_params) items.push_back(CtxParam{v.name});
                break;
        }
    }
    for (const auto& a : model.atoms()) {
        switch (pick_int(rng, 0, 2)) {
            case 0:
                break;
            case 1:
                items.push_back(CtxGiven{coin(rng) ? Prop::atom(a)
                                                   : Prop::negation(Prop::atom(a))});
                break;
            default:
                if (allow_params) items.push_back(CtxKnownTruth{Prop::atom(a)});
                break;
        }
    }
    return Context("I", std::move(items));
}

Expr random_closed_expr(std::mt19937_64& rng, const Model& model, int depth) {
    auto leaf = [&]() -> Expr { return Expr::constant(small_rational(rng)); };

    // An estimate of a ground body under a param-free context has no free
    // references regardless of what the body mentions.
    auto closed_estimate = [&]() -> Expr {
        return Expr::estim(random_ground_expr(rng, model, std::max(0, depth - 1)),
                           random_context(rng, model, false));
    };

    if (depth <= 0) return coin(rng) ? leaf() : closed_estimate();

    switch (pick_int(rng, 0, 6)) {
        case 0:
            return leaf();
        case 1:
        case 2:
            return closed_estimate();
        case 3:
        case 4: {
            std::vector<Expr> terms;
            const int n = pick_int(rng, 2, 3);
            for (int i = 0; i < n; ++i) {
                terms.push_back(random_closed_expr(rng, model, depth - 1));
            }
            return Expr::add(std::move(terms));
        }
        case 5: {
            std::vector<Expr> factors;
            const int n = pick_int(rng, 2, 2);
            for (int i = 0; i < n; ++i) {
                factors.push_back(random_closed_expr(rng, model, depth - 1));
            }
            return Expr::mul(std::move(factors));
        }
        default:
            return Expr::kdelta(random_closed_expr(rng, model, depth - 1),
                                Expr::constant(Rational(pick_int(rng, -1, 2))));
    }
}

namespace {

const std::vector<std::string>& syntax_unknowns() {
    static const std::vector<std::string> pool{"x", "y", "z", "w", "a", "b"};
    return pool;
}

const std::vector<std::string>& syntax_atoms() {
    static const std::vector<std::string> pool{"A", "B", "C", "D"};
    return pool;
}

const std::vector<std::string>& syntax_backgrounds() {
    static const std::vector<std::string> pool{"I", "J", "K"};
    return pool;
}

template <typename T>
const T& pick_from(std::mt19937_64& rng, const std::vector<T>& pool) {
    return pool[pick_size(rng, 0, pool.size() - 1)];
}

Prop random_syntax_prop(std::mt19937_64& rng, int depth) {
    auto leaf = [&]() -> Prop {
        if (coin(rng)) return Prop::atom(pick_from(rng, syntax_atoms()));
        return Prop::equals(pick_from(rng, syntax_unknowns()),
                            Rational(pick_int(rng, -2, 3)));
    };
    if (depth <= 0) return leaf();
    switch (pick_int(rng, 0, 4)) {
        case 0:
        case 1:
            return leaf();
        case 2:
            return Prop::negation(random_syntax_prop(rng, depth - 1));
        case 3:
            return Prop::conjunction(random_syntax_prop(rng, depth - 1),
                                     random_syntax_prop(rng, depth - 1));
        default:
            return Prop::disjunction(random_syntax_prop(rng, depth - 1),
                                     random_syntax_prop(rng, depth - 1));
    }
}

Context random_syntax_context(std::mt19937_64& rng) {
    std::vector<CtxItem> items;
    // One role per symbol, so the context's well-formedness rules cannot be
    // violated by clashing picks.
    for (const auto& u : syntax_unknowns()) {
        switch (pick_int(rng, 0, 5)) {
            case 0:
                items.push_back(CtxAssign{u, Rational(pick_int(rng, -2, 3))});
                break;
            case 1:
                items.push_back(CtxParam{u});
                break;
            default:
                break;
        }
    }
    for (const auto& a : syntax_atoms()) {
        switch (pick_int(rng, 0, 5)) {
            case 0:
                items.push_back(CtxGiven{coin(rng) ? Prop::atom(a)
                                                   : Prop::negation(Prop::atom(a))});
                break;
            case 1:
                items.push_back(CtxKnownTruth{Prop::atom(a)});
                break;
            default:
                break;
        }
    }
    return Context(pick_from(rng, syntax_backgrounds()), std::move(items));
}

}  // namespace

Expr random_syntax_expr(std::mt19937_64& rng, int depth) {
    auto leaf = [&]() -> Expr {
        switch (pick_int(rng, 0, 3)) {
            case 0:
                return Expr::constant(small_rational(rng));
            case 1:
                return Expr::unknown(pick_from(rng, syntax_unknowns()));
            default:
                return Expr::prop_enc(Prop::atom(pick_from(rng, syntax_atoms())));
        }
    };

    if (depth <= 0) return leaf();

    switch (pick_int(rng, 0, 8)) {
        case 0:
            return leaf();
        case 1:
        case 2: {
            std::vector<Expr> terms;
            const int n = pick_int(rng, 2, 3);
            for (int i = 0; i < n; ++i) terms.push_back(random_syntax_expr(rng, depth - 1));
            return Expr::add(std::move(terms));
        }
        case 3:
        case 4: {
            std::vector<Expr> factors;
            const int n = pick_int(rng, 2, 3);
            for (int i = 0; i < n; ++i) {
                factors.push_back(random_syntax_expr(rng, depth - 1));
            }
            return Expr::mul(std::move(factors));
        }
        case 5:
            return Expr::kdelta(random_syntax_expr(rng, depth - 1),
                                random_syntax_expr(rng, depth - 1));
        case 6:
            return Expr::prop_enc(random_syntax_prop(rng, depth - 1));
        default:
            return Expr::estim(random_syntax_expr(rng, depth - 1),
                               random_syntax_context(rng));
    }
}

}  // namespace estim

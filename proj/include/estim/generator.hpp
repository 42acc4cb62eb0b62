#pragma once

#include <cstddef>
#include <random>

#include "estim/expr.hpp"
#include "estim/oracle.hpp"
#include "estim/prop.hpp"

namespace estim {

/// Bounds for randomly generated weight models. Domains are small distinct
/// integers and weights are exact rationals k/total, so every downstream
/// comparison can be exact.
struct ModelGenSpec {
    std::size_t min_variables = 1;
    std::size_t max_variables = 2;
    std::size_t min_domain = 2;
    std::size_t max_domain = 3;
    std::size_t min_atoms = 0;
    std::size_t max_atoms = 2;
    /// Per-outcome weights are drawn as integers in [0, weight_levels), then
    /// normalized. Zero levels are kept, so models with empty support regions
    /// (and hence conditioning failures) do occur.
    unsigned weight_levels = 8;
};

/// A random finite weight model within the given bounds.
Model random_model(std::mt19937_64& rng, const ModelGenSpec& spec = {});

/// A random estimation-free expression over the model's variables and atoms.
/// Every symbol it mentions is interpretable in any outcome of the model.
Expr random_ground_expr(std::mt19937_64& rng, const Model& model, int depth);

/// A random proposition over the model's atoms and variable domains.
/// Requires the model to have at least one atom or one variable.
Prop random_prop(std::mt19937_64& rng, const Model& model, int depth);

/// A random context over the model's symbols with background "I". Each
/// variable is independently skipped, assigned a domain value, or (when
/// allow_params is set) listed with value unspecified; each atom is skipped,
/// given as true or false, or (when allow_params is set) listed with truth
/// unspecified.
Context random_context(std::mt19937_64& rng, const Model& model, bool allow_params);

/// A random expression with no free references: constants, arithmetic over
/// closed parts, and estimates of ground bodies under param-free contexts.
Expr random_closed_expr(std::mt19937_64& rng, const Model& model, int depth);

/// A random well-formed expression over fixed symbol pools, independent of
/// any model. Exercises the whole concrete syntax (nested estimates, every
/// context item form, encoded propositions, deltas, signed constants) for
/// print/parse round-trips.
Expr random_syntax_expr(std::mt19937_64& rng, int depth);

}  // namespace estim

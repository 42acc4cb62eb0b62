#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "estim/expr.hpp"

namespace estim {

// Tabulated density on [a, b], one value per equal-width cell, evaluated by
// the midpoint rule.
struct GridModel {
    double a = 0.0;
    double b = 1.0;
    std::vector<double> densities;
};

struct GridEstimate {
    double value;          // integral of x times the density
    double normalization;  // integral of the density
};

// Midpoint-rule estimate of the tabulated distribution's mean. Throws
// DomainError for a negative density or an empty or inverted grid, and
// NormalizationError when the density's integral is farther than 1e-6 from 1.
GridEstimate grid_eval(const GridModel& grid);

// A finite joint weight table over named discrete variables and atomic
// propositions. Weights are exact nonnegative rationals summing to one.
// Outcomes are indexed 0..outcome_count()-1, mixed-radix over the variable
// domains with atom truth bits on top.
class Model {
public:
    struct Variable {
        std::string name;
        std::vector<Rational> domain;
    };

    Model(std::vector<Variable> variables, std::vector<std::string> atoms,
          std::vector<Rational> weights, std::optional<GridModel> grid = std::nullopt);

    // Normative JSON form: variables with string-rational domains, atom
    // names, sparse weight entries binding every variable and atom, and an
    // optional grid block. Unlisted outcomes carry weight zero. Violations
    // throw ModelError; a grid density farther than 1e-9 from unit integral
    // throws NormalizationError.
    static Model from_json(const nlohmann::json& doc);
    static Model from_file(const std::string& path);
    nlohmann::json to_json() const;

    const std::vector<Variable>& variables() const { return variables_; }
    const std::vector<std::string>& atoms() const { return atoms_; }
    const std::optional<GridModel>& grid() const { return grid_; }

    std::size_t outcome_count() const { return weights_.size(); }
    const Rational& weight(std::size_t outcome) const { return weights_[outcome]; }

    std::optional<std::size_t> variable_index(const std::string& name) const;
    std::optional<std::size_t> atom_index(const std::string& name) const;

    const Rational& value_of(std::size_t outcome, std::size_t variable) const;
    bool truth_of(std::size_t outcome, std::size_t atom) const;

    // The outcome index with the given variable-domain positions and atom
    // truths; digits[i] indexes variables()[i].domain.
    std::size_t outcome_index(const std::vector<std::size_t>& digits,
                              const std::vector<bool>& truths) const;

private:
    std::vector<Variable> variables_;
    std::vector<std::string> atoms_;
    std::vector<Rational> weights_;
    std::vector<std::size_t> strides_;
    std::optional<GridModel> grid_;
};

// Evaluates expressions against one model as conditional expectations over
// the weight table: est(body | ctx) averages the body over the outcomes
// consistent with the context, weighted by the table, conditioned again on
// any enclosing outcome. Caches nested estimates by their free-reference
// values.
class OracleEvaluator {
public:
    explicit OracleEvaluator(const Model& model) : model_(model) {}
    // The evaluator only borrows the model; a temporary would dangle.
    explicit OracleEvaluator(Model&&) = delete;

    // The expression must be closed (no free references).
    Rational eval(const Expr& e);

    // Evaluates under an enclosing outcome, which supplies the values of free
    // references.
    Rational eval_at(const Expr& e, std::size_t outcome);

    bool prop_truth(const Prop& p, std::size_t outcome) const;

private:
    Rational eval_impl(const Expr& e, std::optional<std::size_t> outcome);
    Rational eval_estim(const Expr& e, std::optional<std::size_t> outcome);

    // Keyed by node identity plus the values of the node's free references.
    // The entry pins the expression so the keyed address cannot be recycled
    // by a later allocation.
    struct CacheEntry {
        Rational value;
        Expr pinned;
    };

    const Model& model_;
    std::map<std::pair<const void*, std::string>, CacheEntry> cache_;
};

Rational oracle_eval(const Expr& e, const Model& model);

// ---------------------------------------------------------------------------
// Requirement and identity checks

struct PropertyStats {
    std::string name;
    int trials = 0;
    int passed = 0;
    int failed = 0;
    int skipped = 0;
    std::vector<std::string> failures;
    bool ok() const { return failed == 0; }
};

struct RequirementsReport {
    PropertyStats known_evaluation;   // full conditioning reproduces ground evaluation
    PropertyStats bounds;             // estimate lies within the attained range
    PropertyStats linearity;          // est(a*f + b*g) = a*est(f) + b*est(g)
    PropertyStats tower;              // est(f) = est(est(f | v)) for fresh parameters
    bool ok() const;
};

// Property checks of the estimation operator against this model, driven by
// seeded random expressions.
RequirementsReport check_requirements(const Model& model, int trials, std::uint64_t seed,
                                      int depth = 3);

struct IdentityReport {
    bool negation_ok = false;
    bool sum_ok = false;
    bool product_ok = false;
    bool product_skipped = false;  // the conditioning event has weight zero
    std::string detail;
    bool ok() const { return negation_ok && sum_ok && (product_ok || product_skipped); }
};

// Checks the negation, sum, and product identities numerically over the
// model's first two atoms. Needs at least two atoms.
IdentityReport verify_identities(const Model& model);

struct ExpectationDecomposition {
    std::vector<Rational> probabilities;  // est(delta(x_i, x)) per domain value
    Rational estimate;                    // est(x)
};

// Decomposes est(x) over the variable's domain and verifies the probability
// laws: each weight nonnegative, unit total, and the weighted sum equal to
// the direct estimate. Violations throw Error.
ExpectationDecomposition expectation_decomposition(const Model& model,
                                                   const std::string& variable);

}  // namespace estim

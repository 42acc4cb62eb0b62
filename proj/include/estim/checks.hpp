#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "estim/oracle.hpp"
#include "estim/rewrite.hpp"

namespace estim {

struct CheckConfig {
    /// Random models (or expression draws, for model-free properties) per
    /// property.
    int trials = 100;
    std::uint64_t seed = 1;
    int fuel = 10000;
    /// When set, every model-driven property runs against this model instead
    /// of freshly drawn ones.
    std::optional<Model> model;
};

struct PropertyResult {
    std::string name;
    int trials = 0;
    int passed = 0;
    int failed = 0;
    int skipped = 0;
    std::vector<std::string> counterexamples;  // at most a handful, first seen
    bool ok() const { return failed == 0; }
};

struct CheckReport {
    std::vector<PropertyResult> properties;
    bool ok() const;
    const PropertyResult* find(const std::string& name) const;
};

/// Runs the whole property suite against the given rule registry: operator
/// requirements, the negation/sum/product identities, per-rule and factory
/// soundness (every registry rule is also exercised on fixed instances, so a
/// wrong rule cannot hide behind random draws), normalization soundness and
/// trace replay, probability bounds of normalized estimates, expectation
/// decompositions, and print/parse round-trips.
CheckReport run_checks(const CheckConfig& config, const std::vector<RewriteRule>& rules);
CheckReport run_checks(const CheckConfig& config = {});

/// The registry with the named rule altered to return its result plus one
/// wherever it fires. run_checks over the result must report rule-soundness
/// failures, which is itself tested; DomainError when the name is unknown.
std::vector<RewriteRule> make_tampered(std::vector<RewriteRule> rules,
                                       const std::string& name);

std::string format_report(const CheckReport& report);

}  // namespace estim

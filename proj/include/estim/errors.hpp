#pragma once

#include <stdexcept>
#include <string>

namespace estim {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A symbol (unknown or atom) was referenced but not bound anywhere.
struct UnboundSymbol : Error {
    std::string symbol;
    explicit UnboundSymbol(const std::string& sym)
        : Error("unbound symbol: " + sym), symbol(sym) {}
};

// Ill-formed construction or a rule invoked outside its domain.
struct DomainError : Error {
    using Error::Error;
};

// The outcomes consistent with a conditioning context have total weight zero,
// so the conditional value is undefined.
struct ZeroWeightConditioning : Error {
    std::string context;
    explicit ZeroWeightConditioning(const std::string& ctx)
        : Error("conditioning on a zero-weight event: " + ctx), context(ctx) {}
};

// The rewrite step budget ran out before reaching a fixpoint.
struct FuelExhausted : Error {
    int steps;
    explicit FuelExhausted(int n)
        : Error("rewrite fuel exhausted after " + std::to_string(n) + " steps"),
          steps(n) {}
};

// A density table does not integrate to one within tolerance.
struct NormalizationError : Error {
    using Error::Error;
};

// A model file or model construction violates the schema.
struct ModelError : Error {
    using Error::Error;
};

}  // namespace estim

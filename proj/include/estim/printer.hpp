#pragma once

#include <string>

#include "estim/expr.hpp"

namespace estim {

// Keyword is the parseable concrete syntax (est, n, delta). Braces renders
// estimations as {body}_{ctx} for trace display.
enum class PrintStyle { Keyword, Braces };

// Canonical rendering: parsing the keyword-style output of a canonical
// expression gives back an equal expression.
std::string print_expr(const Expr& e, PrintStyle style = PrintStyle::Keyword);
std::string print_prop(const Prop& p);
std::string print_context(const Context& ctx);
std::string print_ctx_item(const CtxItem& item);

// Conditional-probability notation: est(n(P) | C) renders as P(P|C) and
// est(delta(c, x) | C) as P(x=c|C). Presentational only, not re-parseable.
std::string to_probability_form(const Expr& e);

}  // namespace estim

#pragma once

#include <string>
#include <string_view>

#include "estim/errors.hpp"
#include "estim/expr.hpp"

namespace estim {

struct SyntaxError : Error {
    SourceSpan span;
    std::string expected;
    SyntaxError(const std::string& message, SourceSpan where, std::string what_was_expected)
        : Error("syntax error at line " + std::to_string(where.line) + ", column " +
                std::to_string(where.column) + ": " + message),
          span(where),
          expected(std::move(what_was_expected)) {}
};

// Parses one complete expression. Whitespace is free; '#' starts a comment
// running to end of line. The result is canonical, and node spans point into
// the given text.
//
// Bare context items are classified by spelling: an identifier starting with
// an uppercase letter is an asserted proposition, a lowercase one is a known
// parameter, and the final bare identifier is always the background symbol.
Expr parse_expr(std::string_view text);

// Parses one complete proposition.
Prop parse_prop(std::string_view text);

// Two-line diagnostic: the offending source line and a caret column marker.
std::string format_syntax_error(const SyntaxError& err, std::string_view text);

}  // namespace estim

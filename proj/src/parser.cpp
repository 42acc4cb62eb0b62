#include "estim/parser.hpp"

#include <cctype>
#include <set>
#include <vector>

namespace estim {

namespace {

enum class Tok {
    Number,
    Ident,
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
    Bar,
    Comma,
    Assign,
    Question,
    End,
};

struct Token {
    Tok kind;
    std::string text;
    SourceSpan span;
};

const std::set<std::string>& reserved_words() {
    static const std::set<std::string> words = {"est", "n", "delta", "not", "and", "or"};
    return words;
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_blank();
            if (pos_ >= src_.size()) {
                out.push_back({Tok::End, "", here(0)});
                return out;
            }
            const char c = src_[pos_];
            if (std::isdigit(static_cast<unsigned char>(c))) {
                out.push_back(number());
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                out.push_back(ident());
            } else {
                out.push_back(punct());
            }
        }
    }

private:
    SourceSpan here(std::size_t len) const {
        return {pos_, pos_ + len, line_, static_cast<int>(pos_ - line_start_) + 1};
    }

    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            line_start_ = pos_ + 1;
        }
        ++pos_;
    }

    void skip_blank() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                return;
            }
        }
    }

    Token number() {
        const SourceSpan start = here(0);
        std::string text;
        const auto digits = [&] {
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                text += src_[pos_];
                advance();
            }
        };
        digits();
        if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == '/')) {
            const char sep = src_[pos_];
            text += sep;
            advance();
            const std::size_t before = text.size();
            digits();
            if (text.size() == before) {
                throw SyntaxError(std::string("digits must follow '") + sep + "' in a number",
                                  here(1), "digit");
            }
        }
        SourceSpan span = start;
        span.end = pos_;
        return {Tok::Number, std::move(text), span};
    }

    Token ident() {
        const SourceSpan start = here(0);
        std::string text;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                      src_[pos_] == '_')) {
            text += src_[pos_];
            advance();
        }
        SourceSpan span = start;
        span.end = pos_;
        return {Tok::Ident, std::move(text), span};
    }

    Token punct() {
        const SourceSpan span = here(1);
        const char c = src_[pos_];
        advance();
        switch (c) {
            case '+': return {Tok::Plus, "+", span};
            case '-': return {Tok::Minus, "-", span};
            case '*': return {Tok::Star, "*", span};
            case '(': return {Tok::LParen, "(", span};
            case ')': return {Tok::RParen, ")", span};
            case '|': return {Tok::Bar, "|", span};
            case ',': return {Tok::Comma, ",", span};
            case '=': return {Tok::Assign, "=", span};
            case '?': return {Tok::Question, "?", span};
            default:
                throw SyntaxError(std::string("unexpected character '") + c + "'", span, "token");
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::size_t line_start_ = 0;
};

const char* token_name(Tok t) {
    switch (t) {
        case Tok::Number: return "number";
        case Tok::Ident: return "identifier";
        case Tok::Plus: return "'+'";
        case Tok::Minus: return "'-'";
        case Tok::Star: return "'*'";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::Bar: return "'|'";
        case Tok::Comma: return "','";
        case Tok::Assign: return "'='";
        case Tok::Question: return "'?'";
        case Tok::End: return "end of input";
    }
    return "token";
}

class Parser {
public:
    explicit Parser(std::string_view src) : toks_(Lexer(src).run()) {}

    Expr parse_expression_all() {
        Expr e = expression();
        expect_end();
        return e;
    }

    Prop parse_prop_all() {
        Prop p = prop();
        expect_end();
        return p;
    }

private:
    const Token& peek(std::size_t ahead = 0) const {
        const std::size_t i = pos_ + ahead;
        return i < toks_.size() ? toks_[i] : toks_.back();
    }

    const Token& take() {
        const Token& t = peek();
        if (t.kind != Tok::End) ++pos_;
        return t;
    }

    bool accept(Tok kind) {
        if (peek().kind != kind) return false;
        take();
        return true;
    }

    const Token& expect(Tok kind, const char* what) {
        if (peek().kind != kind) {
            throw SyntaxError(std::string("expected ") + what + " but found " +
                                  token_name(peek().kind),
                              peek().span, what);
        }
        return toks_[pos_++];
    }

    void expect_end() {
        if (peek().kind != Tok::End) {
            throw SyntaxError(std::string("unexpected ") + token_name(peek().kind) +
                                  " after a complete input",
                              peek().span, "end of input");
        }
    }

    SourceSpan span_from(std::size_t start_tok) const {
        const SourceSpan& first = toks_[start_tok].span;
        const SourceSpan& last = toks_[pos_ > start_tok ? pos_ - 1 : start_tok].span;
        return {first.begin, last.end, first.line, first.column};
    }

    Rational number_value(const Token& t) {
        try {
            return rational_from_string(t.text);
        } catch (const DomainError& e) {
            throw SyntaxError(e.what(), t.span, "number");
        }
    }

    // expr := term (('+' | '-') term)*
    Expr expression() {
        const std::size_t start = pos_;
        std::vector<Expr> terms;
        terms.push_back(term());
        for (;;) {
            if (accept(Tok::Plus)) {
                terms.push_back(term());
            } else if (accept(Tok::Minus)) {
                terms.push_back(Expr::neg(term()));
            } else {
                break;
            }
        }
        return Expr::add(std::move(terms)).with_span(span_from(start));
    }

    // term := factor ('*' factor)*
    Expr term() {
        const std::size_t start = pos_;
        std::vector<Expr> factors;
        factors.push_back(factor());
        while (accept(Tok::Star)) factors.push_back(factor());
        return Expr::mul(std::move(factors)).with_span(span_from(start));
    }

    Expr factor() {
        const std::size_t start = pos_;
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Minus: {
                take();
                if (peek().kind == Tok::Number) {
                    const Token& num = take();
                    return Expr::constant(Rational(-number_value(num))).with_span(span_from(start));
                }
                return Expr::neg(factor()).with_span(span_from(start));
            }
            case Tok::Number: {
                take();
                return Expr::constant(number_value(t)).with_span(span_from(start));
            }
            case Tok::LParen: {
                take();
                Expr e = expression();
                expect(Tok::RParen, "')'");
                return e.with_span(span_from(start));
            }
            case Tok::Ident: {
                if (t.text == "est") return estimation();
                if (t.text == "n") return encoded_prop();
                if (t.text == "delta") return delta();
                if (reserved_words().count(t.text)) {
                    throw SyntaxError("'" + t.text + "' is a reserved word", t.span, "expression");
                }
                take();
                return Expr::unknown(t.text).with_span(span_from(start));
            }
            default:
                throw SyntaxError(std::string("expected an expression but found ") +
                                      token_name(t.kind),
                                  t.span, "expression");
        }
    }

    Expr estimation() {
        const std::size_t start = pos_;
        take();  // est
        expect(Tok::LParen, "'('");
        Expr body = expression();
        expect(Tok::Bar, "'|'");
        Context ctx = context();
        expect(Tok::RParen, "')'");
        return Expr::estim(std::move(body), std::move(ctx)).with_span(span_from(start));
    }

    Expr encoded_prop() {
        const std::size_t start = pos_;
        take();  // n
        expect(Tok::LParen, "'('");
        Prop p = prop();
        expect(Tok::RParen, "')'");
        return Expr::prop_enc(std::move(p)).with_span(span_from(start));
    }

    Expr delta() {
        const std::size_t start = pos_;
        take();  // delta
        expect(Tok::LParen, "'('");
        Expr a = expression();
        expect(Tok::Comma, "','");
        Expr b = expression();
        expect(Tok::RParen, "')'");
        return Expr::kdelta(std::move(a), std::move(b)).with_span(span_from(start));
    }

    // prop := conjunct ('or' conjunct)*
    Prop prop() {
        Prop p = conjunct();
        while (peek().kind == Tok::Ident && peek().text == "or") {
            take();
            p = Prop::disjunction(std::move(p), conjunct());
        }
        return p;
    }

    Prop conjunct() {
        Prop p = negation();
        while (peek().kind == Tok::Ident && peek().text == "and") {
            take();
            p = Prop::conjunction(std::move(p), negation());
        }
        return p;
    }

    Prop negation() {
        const Token& t = peek();
        if (t.kind == Tok::Ident && t.text == "not") {
            take();
            return Prop::negation(negation());
        }
        if (t.kind == Tok::LParen) {
            take();
            Prop p = prop();
            expect(Tok::RParen, "')'");
            return p;
        }
        if (t.kind == Tok::Ident) {
            if (reserved_words().count(t.text)) {
                throw SyntaxError("'" + t.text + "' is a reserved word", t.span, "proposition");
            }
            take();
            if (accept(Tok::Assign)) return Prop::equals(t.text, equality_value());
            return Prop::atom(t.text);
        }
        throw SyntaxError(std::string("expected a proposition but found ") + token_name(t.kind),
                          t.span, "proposition");
    }

    Rational equality_value() {
        bool negative = accept(Tok::Minus);
        const Token& num = expect(Tok::Number, "number");
        Rational v = number_value(num);
        return negative ? Rational(-v) : v;
    }

    // ctx := ctxitem (',' ctxitem)*; the final item must be a bare identifier
    // and names the background.
    Context context() {
        struct RawItem {
            enum Kind { Bare, Made } kind;
            std::string name;    // Bare
            CtxItem item{CtxParam{}};  // Made
            SourceSpan span;
        };
        std::vector<RawItem> raw;
        for (;;) {
            const Token& t = peek();
            if (t.kind == Tok::LParen) {
                const std::size_t start = pos_;
                take();
                Prop p = prop();
                expect(Tok::RParen, "')'");
                CtxItem item = CtxGiven{p};
                if (accept(Tok::Assign)) {
                    expect(Tok::Question, "'?'");
                    item = CtxKnownTruth{p};
                }
                raw.push_back({RawItem::Made, "", std::move(item), span_from(start)});
            } else if (t.kind == Tok::Ident) {
                if (reserved_words().count(t.text)) {
                    throw SyntaxError("'" + t.text + "' is a reserved word", t.span,
                                      "context item");
                }
                const std::size_t start = pos_;
                take();
                if (accept(Tok::Assign)) {
                    if (accept(Tok::Question)) {
                        // x=? states that the value (or truth) is known but
                        // unspecified; the spelling picks the reading.
                        CtxItem item = uppercase_first(t.text)
                                           ? CtxItem(CtxKnownTruth{Prop::atom(t.text)})
                                           : CtxItem(CtxParam{t.text});
                        raw.push_back({RawItem::Made, "", std::move(item), span_from(start)});
                    } else {
                        Rational v = equality_value();
                        raw.push_back({RawItem::Made, "", CtxAssign{t.text, std::move(v)},
                                       span_from(start)});
                    }
                } else {
                    raw.push_back({RawItem::Bare, t.text, CtxParam{}, t.span});
                }
            } else {
                throw SyntaxError(std::string("expected a context item but found ") +
                                      token_name(t.kind),
                                  t.span, "context item");
            }
            if (!accept(Tok::Comma)) break;
        }
        if (raw.back().kind != RawItem::Bare) {
            throw SyntaxError("a context must end with its background symbol", raw.back().span,
                              "background symbol");
        }
        const std::string background = raw.back().name;
        raw.pop_back();
        std::vector<CtxItem> items;
        items.reserve(raw.size());
        for (RawItem& r : raw) {
            if (r.kind == RawItem::Made) {
                items.push_back(std::move(r.item));
            } else if (uppercase_first(r.name)) {
                items.push_back(CtxGiven{Prop::atom(r.name)});
            } else {
                items.push_back(CtxParam{r.name});
            }
        }
        return Context(background, std::move(items));
    }

    static bool uppercase_first(const std::string& name) {
        return !name.empty() && std::isupper(static_cast<unsigned char>(name[0]));
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view text) { return Parser(text).parse_expression_all(); }

Prop parse_prop(std::string_view text) { return Parser(text).parse_prop_all(); }

std::string format_syntax_error(const SyntaxError& err, std::string_view text) {
    std::size_t line_begin = 0;
    int line = 1;
    for (std::size_t i = 0; i < err.span.begin && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            line_begin = i + 1;
        }
    }
    std::size_t line_end = line_begin;
    while (line_end < text.size() && text[line_end] != '\n') ++line_end;
    std::string out(err.what());
    out += "\n  ";
    out += std::string(text.substr(line_begin, line_end - line_begin));
    out += "\n  ";
    out += std::string(err.span.column > 0 ? err.span.column - 1 : 0, ' ');
    out += "^";
    return out;
}

}  // namespace estim

#include "estim/printer.hpp"

#include <cctype>

#include "estim/errors.hpp"

namespace estim {

namespace {

// Binding strengths for proposition printing; higher binds tighter.
constexpr int kOrPrec = 0;
constexpr int kAndPrec = 1;
constexpr int kNotPrec = 2;
constexpr int kLeafPrec = 3;

std::string prop_to_string(const Prop& p, int min_prec) {
    const auto wrap = [&](int prec, std::string s) {
        return prec < min_prec ? "(" + s + ")" : s;
    };
    switch (p.kind()) {
        case PropKind::Atom:
            return p.name();
        case PropKind::Equals:
            return p.name() + "=" + to_string(p.value());
        case PropKind::Not:
            return wrap(kNotPrec, "not " + prop_to_string(p.lhs(), kNotPrec));
        case PropKind::And:
            return wrap(kAndPrec, prop_to_string(p.lhs(), kAndPrec) + " and " +
                                      prop_to_string(p.rhs(), kAndPrec + 1));
        case PropKind::Or:
            return wrap(kOrPrec, prop_to_string(p.lhs(), kOrPrec) + " or " +
                                     prop_to_string(p.rhs(), kOrPrec + 1));
    }
    throw DomainError("corrupt proposition node");
}

bool uppercase_first(const std::string& name) {
    return !name.empty() && std::isupper(static_cast<unsigned char>(name[0]));
}

std::string context_to_string(const Context& ctx, bool tight) {
    std::string out;
    const char* sep = tight ? "," : ", ";
    for (const CtxItem& item : ctx.items()) {
        out += print_ctx_item(item);
        out += sep;
    }
    out += ctx.background();
    return out;
}

struct Printer {
    PrintStyle style;

    std::string expr(const Expr& e) const {
        switch (e.kind()) {
            case ExprKind::Const:
                return to_string(e.const_value());
            case ExprKind::Unknown:
                return e.unknown_name();
            case ExprKind::PropEnc:
                return "n(" + prop_to_string(e.prop(), kOrPrec) + ")";
            case ExprKind::KDelta:
                return "delta(" + expr(e.children()[0]) + ", " + expr(e.children()[1]) + ")";
            case ExprKind::Estim: {
                const std::string body = expr(e.estim_body());
                const std::string ctx = context_to_string(e.context(), false);
                if (style == PrintStyle::Braces) return "{" + body + "}_{" + ctx + "}";
                return "est(" + body + " | " + ctx + ")";
            }
            case ExprKind::Mul:
                return product(e.children());
            case ExprKind::Add:
                return sum(e.children());
        }
        throw DomainError("corrupt expression node");
    }

    std::string factor(const Expr& e) const {
        if (e.kind() == ExprKind::Add || e.kind() == ExprKind::Mul) {
            return "(" + expr(e) + ")";
        }
        return expr(e);
    }

    // Renders factors with the leading constant folded into the result's
    // sign handled by the caller; coefficient must be positive.
    std::string product_magnitude(const std::vector<Expr>& factors, const Rational& coeff) const {
        std::string out;
        if (coeff != 1) out = to_string(coeff);
        for (const Expr& f : factors) {
            if (f.kind() == ExprKind::Const) continue;
            if (!out.empty()) out += " * ";
            out += factor(f);
        }
        return out.empty() ? to_string(coeff) : out;
    }

    std::string product(const std::vector<Expr>& factors) const {
        Rational coeff = 1;
        if (!factors.empty() && factors.front().kind() == ExprKind::Const) {
            coeff = factors.front().const_value();
        }
        const bool negative = coeff < 0;
        std::string mag = product_magnitude(factors, negative ? Rational(-coeff) : coeff);
        return negative ? "-" + mag : mag;
    }

    // Sign and magnitude of one summand, so sums print with infix minus.
    std::pair<bool, std::string> signed_term(const Expr& t) const {
        if (t.kind() == ExprKind::Const && t.const_value() < 0) {
            return {true, to_string(Rational(-t.const_value()))};
        }
        if (t.kind() == ExprKind::Mul) {
            const Rational c = t.children().front().kind() == ExprKind::Const
                                   ? t.children().front().const_value()
                                   : Rational(1);
            if (c < 0) return {true, product_magnitude(t.children(), Rational(-c))};
        }
        return {false, expr(t)};
    }

    std::string sum(const std::vector<Expr>& terms) const {
        std::string out;
        bool first = true;
        for (const Expr& t : terms) {
            auto [negative, mag] = signed_term(t);
            if (first) {
                out += negative ? "-" + mag : mag;
                first = false;
            } else {
                out += negative ? " - " : " + ";
                out += mag;
            }
        }
        return out;
    }
};

}  // namespace

std::string print_prop(const Prop& p) {
    if (!p.valid()) throw DomainError("empty proposition");
    return prop_to_string(p, kOrPrec);
}

std::string print_ctx_item(const CtxItem& item) {
    if (const auto* a = std::get_if<CtxAssign>(&item)) {
        return a->name + "=" + to_string(a->value);
    }
    if (const auto* p = std::get_if<CtxParam>(&item)) {
        return p->name;
    }
    if (const auto* g = std::get_if<CtxGiven>(&item)) {
        if (g->prop.kind() == PropKind::Atom && uppercase_first(g->prop.name())) {
            return g->prop.name();
        }
        return "(" + print_prop(g->prop) + ")";
    }
    const auto& k = std::get<CtxKnownTruth>(item);
    if (k.prop.kind() == PropKind::Atom && uppercase_first(k.prop.name())) {
        return k.prop.name() + "=?";
    }
    return "(" + print_prop(k.prop) + ")=?";
}

std::string print_context(const Context& ctx) { return context_to_string(ctx, false); }

std::string print_expr(const Expr& e, PrintStyle style) {
    if (!e.valid()) throw DomainError("empty expression");
    return Printer{style}.expr(e);
}

// ---------------------------------------------------------------------------
// Probability notation

namespace {

struct ProbPrinter {
    std::string render(const Expr& e) const {
        switch (e.kind()) {
            case ExprKind::Estim: {
                const Expr& body = e.estim_body();
                const std::string ctx = context_to_string(e.context(), true);
                if (body.kind() == ExprKind::PropEnc) {
                    return "P(" + prop_to_string(body.prop(), kOrPrec) + "|" + ctx + ")";
                }
                if (body.kind() == ExprKind::KDelta) {
                    const Expr& a = body.children()[0];
                    const Expr& b = body.children()[1];
                    if (a.kind() == ExprKind::Const && b.kind() == ExprKind::Unknown) {
                        return "P(" + b.unknown_name() + "=" + to_string(a.const_value()) +
                               "|" + ctx + ")";
                    }
                    if (a.kind() == ExprKind::Unknown && b.kind() == ExprKind::Const) {
                        return "P(" + a.unknown_name() + "=" + to_string(b.const_value()) +
                               "|" + ctx + ")";
                    }
                }
                return "est(" + render(body) + " | " + context_to_string(e.context(), false) + ")";
            }
            case ExprKind::Mul:
                return product(e.children());
            case ExprKind::Add:
                return sum(e.children());
            default:
                return print_expr(e);
        }
    }

    std::string rendered_factor(const Expr& f) const {
        if (f.kind() == ExprKind::Add || f.kind() == ExprKind::Mul) {
            return "(" + render(f) + ")";
        }
        return render(f);
    }

    std::string magnitude(const std::vector<Expr>& factors, const Rational& coeff) const {
        std::vector<std::string> parts;
        for (const Expr& f : factors) {
            if (f.kind() == ExprKind::Const) continue;
            parts.push_back(rendered_factor(f));
        }
        if (parts.empty()) return to_string(coeff);
        // Adjacent probabilities multiply by juxtaposition: P(A|I)P(B|A,I).
        bool all_prob = coeff == 1;
        for (const std::string& s : parts) {
            all_prob = all_prob && s.rfind("P(", 0) == 0;
        }
        std::string out;
        if (all_prob) {
            for (const std::string& s : parts) out += s;
            return out;
        }
        if (coeff != 1) out = to_string(coeff);
        for (const std::string& s : parts) {
            if (!out.empty()) out += " * ";
            out += s;
        }
        return out;
    }

    std::string product(const std::vector<Expr>& factors) const {
        Rational coeff = 1;
        if (!factors.empty() && factors.front().kind() == ExprKind::Const) {
            coeff = factors.front().const_value();
        }
        const bool negative = coeff < 0;
        std::string mag = magnitude(factors, negative ? Rational(-coeff) : coeff);
        return negative ? "-" + mag : mag;
    }

    std::string sum(const std::vector<Expr>& terms) const {
        std::string out;
        bool first = true;
        for (const Expr& t : terms) {
            bool negative = false;
            std::string mag;
            if (t.kind() == ExprKind::Const && t.const_value() < 0) {
                negative = true;
                mag = to_string(Rational(-t.const_value()));
            } else if (t.kind() == ExprKind::Mul) {
                const Rational c = t.children().front().kind() == ExprKind::Const
                                       ? t.children().front().const_value()
                                       : Rational(1);
                if (c < 0) {
                    negative = true;
                    mag = magnitude(t.children(), Rational(-c));
                } else {
                    mag = render(t);
                }
            } else {
                mag = render(t);
            }
            if (first) {
                out += negative ? "-" + mag : mag;
                first = false;
            } else {
                out += negative ? " - " : " + ";
                out += mag;
            }
        }
        return out;
    }
};

}  // namespace

std::string to_probability_form(const Expr& e) {
    if (!e.valid()) throw DomainError("empty expression");
    return ProbPrinter{}.render(e);
}

}  // namespace estim

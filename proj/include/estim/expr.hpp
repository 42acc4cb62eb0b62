#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "estim/prop.hpp"
#include "estim/rational.hpp"

namespace estim {

// Half-open byte range into the source text, plus the 1-based position of its
// first character. begin == end == 0 means "no location".
struct SourceSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    int line = 1;
    int column = 1;
};

class Expr;

// Conditioning information, one item per fact.
//
//   Assign      x=2    the unknown's value is this constant
//   Param       x      the unknown's value is known but left unspecified
//   Given       A      the proposition is asserted true
//   KnownTruth  A=?    the proposition's truth value is known but unspecified
struct CtxAssign {
    std::string name;
    Rational value;
};
struct CtxParam {
    std::string name;
};
struct CtxGiven {
    Prop prop;
};
struct CtxKnownTruth {
    Prop prop;
};
using CtxItem = std::variant<CtxAssign, CtxParam, CtxGiven, CtxKnownTruth>;

int compare(const CtxItem& a, const CtxItem& b);

// The conditioning state of an estimation: an ordered item list plus the
// background symbol. Construction sorts items, folds Given(x=c) into Assign,
// drops duplicates, and rejects conflicting bindings of one unknown.
class Context {
public:
    Context() : Context("I", {}) {}
    explicit Context(std::string background, std::vector<CtxItem> items = {});

    const std::string& background() const { return background_; }
    const std::vector<CtxItem>& items() const { return items_; }

    std::optional<Rational> assignment(const std::string& unknown) const;
    bool has_param(const std::string& unknown) const;
    bool has_given(const Prop& p) const;
    bool has_known_truth(const Prop& p) const;

    Context with_item(CtxItem item) const;

    // Unknowns referenced by Param items and atoms referenced by KnownTruth
    // items: the facts whose content is supplied by the enclosing scope.
    std::set<std::string> param_unknowns() const;
    std::set<std::string> known_truth_atoms() const;

private:
    std::string background_;
    std::vector<CtxItem> items_;
};

int compare(const Context& a, const Context& b);
bool operator==(const Context& a, const Context& b);
bool operator!=(const Context& a, const Context& b);

enum class ExprKind { Const, Unknown, Add, Mul, KDelta, PropEnc, Estim };

struct ExprNode;

// Immutable expression handle. The named constructors canonicalize, so any
// Expr built through them is in canonical form: flat sorted n-ary sums and
// products, constants folded, identity elements dropped.
class Expr {
public:
    Expr() = default;

    static Expr constant(Rational value);
    static Expr constant(long value);
    static Expr unknown(std::string name);
    static Expr add(std::vector<Expr> terms);
    static Expr mul(std::vector<Expr> factors);
    static Expr sub(Expr lhs, Expr rhs);
    static Expr neg(Expr e);
    static Expr kdelta(Expr a, Expr b);
    static Expr prop_enc(Prop p);
    static Expr estim(Expr body, Context ctx);

    bool valid() const { return node_ != nullptr; }
    ExprKind kind() const;

    const Rational& const_value() const;       // Const
    const std::string& unknown_name() const;   // Unknown
    // Add/Mul: operands. KDelta: {first, second}. Estim: {body}.
    const std::vector<Expr>& children() const;
    const Prop& prop() const;                  // PropEnc
    const Context& context() const;            // Estim

    const Expr& estim_body() const { return children().front(); }

    // Source location, when the expression came from the parser. Ignored by
    // compare and equality.
    const SourceSpan& span() const;
    Expr with_span(SourceSpan span) const;

    // Node identity of the shared representation, for caching.
    const void* identity() const { return node_.get(); }

private:
    explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}
    std::shared_ptr<const ExprNode> node_;
    friend Expr make_expr(ExprNode node);
};

// Total order used for canonical child sorting:
// Const < Unknown < PropEnc < KDelta < Estim < Mul < Add.
int compare(const Expr& a, const Expr& b);
bool operator==(const Expr& a, const Expr& b);
bool operator!=(const Expr& a, const Expr& b);
bool operator<(const Expr& a, const Expr& b);

// Rebuilds bottom-up through the named constructors. Identity on anything
// they produced; exposed so idempotence is testable.
Expr canonicalize(const Expr& e);

// Integer encoding of a proposition:
//   n(not A)   = 1 - n(A)
//   n(A and B) = n(A) * n(B)
//   n(A or B)  = n(A) + n(B) - n(A) * n(B)
// Atoms and equality tests stay as PropEnc leaves (the delta form of x=c is
// introduced by rewriting, not here).
Expr encode_prop(const Prop& p);

// Fully evaluates an Estim-free expression under total bindings.
// Throws UnboundSymbol for a missing binding and DomainError on an Estim node.
Rational eval_ground(const Expr& e,
                     const std::map<std::string, Rational>& unknowns,
                     const std::map<std::string, bool>& atoms);

struct FreeRefs {
    std::set<std::string> unknowns;
    std::set<std::string> atoms;
    bool empty() const { return unknowns.empty() && atoms.empty(); }
};

// References whose values come from the enclosing scope. An Estim node binds
// everything in its body and exposes only its context's Param unknowns and
// KnownTruth atoms.
FreeRefs free_refs(const Expr& e);
std::set<std::string> free_unknowns(const Expr& e);

// True when the expression contains no Estim node and no free reference, so
// eval_ground needs no bindings. In canonical form this collapses to Const.
bool is_ground(const Expr& e);

// Replaces free occurrences of the given unknowns by constants. Estim bodies
// are left alone (their unknowns are bound); in Estim contexts a substituted
// Param becomes the corresponding Assign, and a KnownTruth whose proposition
// folds to a truth constant is dropped as vacuous.
Expr substitute_unknowns(const Expr& e, const std::map<std::string, Rational>& values);

// Fixes the truth value of one proposition: free PropEnc(p) occurrences
// become 0/1, and in Estim contexts KnownTruth(p) becomes Given(p) (or
// Given(not p)). Estim bodies are left alone.
Expr substitute_prop_truth(const Expr& e, const Prop& p, bool value);

}  // namespace estim

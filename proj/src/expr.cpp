#include "estim/expr.hpp"

#include <algorithm>

#include "estim/errors.hpp"

namespace estim {

// ---------------------------------------------------------------------------
// Context

namespace {

int item_rank(const CtxItem& it) { return static_cast<int>(it.index()); }

}  // namespace

int compare(const CtxItem& a, const CtxItem& b) {
    if (item_rank(a) != item_rank(b)) return item_rank(a) < item_rank(b) ? -1 : 1;
    if (const auto* aa = std::get_if<CtxAssign>(&a)) {
        const auto& bb = std::get<CtxAssign>(b);
        if (int c = aa->name.compare(bb.name)) return c;
        if (aa->value == bb.value) return 0;
        return aa->value < bb.value ? -1 : 1;
    }
    if (const auto* ap = std::get_if<CtxParam>(&a)) {
        return ap->name.compare(std::get<CtxParam>(b).name);
    }
    if (const auto* ag = std::get_if<CtxGiven>(&a)) {
        return compare(ag->prop, std::get<CtxGiven>(b).prop);
    }
    return compare(std::get<CtxKnownTruth>(a).prop, std::get<CtxKnownTruth>(b).prop);
}

Context::Context(std::string background, std::vector<CtxItem> items)
    : background_(std::move(background)) {
    if (background_.empty()) throw DomainError("empty context background symbol");

    std::map<std::string, Rational> assigns;
    std::set<std::string> params;
    std::set<Prop> givens;
    std::set<Prop> knowns;

    for (auto& raw : items) {
        // A given equality pins the unknown's value, which is an assignment.
        if (auto* g = std::get_if<CtxGiven>(&raw)) {
            if (g->prop.kind() == PropKind::Equals) {
                raw = CtxAssign{g->prop.name(), g->prop.value()};
            }
        }
        if (const auto* a = std::get_if<CtxAssign>(&raw)) {
            auto [pos, fresh] = assigns.emplace(a->name, a->value);
            if (!fresh && pos->second != a->value) {
                throw DomainError("conflicting assignments for unknown '" + a->name +
                                  "' in context");
            }
        } else if (const auto* p = std::get_if<CtxParam>(&raw)) {
            params.insert(p->name);
        } else if (const auto* g = std::get_if<CtxGiven>(&raw)) {
            givens.insert(g->prop);
        } else {
            knowns.insert(std::get<CtxKnownTruth>(raw).prop);
        }
    }
    for (const auto& name : params) {
        if (assigns.count(name)) {
            throw DomainError("unknown '" + name +
                              "' is both assigned and a bare parameter in context");
        }
    }

    for (const auto& [name, value] : assigns) items_.push_back(CtxAssign{name, value});
    for (const auto& name : params) items_.push_back(CtxParam{name});
    for (const auto& p : givens) items_.push_back(CtxGiven{p});
    for (const auto& p : knowns) {
        // An asserted proposition already has a known truth value.
        if (!givens.count(p)) items_.push_back(CtxKnownTruth{p});
    }
}

std::optional<Rational> Context::assignment(const std::string& unknown) const {
    for (const auto& it : items_) {
        if (const auto* a = std::get_if<CtxAssign>(&it); a && a->name == unknown) {
            return a->value;
        }
    }
    return std::nullopt;
}

bool Context::has_param(const std::string& unknown) const {
    for (const auto& it : items_) {
        if (const auto* p = std::get_if<CtxParam>(&it); p && p->name == unknown) return true;
    }
    return false;
}

bool Context::has_given(const Prop& prop) const {
    for (const auto& it : items_) {
        if (const auto* g = std::get_if<CtxGiven>(&it); g && g->prop == prop) return true;
    }
    return false;
}

bool Context::has_known_truth(const Prop& prop) const {
    for (const auto& it : items_) {
        if (const auto* k = std::get_if<CtxKnownTruth>(&it); k && k->prop == prop) return true;
    }
    return false;
}

Context Context::with_item(CtxItem item) const {
    std::vector<CtxItem> all = items_;
    all.push_back(std::move(item));
    return Context(background_, std::move(all));
}

std::set<std::string> Context::param_unknowns() const {
    std::set<std::string> out;
    for (const auto& it : items_) {
        if (const auto* p = std::get_if<CtxParam>(&it)) out.insert(p->name);
    }
    return out;
}

std::set<std::string> Context::known_truth_atoms() const {
    std::set<std::string> out;
    for (const auto& it : items_) {
        if (const auto* k = std::get_if<CtxKnownTruth>(&it)) k->prop.collect_atoms(out);
    }
    return out;
}

int compare(const Context& a, const Context& b) {
    if (int c = a.background().compare(b.background())) return c;
    const auto& xs = a.items();
    const auto& ys = b.items();
    for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
        if (int c = compare(xs[i], ys[i])) return c;
    }
    if (xs.size() != ys.size()) return xs.size() < ys.size() ? -1 : 1;
    return 0;
}

bool operator==(const Context& a, const Context& b) { return compare(a, b) == 0; }
bool operator!=(const Context& a, const Context& b) { return compare(a, b) != 0; }

// ---------------------------------------------------------------------------
// Expr representation

struct ExprNode {
    ExprKind kind = ExprKind::Const;
    Rational value{};         // Const
    std::string name{};       // Unknown
    std::vector<Expr> kids{};  // Add, Mul, KDelta, Estim
    Prop prop{};              // PropEnc
    Context ctx{};            // Estim
    SourceSpan span{};
};

Expr make_expr(ExprNode node) {
    struct Access : Expr {
        explicit Access(std::shared_ptr<const ExprNode> n) : Expr(std::move(n)) {}
    };
    return Access(std::make_shared<const ExprNode>(std::move(node)));
}

ExprKind Expr::kind() const { return node_->kind; }
const Rational& Expr::const_value() const { return node_->value; }
const std::string& Expr::unknown_name() const { return node_->name; }
const std::vector<Expr>& Expr::children() const { return node_->kids; }
const Prop& Expr::prop() const { return node_->prop; }
const Context& Expr::context() const { return node_->ctx; }
const SourceSpan& Expr::span() const { return node_->span; }

Expr Expr::with_span(SourceSpan span) const {
    ExprNode copy = *node_;
    copy.span = span;
    return make_expr(std::move(copy));
}

// ---------------------------------------------------------------------------
// Canonicalizing constructors

Expr Expr::constant(Rational value) {
    ExprNode n{ExprKind::Const};
    n.value = std::move(value);
    return make_expr(std::move(n));
}

Expr Expr::constant(long value) { return constant(Rational(value)); }

Expr Expr::unknown(std::string name) {
    if (name.empty()) throw DomainError("empty unknown name");
    ExprNode n{ExprKind::Unknown};
    n.name = std::move(name);
    return make_expr(std::move(n));
}

namespace {

void check_valid(const Expr& e) {
    if (!e.valid()) throw DomainError("empty expression operand");
}

// Splits a canonical term into (coefficient, core): 3*x*y gives (3, x*y).
// The core is never a constant; a pure constant reports no core.
std::pair<Rational, std::optional<Expr>> split_coefficient(const Expr& t) {
    if (t.kind() == ExprKind::Const) return {t.const_value(), std::nullopt};
    if (t.kind() == ExprKind::Mul && t.children().front().kind() == ExprKind::Const) {
        const auto& kids = t.children();
        std::vector<Expr> rest(kids.begin() + 1, kids.end());
        return {kids.front().const_value(), Expr::mul(std::move(rest))};
    }
    return {Rational(1), t};
}

}  // namespace

Expr Expr::add(std::vector<Expr> terms) {
    Rational const_sum = 0;
    std::map<Expr, Rational> coefficients;
    std::vector<Expr> order;

    const auto absorb = [&](const Expr& t) {
        auto [coeff, core] = split_coefficient(t);
        if (!core) {
            const_sum += coeff;
            return;
        }
        auto [pos, fresh] = coefficients.emplace(*core, coeff);
        if (fresh) {
            order.push_back(*core);
        } else {
            pos->second += coeff;
        }
    };

    for (const Expr& t : terms) {
        check_valid(t);
        if (t.kind() == ExprKind::Add) {
            for (const Expr& u : t.children()) absorb(u);
        } else {
            absorb(t);
        }
    }

    std::vector<Expr> out;
    if (const_sum != 0) out.push_back(constant(const_sum));
    for (const Expr& core : order) {
        const Rational& k = coefficients.at(core);
        if (k == 0) continue;
        out.push_back(k == 1 ? core : mul({constant(k), core}));
    }
    if (out.empty()) return constant(0);
    std::stable_sort(out.begin(), out.end());
    if (out.size() == 1) return out.front();
    ExprNode n{ExprKind::Add};
    n.kids = std::move(out);
    return make_expr(std::move(n));
}

Expr Expr::mul(std::vector<Expr> factors) {
    Rational const_product = 1;
    std::vector<Expr> flat;

    const auto absorb = [&](const Expr& f) {
        if (f.kind() == ExprKind::Const) {
            const_product *= f.const_value();
        } else {
            flat.push_back(f);
        }
    };
    for (const Expr& f : factors) {
        check_valid(f);
        if (f.kind() == ExprKind::Mul) {
            for (const Expr& g : f.children()) absorb(g);
        } else {
            absorb(f);
        }
    }

    if (const_product == 0) return constant(0);
    std::stable_sort(flat.begin(), flat.end());
    if (flat.empty()) return constant(const_product);
    if (const_product != 1) flat.insert(flat.begin(), constant(const_product));
    if (flat.size() == 1) return flat.front();
    ExprNode n{ExprKind::Mul};
    n.kids = std::move(flat);
    return make_expr(std::move(n));
}

Expr Expr::sub(Expr lhs, Expr rhs) { return add({std::move(lhs), neg(std::move(rhs))}); }

Expr Expr::neg(Expr e) { return mul({constant(-1), std::move(e)}); }

Expr Expr::kdelta(Expr a, Expr b) {
    check_valid(a);
    check_valid(b);
    if (a == b) return constant(1);
    if (a.kind() == ExprKind::Const && b.kind() == ExprKind::Const) return constant(0);
    ExprNode n{ExprKind::KDelta};
    n.kids = {std::move(a), std::move(b)};
    return make_expr(std::move(n));
}

Expr Expr::prop_enc(Prop p) {
    if (!p.valid()) throw DomainError("empty proposition");
    ExprNode n{ExprKind::PropEnc};
    n.prop = std::move(p);
    return make_expr(std::move(n));
}

Expr Expr::estim(Expr body, Context ctx) {
    check_valid(body);
    ExprNode n{ExprKind::Estim};
    n.kids = {std::move(body)};
    n.ctx = std::move(ctx);
    return make_expr(std::move(n));
}

// ---------------------------------------------------------------------------
// Ordering

namespace {

int kind_rank(ExprKind k) {
    switch (k) {
        case ExprKind::Const: return 0;
        case ExprKind::Unknown: return 1;
        case ExprKind::PropEnc: return 2;
        case ExprKind::KDelta: return 3;
        case ExprKind::Estim: return 4;
        case ExprKind::Mul: return 5;
        case ExprKind::Add: return 6;
    }
    return 7;
}

int compare_children(const Expr& a, const Expr& b) {
    const auto& xs = a.children();
    const auto& ys = b.children();
    for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
        if (int c = compare(xs[i], ys[i])) return c;
    }
    if (xs.size() != ys.size()) return xs.size() < ys.size() ? -1 : 1;
    return 0;
}

}  // namespace

int compare(const Expr& a, const Expr& b) {
    if (!a.valid() || !b.valid()) return int(b.valid()) - int(a.valid());
    if (a.identity() == b.identity()) return 0;
    const int ra = kind_rank(a.kind());
    const int rb = kind_rank(b.kind());
    if (ra != rb) return ra < rb ? -1 : 1;
    switch (a.kind()) {
        case ExprKind::Const: {
            if (a.const_value() == b.const_value()) return 0;
            return a.const_value() < b.const_value() ? -1 : 1;
        }
        case ExprKind::Unknown:
            return a.unknown_name().compare(b.unknown_name());
        case ExprKind::PropEnc:
            return compare(a.prop(), b.prop());
        case ExprKind::KDelta:
        case ExprKind::Mul:
        case ExprKind::Add:
            return compare_children(a, b);
        case ExprKind::Estim: {
            if (int c = compare(a.estim_body(), b.estim_body())) return c;
            return compare(a.context(), b.context());
        }
    }
    throw DomainError("corrupt expression node");
}

bool operator==(const Expr& a, const Expr& b) { return compare(a, b) == 0; }
bool operator!=(const Expr& a, const Expr& b) { return compare(a, b) != 0; }
bool operator<(const Expr& a, const Expr& b) { return compare(a, b) < 0; }

Expr canonicalize(const Expr& e) {
    check_valid(e);
    switch (e.kind()) {
        case ExprKind::Const:
        case ExprKind::Unknown:
        case ExprKind::PropEnc:
            return e;
        case ExprKind::Add:
        case ExprKind::Mul: {
            std::vector<Expr> kids;
            kids.reserve(e.children().size());
            for (const Expr& c : e.children()) kids.push_back(canonicalize(c));
            return e.kind() == ExprKind::Add ? Expr::add(std::move(kids))
                                            : Expr::mul(std::move(kids));
        }
        case ExprKind::KDelta:
            return Expr::kdelta(canonicalize(e.children()[0]), canonicalize(e.children()[1]));
        case ExprKind::Estim:
            return Expr::estim(canonicalize(e.estim_body()), e.context());
    }
    throw DomainError("corrupt expression node");
}

// ---------------------------------------------------------------------------
// Boolean encoding

Expr encode_prop(const Prop& p) {
    if (!p.valid()) throw DomainError("empty proposition");
    switch (p.kind()) {
        case PropKind::Atom:
        case PropKind::Equals:
            return Expr::prop_enc(p);
        case PropKind::Not:
            return Expr::sub(Expr::constant(1), encode_prop(p.lhs()));
        case PropKind::And:
            return Expr::mul({encode_prop(p.lhs()), encode_prop(p.rhs())});
        case PropKind::Or: {
            Expr l = encode_prop(p.lhs());
            Expr r = encode_prop(p.rhs());
            return Expr::add({l, r, Expr::neg(Expr::mul({l, r}))});
        }
    }
    throw DomainError("corrupt proposition node");
}

// ---------------------------------------------------------------------------
// Ground evaluation

Rational eval_ground(const Expr& e,
                     const std::map<std::string, Rational>& unknowns,
                     const std::map<std::string, bool>& atoms) {
    check_valid(e);
    switch (e.kind()) {
        case ExprKind::Const:
            return e.const_value();
        case ExprKind::Unknown: {
            auto it = unknowns.find(e.unknown_name());
            if (it == unknowns.end()) throw UnboundSymbol(e.unknown_name());
            return it->second;
        }
        case ExprKind::Add: {
            Rational sum = 0;
            for (const Expr& c : e.children()) sum += eval_ground(c, unknowns, atoms);
            return sum;
        }
        case ExprKind::Mul: {
            Rational product = 1;
            for (const Expr& c : e.children()) product *= eval_ground(c, unknowns, atoms);
            return product;
        }
        case ExprKind::KDelta: {
            Rational a = eval_ground(e.children()[0], unknowns, atoms);
            Rational b = eval_ground(e.children()[1], unknowns, atoms);
            return a == b ? 1 : 0;
        }
        case ExprKind::PropEnc: {
            bool t = e.prop().truth(
                [&](const std::string& name) -> bool {
                    auto it = atoms.find(name);
                    if (it == atoms.end()) throw UnboundSymbol(name);
                    return it->second;
                },
                [&](const std::string& name) -> Rational {
                    auto it = unknowns.find(name);
                    if (it == unknowns.end()) throw UnboundSymbol(name);
                    return it->second;
                });
            return t ? 1 : 0;
        }
        case ExprKind::Estim:
            throw DomainError("eval_ground reached an estimation node");
    }
    throw DomainError("corrupt expression node");
}

// ---------------------------------------------------------------------------
// Free references

namespace {

void collect_free(const Expr& e, FreeRefs& out) {
    switch (e.kind()) {
        case ExprKind::Const:
            return;
        case ExprKind::Unknown:
            out.unknowns.insert(e.unknown_name());
            return;
        case ExprKind::PropEnc:
            e.prop().collect_atoms(out.atoms);
            e.prop().collect_unknowns(out.unknowns);
            return;
        case ExprKind::Add:
        case ExprKind::Mul:
        case ExprKind::KDelta:
            for (const Expr& c : e.children()) collect_free(c, out);
            return;
        case ExprKind::Estim: {
            // The body's references are bound by the estimation; only context
            // items that refer to the enclosing scope stay free.
            for (const CtxItem& it : e.context().items()) {
                if (const auto* p = std::get_if<CtxParam>(&it)) {
                    out.unknowns.insert(p->name);
                } else if (const auto* k = std::get_if<CtxKnownTruth>(&it)) {
                    k->prop.collect_atoms(out.atoms);
                    k->prop.collect_unknowns(out.unknowns);
                }
            }
            return;
        }
    }
    throw DomainError("corrupt expression node");
}

}  // namespace

FreeRefs free_refs(const Expr& e) {
    check_valid(e);
    FreeRefs out;
    collect_free(e, out);
    return out;
}

std::set<std::string> free_unknowns(const Expr& e) { return free_refs(e).unknowns; }

bool is_ground(const Expr& e) {
    check_valid(e);
    switch (e.kind()) {
        case ExprKind::Const:
            return true;
        case ExprKind::Unknown:
        case ExprKind::PropEnc:
        case ExprKind::Estim:
            return false;
        case ExprKind::Add:
        case ExprKind::Mul:
        case ExprKind::KDelta:
            for (const Expr& c : e.children()) {
                if (!is_ground(c)) return false;
            }
            return true;
    }
    throw DomainError("corrupt expression node");
}

// ---------------------------------------------------------------------------
// Substitution

namespace {

// Residual proposition after fixing some unknowns, or a decided truth value.
struct PropResidue {
    std::optional<Prop> prop;
    bool truth = false;
};

PropResidue subst_prop(const Prop& p, const std::map<std::string, Rational>& values) {
    switch (p.kind()) {
        case PropKind::Atom:
            return {p, false};
        case PropKind::Equals: {
            auto it = values.find(p.name());
            if (it == values.end()) return {p, false};
            return {std::nullopt, it->second == p.value()};
        }
        case PropKind::Not: {
            PropResidue r = subst_prop(p.lhs(), values);
            if (!r.prop) return {std::nullopt, !r.truth};
            return {Prop::negation(*r.prop), false};
        }
        case PropKind::And: {
            PropResidue l = subst_prop(p.lhs(), values);
            PropResidue r = subst_prop(p.rhs(), values);
            if (l.prop && r.prop) return {Prop::conjunction(*l.prop, *r.prop), false};
            if (!l.prop && !r.prop) return {std::nullopt, l.truth && r.truth};
            if (!l.prop) return l.truth ? r : PropResidue{std::nullopt, false};
            return r.truth ? l : PropResidue{std::nullopt, false};
        }
        case PropKind::Or: {
            PropResidue l = subst_prop(p.lhs(), values);
            PropResidue r = subst_prop(p.rhs(), values);
            if (l.prop && r.prop) return {Prop::disjunction(*l.prop, *r.prop), false};
            if (!l.prop && !r.prop) return {std::nullopt, l.truth || r.truth};
            if (!l.prop) return l.truth ? PropResidue{std::nullopt, true} : r;
            return r.truth ? PropResidue{std::nullopt, true} : l;
        }
    }
    throw DomainError("corrupt proposition node");
}

}  // namespace

Expr substitute_unknowns(const Expr& e, const std::map<std::string, Rational>& values) {
    check_valid(e);
    if (values.empty()) return e;
    switch (e.kind()) {
        case ExprKind::Const:
            return e;
        case ExprKind::Unknown: {
            auto it = values.find(e.unknown_name());
            return it == values.end() ? e : Expr::constant(it->second);
        }
        case ExprKind::Add:
        case ExprKind::Mul:
        case ExprKind::KDelta: {
            std::vector<Expr> kids;
            kids.reserve(e.children().size());
            bool changed = false;
            for (const Expr& c : e.children()) {
                kids.push_back(substitute_unknowns(c, values));
                changed = changed || kids.back().identity() != c.identity();
            }
            if (!changed) return e;
            if (e.kind() == ExprKind::Add) return Expr::add(std::move(kids));
            if (e.kind() == ExprKind::Mul) return Expr::mul(std::move(kids));
            return Expr::kdelta(std::move(kids[0]), std::move(kids[1]));
        }
        case ExprKind::PropEnc: {
            PropResidue r = subst_prop(e.prop(), values);
            if (!r.prop) return Expr::constant(r.truth ? 1 : 0);
            if (*r.prop == e.prop()) return e;
            return Expr::prop_enc(*r.prop);
        }
        case ExprKind::Estim: {
            // Body references are bound here; only context items that look
            // outward can pick up the substituted values.
            bool changed = false;
            std::vector<CtxItem> items;
            for (const CtxItem& it : e.context().items()) {
                if (const auto* p = std::get_if<CtxParam>(&it)) {
                    auto found = values.find(p->name);
                    if (found != values.end()) {
                        items.push_back(CtxAssign{p->name, found->second});
                        changed = true;
                        continue;
                    }
                } else if (const auto* k = std::get_if<CtxKnownTruth>(&it)) {
                    PropResidue r = subst_prop(k->prop, values);
                    if (!r.prop) {
                        // The truth value became a constant, so "its truth is
                        // known" carries no information.
                        changed = true;
                        continue;
                    }
                    if (*r.prop != k->prop) {
                        items.push_back(CtxKnownTruth{*r.prop});
                        changed = true;
                        continue;
                    }
                }
                items.push_back(it);
            }
            if (!changed) return e;
            return Expr::estim(e.estim_body(), Context(e.context().background(), std::move(items)));
        }
    }
    throw DomainError("corrupt expression node");
}

Expr substitute_prop_truth(const Expr& e, const Prop& p, bool value) {
    check_valid(e);
    switch (e.kind()) {
        case ExprKind::Const:
        case ExprKind::Unknown:
            return e;
        case ExprKind::PropEnc:
            if (e.prop() == p) return Expr::constant(value ? 1 : 0);
            return e;
        case ExprKind::Add:
        case ExprKind::Mul:
        case ExprKind::KDelta: {
            std::vector<Expr> kids;
            kids.reserve(e.children().size());
            bool changed = false;
            for (const Expr& c : e.children()) {
                kids.push_back(substitute_prop_truth(c, p, value));
                changed = changed || kids.back().identity() != c.identity();
            }
            if (!changed) return e;
            if (e.kind() == ExprKind::Add) return Expr::add(std::move(kids));
            if (e.kind() == ExprKind::Mul) return Expr::mul(std::move(kids));
            return Expr::kdelta(std::move(kids[0]), std::move(kids[1]));
        }
        case ExprKind::Estim: {
            bool changed = false;
            std::vector<CtxItem> items;
            for (const CtxItem& it : e.context().items()) {
                if (const auto* k = std::get_if<CtxKnownTruth>(&it); k && k->prop == p) {
                    items.push_back(CtxGiven{value ? p : Prop::negation(p)});
                    changed = true;
                } else {
                    items.push_back(it);
                }
            }
            if (!changed) return e;
            return Expr::estim(e.estim_body(), Context(e.context().background(), std::move(items)));
        }
    }
    throw DomainError("corrupt expression node");
}

}  // namespace estim

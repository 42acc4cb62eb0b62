#include "estim/prop.hpp"

#include "estim/errors.hpp"

namespace estim {

struct PropNode {
    PropKind kind;
    std::string name;   // Atom, Equals
    Rational value;     // Equals
    Prop lhs, rhs;      // Not uses lhs only
};

namespace {

Prop make(PropNode node) {
    struct Access : Prop {
        explicit Access(std::shared_ptr<const PropNode> n) : Prop(std::move(n)) {}
    };
    return Access(std::make_shared<const PropNode>(std::move(node)));
}

}  // namespace

Prop Prop::atom(std::string name) {
    if (name.empty()) throw DomainError("empty atom name");
    return make({PropKind::Atom, std::move(name), {}, {}, {}});
}

Prop Prop::equals(std::string unknown, Rational value) {
    if (unknown.empty()) throw DomainError("empty unknown name");
    return make({PropKind::Equals, std::move(unknown), std::move(value), {}, {}});
}

Prop Prop::negation(Prop p) {
    if (!p.valid()) throw DomainError("negation of empty proposition");
    return make({PropKind::Not, {}, {}, std::move(p), {}});
}

Prop Prop::conjunction(Prop lhs, Prop rhs) {
    if (!lhs.valid() || !rhs.valid()) throw DomainError("conjunction of empty proposition");
    return make({PropKind::And, {}, {}, std::move(lhs), std::move(rhs)});
}

Prop Prop::disjunction(Prop lhs, Prop rhs) {
    if (!lhs.valid() || !rhs.valid()) throw DomainError("disjunction of empty proposition");
    return make({PropKind::Or, {}, {}, std::move(lhs), std::move(rhs)});
}

PropKind Prop::kind() const { return node_->kind; }
const std::string& Prop::name() const { return node_->name; }
const Rational& Prop::value() const { return node_->value; }
const Prop& Prop::lhs() const { return node_->lhs; }
const Prop& Prop::rhs() const { return node_->rhs; }

void Prop::collect_atoms(std::set<std::string>& out) const {
    switch (kind()) {
        case PropKind::Atom: out.insert(name()); break;
        case PropKind::Equals: break;
        case PropKind::Not: lhs().collect_atoms(out); break;
        case PropKind::And:
        case PropKind::Or:
            lhs().collect_atoms(out);
            rhs().collect_atoms(out);
            break;
    }
}

void Prop::collect_unknowns(std::set<std::string>& out) const {
    switch (kind()) {
        case PropKind::Atom: break;
        case PropKind::Equals: out.insert(name()); break;
        case PropKind::Not: lhs().collect_unknowns(out); break;
        case PropKind::And:
        case PropKind::Or:
            lhs().collect_unknowns(out);
            rhs().collect_unknowns(out);
            break;
    }
}

bool Prop::truth(const std::function<bool(const std::string&)>& atom_truth,
                 const std::function<Rational(const std::string&)>& unknown_value) const {
    switch (kind()) {
        case PropKind::Atom: return atom_truth(name());
        case PropKind::Equals: return unknown_value(name()) == value();
        case PropKind::Not: return !lhs().truth(atom_truth, unknown_value);
        case PropKind::And:
            return lhs().truth(atom_truth, unknown_value) && rhs().truth(atom_truth, unknown_value);
        case PropKind::Or:
            return lhs().truth(atom_truth, unknown_value) || rhs().truth(atom_truth, unknown_value);
    }
    throw DomainError("corrupt proposition node");
}

int compare(const Prop& a, const Prop& b) {
    if (!a.valid() || !b.valid()) return int(b.valid()) - int(a.valid());
    if (a.kind() != b.kind()) return int(a.kind()) < int(b.kind()) ? -1 : 1;
    switch (a.kind()) {
        case PropKind::Atom:
            return a.name().compare(b.name());
        case PropKind::Equals: {
            if (int c = a.name().compare(b.name())) return c;
            if (a.value() == b.value()) return 0;
            return a.value() < b.value() ? -1 : 1;
        }
        case PropKind::Not:
            return compare(a.lhs(), b.lhs());
        case PropKind::And:
        case PropKind::Or: {
            if (int c = compare(a.lhs(), b.lhs())) return c;
            return compare(a.rhs(), b.rhs());
        }
    }
    throw DomainError("corrupt proposition node");
}

bool operator==(const Prop& a, const Prop& b) { return compare(a, b) == 0; }
bool operator!=(const Prop& a, const Prop& b) { return compare(a, b) != 0; }
bool operator<(const Prop& a, const Prop& b) { return compare(a, b) < 0; }

}  // namespace estim

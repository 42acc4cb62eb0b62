#pragma once

#include <functional>
#include <memory>
#include <set>
#include <string>

#include "estim/rational.hpp"

namespace estim {

enum class PropKind { Atom, Equals, Not, And, Or };

struct PropNode;

// Immutable propositional formula over named atoms and unknown-equals-value
// tests. Copies share structure.
class Prop {
public:
    Prop() = default;

    static Prop atom(std::string name);
    static Prop equals(std::string unknown, Rational value);
    static Prop negation(Prop p);
    static Prop conjunction(Prop lhs, Prop rhs);
    static Prop disjunction(Prop lhs, Prop rhs);

    bool valid() const { return node_ != nullptr; }
    PropKind kind() const;

    // Atom: the atom name. Equals: the unknown name.
    const std::string& name() const;
    // Equals only.
    const Rational& value() const;
    // Not: the negated formula. And/Or: the left operand.
    const Prop& lhs() const;
    // And/Or only.
    const Prop& rhs() const;

    void collect_atoms(std::set<std::string>& out) const;
    void collect_unknowns(std::set<std::string>& out) const;

    // Truth value under the given lookups; lookups throw UnboundSymbol for
    // symbols they cannot resolve.
    bool truth(const std::function<bool(const std::string&)>& atom_truth,
               const std::function<Rational(const std::string&)>& unknown_value) const;

protected:
    explicit Prop(std::shared_ptr<const PropNode> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<const PropNode> node_;
};

// Total order: Atom < Equals < Not < And < Or, then structural.
int compare(const Prop& a, const Prop& b);
bool operator==(const Prop& a, const Prop& b);
bool operator!=(const Prop& a, const Prop& b);
bool operator<(const Prop& a, const Prop& b);

}  // namespace estim

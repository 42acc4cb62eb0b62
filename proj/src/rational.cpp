#include "estim/rational.hpp"

#include <cctype>
#include <sstream>

namespace estim {

namespace {

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

}  // namespace

Rational rational_from_string(std::string_view text) {
    std::string_view s = text;
    bool negative = false;
    if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
        negative = s[0] == '-';
        s.remove_prefix(1);
    }
    const auto bad = [&] {
        return DomainError("not a rational literal: '" + std::string(text) + "'");
    };

    Rational value;
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        std::string_view num = s.substr(0, slash);
        std::string_view den = s.substr(slash + 1);
        if (!all_digits(num) || !all_digits(den)) throw bad();
        Integer d{std::string(den)};
        if (d == 0) throw DomainError("zero denominator in '" + std::string(text) + "'");
        value = Rational(Integer{std::string(num)}, d);
    } else if (auto dot = s.find('.'); dot != std::string_view::npos) {
        std::string_view whole = s.substr(0, dot);
        std::string_view frac = s.substr(dot + 1);
        if (whole.empty() && frac.empty()) throw bad();
        if (!whole.empty() && !all_digits(whole)) throw bad();
        if (!frac.empty() && !all_digits(frac)) throw bad();
        Integer scaled = whole.empty() ? Integer{0} : Integer{std::string(whole)};
        Integer denom = 1;
        for (char c : frac) {
            scaled = scaled * 10 + (c - '0');
            denom *= 10;
        }
        value = Rational(scaled, denom);
    } else {
        if (!all_digits(s)) throw bad();
        value = Rational(Integer{std::string(s)});
    }
    return negative ? Rational(-value) : value;
}

std::string to_string(const Rational& r) {
    std::ostringstream out;
    out << r;
    return out.str();
}

double to_double(const Rational& r) {
    return r.convert_to<double>();
}

}  // namespace estim

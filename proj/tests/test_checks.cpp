#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "estim/checks.hpp"
#include "estim/errors.hpp"
#include "estim/oracle.hpp"
#include "estim/rewrite.hpp"

using namespace estim;

namespace {

const std::vector<std::string> kPropertyNames = {
    "known-evaluation",         "bounds",
    "linearity",                "tower-collapse",
    "negation-identity",        "sum-identity",
    "product-identity",         "rule-soundness",
    "factory-soundness",        "normalize-soundness",
    "trace-replay",             "probability-bounds",
    "expectation-decomposition", "derivation-soundness",
    "print-parse-round-trip",
};

const std::vector<std::string> kRuleNames = {
    "known_eval", "prop_encode", "delta_as_prop", "linear_sum", "scalar_out",
    "tower",      "const_out",   "two_valued",    "affine_out", "sum_fold",
};

}  // namespace

TEST_CASE("the full property suite passes on random models") {
    CheckConfig config;
    config.trials = 25;
    config.seed = 3;
    const CheckReport report = run_checks(config);
    CHECK(report.ok());
    REQUIRE(report.properties.size() == kPropertyNames.size());
    for (std::size_t i = 0; i < kPropertyNames.size(); ++i) {
        CAPTURE(kPropertyNames[i]);
        CHECK(report.properties[i].name == kPropertyNames[i]);
        CHECK(report.properties[i].ok());
        CHECK(report.properties[i].trials > 0);
        CHECK(report.properties[i].counterexamples.empty());
    }
    // find resolves names; unknown names come back empty.
    REQUIRE(report.find("rule-soundness") != nullptr);
    CHECK(report.find("rule-soundness")->name == "rule-soundness");
    CHECK(report.find("no-such-property") == nullptr);
}

TEST_CASE("the suite accepts a fixed model instead of random ones") {
    CheckConfig config;
    config.trials = 10;
    config.seed = 5;
    config.model = Model({Model::Variable{"x", {1, 2}}}, {"A", "B"},
                         std::vector<Rational>(8, Rational(1, 8)));
    const CheckReport report = run_checks(config);
    CHECK(report.ok());
    CHECK(report.properties.size() == kPropertyNames.size());
}

TEST_CASE("the same seed reproduces the identical report") {
    CheckConfig config;
    config.trials = 8;
    config.seed = 17;
    const CheckReport a = run_checks(config);
    const CheckReport b = run_checks(config);
    REQUIRE(a.properties.size() == b.properties.size());
    for (std::size_t i = 0; i < a.properties.size(); ++i) {
        CHECK(a.properties[i].name == b.properties[i].name);
        CHECK(a.properties[i].trials == b.properties[i].trials);
        CHECK(a.properties[i].passed == b.properties[i].passed);
        CHECK(a.properties[i].skipped == b.properties[i].skipped);
        CHECK(a.properties[i].failed == b.properties[i].failed);
    }
    CHECK(format_report(a) == format_report(b));
}

TEST_CASE("corrupting any rule is caught with a counterexample") {
    for (const std::string& name : kRuleNames) {
        CAPTURE(name);
        CheckConfig config;
        config.trials = 5;
        config.seed = 11;
        const CheckReport report = run_checks(config, make_tampered(all_rules(), name));
        CHECK_FALSE(report.ok());
        const PropertyResult* soundness = report.find("rule-soundness");
        REQUIRE(soundness != nullptr);
        CHECK(soundness->failed > 0);
        CHECK_FALSE(soundness->counterexamples.empty());
    }
    CHECK_THROWS_AS(make_tampered(all_rules(), "no_such_rule"), DomainError);
}

TEST_CASE("a tampered registry leaves the untouched rules intact") {
    const auto tampered = make_tampered(all_rules(), "prop_encode");
    CHECK(tampered.size() == all_rules().size());
    for (std::size_t i = 0; i < tampered.size(); ++i) {
        CHECK(tampered[i].name == all_rules()[i].name);
    }
}

TEST_CASE("report text: per-property lines and a verdict") {
    CheckConfig config;
    config.trials = 6;
    config.seed = 23;
    const CheckReport report = run_checks(config);
    const std::string text = format_report(report);
    for (const std::string& name : kPropertyNames) {
        CAPTURE(name);
        CHECK(text.find(name + ": ") != std::string::npos);
    }
    CHECK(text.find("ok  ") != std::string::npos);
    CHECK(text.rfind("all properties hold\n") == text.size() - 20);
    CHECK(text.find("FAIL") == std::string::npos);

    const CheckReport broken =
        run_checks(config, make_tampered(all_rules(), "linear_sum"));
    const std::string bad = format_report(broken);
    CHECK(bad.find("FAIL") != std::string::npos);
    CHECK(bad.find("PROPERTY FAILURES") != std::string::npos);
    CHECK(bad.find("all properties hold") == std::string::npos);
}

TEST_CASE("trial and skip accounting stays consistent") {
    CheckConfig config;
    config.trials = 12;
    config.seed = 29;
    const CheckReport report = run_checks(config);
    for (const PropertyResult& p : report.properties) {
        CAPTURE(p.name);
        CHECK(p.passed + p.failed + p.skipped == p.trials);
        CHECK(p.failed == 0);
    }
}

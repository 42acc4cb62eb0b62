// Command-line front end: normalize expression files, print the scripted
// derivations, evaluate expressions against model files, and run the
// property-check suite.
//
// Exit codes are stable: 0 success, 1 bad input (syntax, schema, symbols),
// 2 engine failure (fuel, a derivation step that breaks under the oracle),
// 3 conditioning on a zero-weight event, 4 property failure, 64 usage.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "estim/checks.hpp"
#include "estim/errors.hpp"
#include "estim/generator.hpp"
#include "estim/oracle.hpp"
#include "estim/parser.hpp"
#include "estim/printer.hpp"
#include "estim/rewrite.hpp"

namespace {

using namespace estim;

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kEngineError = 2;
constexpr int kConditioningError = 3;
constexpr int kPropertyFailure = 4;
constexpr int kUsageError = 64;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct OutputOptions {
    std::string format = "text";
    bool trace = false;
    bool prob = false;
    bool json() const { return format == "json"; }
};

nlohmann::json trace_json(const DerivationTrace& trace, bool prob) {
    nlohmann::json steps = nlohmann::json::array();
    int index = 1;
    for (const TraceStep& s : trace.steps) {
        steps.push_back({{"index", index++},
                         {"rule", s.rule.name},
                         {"law", s.rule.law},
                         {"path", format_path(s.path)},
                         {"before", print_expr(s.before)},
                         {"after", print_expr(s.after)}});
    }
    nlohmann::json out{{"initial", print_expr(trace.initial)},
                       {"final", print_expr(trace.final)},
                       {"steps", steps}};
    if (prob) out["final_probability"] = to_probability_form(trace.final);
    return out;
}

std::string render_final(const Expr& e, const OutputOptions& out) {
    return out.prob ? to_probability_form(e) : print_expr(e);
}

// Parse failures get the two-line caret diagnostic; everything else its
// message. Returns the exit code.
int report_error(const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    if (dynamic_cast<const ZeroWeightConditioning*>(&err)) return kConditioningError;
    if (dynamic_cast<const FuelExhausted*>(&err)) return kEngineError;
    return kInputError;
}

int cmd_normalize(const std::string& file, int fuel, const OutputOptions& out) {
    std::string text;
    Expr input = Expr::constant(0);
    try {
        text = slurp(file);
        input = parse_expr(text);
    } catch (const SyntaxError& err) {
        std::cerr << "error: " << format_syntax_error(err, text) << "\n";
        return kInputError;
    } catch (const Error& err) {
        return report_error(err);
    }
    try {
        RuleStrategy strategy;
        strategy.fuel = fuel;
        auto [normalized, trace] = normalize(input, strategy);
        if (out.json()) {
            nlohmann::json doc = trace_json(trace, out.prob);
            if (!out.trace) doc.erase("steps");
            std::cout << doc.dump(2) << "\n";
        } else {
            if (out.trace && !trace.steps.empty()) {
                std::cout << format_trace(trace, out.prob);
            }
            std::cout << render_final(normalized, out) << "\n";
        }
        return kOk;
    } catch (const Error& err) {
        return report_error(err);
    }
}

int cmd_derive(const std::string& name, const std::vector<std::string>& domain_args,
               const std::string& model_file, const OutputOptions& out) {
    try {
        std::optional<Model> model;
        if (!model_file.empty()) model = Model::from_file(model_file);

        const Context plain("I");
        const Prop a = Prop::atom("A");
        const Prop b = Prop::atom("B");

        std::vector<std::pair<std::string, DerivationTrace>> traces;
        if (name == "negation") {
            traces.emplace_back("", derive_negation(a, plain));
        } else if (name == "sum") {
            traces.emplace_back("", derive_sum(a, b, plain));
        } else if (name == "product") {
            traces.emplace_back("", derive_product(a, b, plain));
        } else if (name == "expectation") {
            if (domain_args.empty()) {
                std::cerr << "error: derive expectation requires --domain\n";
                return kUsageError;
            }
            std::vector<Rational> domain;
            for (const std::string& v : domain_args) {
                domain.push_back(rational_from_string(v));
            }
            if (model) {
                const auto idx = model->variable_index("x");
                if (!idx) throw ModelError("the model must declare variable x");
                std::vector<Rational> have = model->variables()[*idx].domain;
                std::vector<Rational> want = domain;
                std::sort(have.begin(), have.end());
                std::sort(want.begin(), want.end());
                if (have != want) {
                    throw ModelError("--domain must match the model's domain for x");
                }
            }
            ExpectationDerivation d = derive_expectation("x", domain, plain);
            traces.emplace_back("decomposition", std::move(d.decomposition));
            traces.emplace_back("normalization", std::move(d.normalization));
        } else {
            std::cerr << "error: unknown derivation '" << name
                      << "' (expected negation, sum, product, or expectation)\n";
            return kUsageError;
        }

        if (model) {
            OracleEvaluator ev(*model);
            for (const auto& [label, trace] : traces) {
                const Rational reference = ev.eval(trace.initial);
                int index = 1;
                for (const TraceStep& s : trace.steps) {
                    if (ev.eval(s.after) != reference) {
                        std::cerr << "error: step " << index << " of "
                                  << (label.empty() ? name : label)
                                  << " changes the value under the model\n";
                        return kEngineError;
                    }
                    ++index;
                }
            }
        }

        if (out.json()) {
            nlohmann::json doc;
            if (traces.size() == 1) {
                doc = trace_json(traces[0].second, out.prob);
            } else {
                for (const auto& [label, trace] : traces) {
                    doc[label] = trace_json(trace, out.prob);
                }
            }
            std::cout << doc.dump(2) << "\n";
        } else {
            for (const auto& [label, trace] : traces) {
                if (!label.empty()) std::cout << label << ":\n";
                std::cout << format_trace(trace, out.prob);
                std::cout << "final: " << render_final(trace.final, out) << "\n";
            }
        }
        return kOk;
    } catch (const Error& err) {
        return report_error(err);
    }
}

int cmd_eval(const std::string& expr_file, const std::string& model_file,
             const OutputOptions& out) {
    std::string text;
    try {
        text = slurp(expr_file);
        const Expr e = parse_expr(text);
        const Model model = Model::from_file(model_file);
        const Rational value = oracle_eval(e, model);
        if (out.json()) {
            nlohmann::json doc{{"value", to_string(value)}, {"approx", to_double(value)}};
            std::cout << doc.dump(2) << "\n";
        } else {
            std::cout << to_string(value);
            if (denominator(value) != 1) {
                std::ostringstream approx;
                approx << to_double(value);
                std::cout << " ~ " << approx.str();
            }
            std::cout << "\n";
        }
        return kOk;
    } catch (const SyntaxError& err) {
        std::cerr << "error: " << format_syntax_error(err, text) << "\n";
        return kInputError;
    } catch (const Error& err) {
        return report_error(err);
    }
}

int cmd_check(const std::string& model_file, int trials, std::uint64_t seed, int fuel,
              const OutputOptions& out) {
    try {
        CheckConfig config;
        config.trials = trials;
        config.seed = seed;
        config.fuel = fuel;
        if (!model_file.empty()) config.model = Model::from_file(model_file);
        const CheckReport report = run_checks(config);
        if (out.json()) {
            nlohmann::json props = nlohmann::json::array();
            for (const PropertyResult& p : report.properties) {
                props.push_back({{"name", p.name},
                                 {"trials", p.trials},
                                 {"passed", p.passed},
                                 {"failed", p.failed},
                                 {"skipped", p.skipped},
                                 {"counterexamples", p.counterexamples}});
            }
            std::cout << nlohmann::json{{"properties", props}, {"ok", report.ok()}}.dump(2)
                      << "\n";
        } else {
            std::cout << format_report(report);
        }
        return report.ok() ? kOk : kPropertyFailure;
    } catch (const Error& err) {
        return report_error(err);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Symbolic estimation calculus: normalize, derive, evaluate, check"};
    app.require_subcommand(1);

    OutputOptions out;
    int fuel = 10000;
    int trials = 100;
    std::uint64_t seed = 1;

    auto add_output_flags = [&](CLI::App* cmd) {
        cmd->add_option("--format", out.format, "Output format")
            ->check(CLI::IsMember({"text", "json"}));
        cmd->add_flag("--trace", out.trace, "Print every rewrite step");
        cmd->add_flag("--prob", out.prob, "Render estimates in probability notation");
    };

    std::string normalize_file;
    CLI::App* normalize_cmd =
        app.add_subcommand("normalize", "Rewrite an expression file to normal form");
    normalize_cmd->add_option("file", normalize_file, "Expression file")->required();
    normalize_cmd->add_option("--fuel", fuel, "Rewrite step budget");
    add_output_flags(normalize_cmd);

    std::string derive_name;
    std::vector<std::string> domain_args;
    std::string derive_model;
    CLI::App* derive_cmd =
        app.add_subcommand("derive", "Print a scripted derivation with its trace");
    derive_cmd->add_option("name", derive_name, "negation | sum | product | expectation")
        ->required();
    derive_cmd->add_option("--domain", domain_args, "Domain values for expectation")
        ->delimiter(',');
    derive_cmd->add_option("--model", derive_model,
                           "Check every step against this model file");
    add_output_flags(derive_cmd);

    std::string eval_expr_file;
    std::string eval_model_file;
    CLI::App* eval_cmd =
        app.add_subcommand("eval", "Evaluate an expression file against a model file");
    eval_cmd->add_option("exprfile", eval_expr_file, "Expression file")->required();
    eval_cmd->add_option("modelfile", eval_model_file, "Model file")->required();
    add_output_flags(eval_cmd);

    std::string check_model_file;
    CLI::App* check_cmd =
        app.add_subcommand("check", "Run the property-check suite");
    check_cmd->add_option("modelfile", check_model_file,
                          "Run model-driven properties against this model only");
    check_cmd->add_option("--trials", trials, "Trials per property");
    check_cmd->add_option("--seed", seed, "Random seed");
    check_cmd->add_option("--fuel", fuel, "Rewrite step budget");
    add_output_flags(check_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsageError;
    }

    if (fuel <= 0 || trials <= 0) {
        std::cerr << "usage error: --fuel and --trials must be positive\n";
        return kUsageError;
    }

    if (normalize_cmd->parsed()) return cmd_normalize(normalize_file, fuel, out);
    if (derive_cmd->parsed()) return cmd_derive(derive_name, domain_args, derive_model, out);
    if (eval_cmd->parsed()) return cmd_eval(eval_expr_file, eval_model_file, out);
    if (check_cmd->parsed()) return cmd_check(check_model_file, trials, seed, fuel, out);
    return kUsageError;
}

// interact: fit identity/log/logit binomial models to two-exposure cohort data
// and report additive and multiplicative interaction.
//
// Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "interact/bootstrap.hpp"
#include "interact/effects.hpp"
#include "interact/figure.hpp"
#include "interact/glm.hpp"
#include "interact/manifest.hpp"
#include "interact/report.hpp"
#include "interact/table.hpp"

namespace {

using nlohmann::json;
using namespace interact;

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Input {
    std::string bytes;
    ExposureTable table;
};

Input load_input(const std::string& path, const std::string& format) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot open input '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    std::string bytes = ss.str();

    CsvFormat fmt = CsvFormat::aggregated;
    if (format == "aggregated") {
        fmt = CsvFormat::aggregated;
    } else if (format == "individual") {
        fmt = CsvFormat::individual;
    } else {
        std::istringstream head(bytes);
        std::string first;
        while (std::getline(head, first) && first.find_first_not_of(" \t\r") == std::string::npos) {
        }
        fmt = detect_format(first);
    }
    std::istringstream in(bytes);
    ExposureTable table = read_table(in, fmt);
    return {std::move(bytes), std::move(table)};
}

void emit(const std::string& text, const std::string& output) {
    if (output.empty() || output == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(output, std::ios::binary);
    if (!f) throw UsageError("cannot write output '" + output + "'");
    f << text;
}

void emit_json(const json& j, const std::string& output) { emit(j.dump(2) + "\n", output); }

RunManifest make_manifest(const std::string& command, const std::string& input_bytes, json spec,
                          std::optional<std::uint64_t> seed = std::nullopt) {
    RunManifest m;
    m.command = command;
    if (!input_bytes.empty()) m.input_digest = sha256_hex(input_bytes);
    m.spec = std::move(spec);
    m.seed = seed;
    m.timestamp = run_timestamp();
    return m;
}

struct Common {
    std::string input;
    std::string format = "auto";
    std::string output;
    double level = 0.95;
    double scale = 100000.0;
    bool raw = false;

    double display_scale() const { return raw ? 1.0 : scale; }
};

void add_input_options(CLI::App* cmd, Common& c) {
    cmd->add_option("--input,-i", c.input, "Aggregated (x,z,events,total) or individual (x,z,y[,weight]) CSV")
        ->required();
    cmd->add_option("--format", c.format, "Input CSV format")
        ->check(CLI::IsMember({"auto", "aggregated", "individual"}));
    cmd->add_option("--output,-o", c.output, "Output file (default stdout)");
}

void add_level_scale(CLI::App* cmd, Common& c) {
    cmd->add_option("--level", c.level, "Confidence level")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--scale", c.scale, "Display multiplier for probability-scale values")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--raw", c.raw, "Report probabilities unscaled (same as --scale 1)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Additive and multiplicative interaction for two binary exposures"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    // generate
    auto* gen = app.add_subcommand("generate", "Write the synthetic asbestos/smoking cohort as CSV");
    GeneratorInput gin;
    std::vector<double> group_sizes{gin.group_sizes[0], gin.group_sizes[1]};
    std::vector<double> rates{gin.rates_per_100k.begin(), gin.rates_per_100k.end()};
    std::string gen_output;
    std::string gen_format = "aggregated";
    std::string gen_manifest;
    gen->add_option("--group-sizes", group_sizes, "Cohort sizes for z=0,z=1")->expected(2)->delimiter(',');
    gen->add_option("--rates", rates, "Outcome rates per 100000 indexed 2*z+x")->expected(4)->delimiter(',');
    gen->add_option("--prevalence", gin.smoking_prevalence, "Prevalence of the x exposure in both cohorts");
    gen->add_option("--output,-o", gen_output, "Output CSV (default stdout)");
    gen->add_option("--format", gen_format, "CSV layout")->check(CLI::IsMember({"aggregated", "individual"}));
    gen->add_option("--manifest", gen_manifest, "Manifest path (default <output>.manifest.json when --output is set)");

    // fit
    auto* fitc = app.add_subcommand("fit", "Fit one model and report coefficients");
    Common fit_common;
    std::string link = "identity", dist = "binomial", estimation = "mle_irls";
    bool robust = false;
    ModelSpec controls;
    add_input_options(fitc, fit_common);
    add_level_scale(fitc, fit_common);
    fitc->add_option("--link", link, "Link function")->check(CLI::IsMember({"identity", "log", "logit"}));
    fitc->add_option("--dist", dist, "Outcome distribution")->check(CLI::IsMember({"binomial", "bin", "poisson"}));
    fitc->add_option("--estimation", estimation, "Estimation method")
        ->check(CLI::IsMember({"mle_irls", "mle", "ols", "mls"}));
    fitc->add_flag("--robust", robust, "Base Wald inference on the sandwich covariance");
    fitc->add_option("--max-iterations", controls.max_iterations, "IRLS iteration limit");
    fitc->add_option("--tolerance", controls.tolerance, "Relative deviance-change tolerance");

    // effects
    auto* eff = app.add_subcommand("effects", "Interaction contrast, RERI and multiplicativity tests");
    Common eff_common;
    bool eff_robust = false, fallback = false, table_view = false;
    std::string reri_source = "log";
    double alpha = 0.05;
    add_input_options(eff, eff_common);
    add_level_scale(eff, eff_common);
    eff->add_flag("--robust", eff_robust, "Use the sandwich covariance for binomial inference");
    eff->add_flag("--fallback", fallback,
                  "On identity-link failure try Poisson-identity + robust, then ols + robust");
    eff->add_option("--reri-source", reri_source, "Fit that supplies the RERI")
        ->check(CLI::IsMember({"log", "logit"}));
    eff->add_option("--alpha", alpha, "Significance level for the verdict")->check(CLI::Range(0.0, 1.0));
    eff->add_flag("--table", table_view, "Print a fixed-width table instead of JSON");

    // bootstrap
    auto* boot = app.add_subcommand("bootstrap", "Percentile bootstrap interval for RERI or IC");
    Common boot_common;
    BootstrapConfig bcfg;
    std::string statistic = "reri";
    bool unstratified = false;
    std::string dump;
    add_input_options(boot, boot_common);
    boot->add_option("--statistic", statistic, "Statistic to resample")
        ->check(CLI::IsMember({"reri", "reri_log", "reri_logit", "ic"}));
    boot->add_option("--replicates", bcfg.replicates, "Number of bootstrap replicates");
    boot->add_option("--seed", bcfg.seed, "Random seed");
    boot->add_option("--level", bcfg.level, "Confidence level")->check(CLI::Range(0.0, 1.0));
    boot->add_option("--threads", bcfg.threads, "Worker threads (0 = all cores)");
    boot->add_flag("--unstratified", unstratified, "Resample the pooled cohort instead of within z");
    boot->add_option("--dump-replicates", dump, "Write replicate values as a one-column CSV");

    // plot
    auto* plot = app.add_subcommand("plot", "Figure data or SVG for the three model scales");
    Common plot_common;
    std::string which;
    std::string plot_format = "svg";
    plot->add_option("which", which, "additivity | log_risk | log_odds")->required();
    add_input_options(plot, plot_common);
    add_level_scale(plot, plot_common);
    plot->add_option("--plot-format", plot_format, "Figure output")->check(CLI::IsMember({"svg", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*gen) {
            gin.group_sizes = {group_sizes[0], group_sizes[1]};
            std::copy(rates.begin(), rates.end(), gin.rates_per_100k.begin());
            const ExposureTable table = generate_hammond_dataset(gin);
            std::ostringstream csv;
            if (gen_format == "aggregated") {
                write_aggregated_csv(csv, table);
            } else {
                const auto records = expand_to_records(table);
                write_individual_csv(csv, records);
            }
            emit(csv.str(), gen_output);
            if (!gen_output.empty() && gen_output != "-") {
                json spec{{"group_sizes", group_sizes},
                          {"rates_per_100k", rates},
                          {"prevalence", gin.smoking_prevalence},
                          {"format", gen_format},
                          {"total_discrepancy", generator_total_discrepancy(gin, table)}};
                json j = to_json(make_manifest("generate", "", spec));
                j["output_digest"] = sha256_hex(csv.str());
                emit_json(j, gen_manifest.empty() ? gen_output + ".manifest.json" : gen_manifest);
            }
            return 0;
        }

        if (*fitc) {
            const Input in = load_input(fit_common.input, fit_common.format);
            ModelSpec spec = controls;
            spec.link = parse_link(link);
            spec.distribution = parse_distribution(dist);
            spec.estimation = parse_estimation(estimation);
            spec.validate();
            const auto flavor = robust ? CovarianceFlavor::robust_independence : CovarianceFlavor::model_based;
            json echo = to_json(spec);
            echo["flavor"] = to_string(flavor);
            echo["level"] = fit_common.level;
            auto outcome = fit(in.table, spec);
            if (auto* failure = std::get_if<ConvergenceFailure>(&outcome)) {
                std::cerr << to_json(*failure).dump() << "\n";
                return kExitNumerical;
            }
            emit_json(fit_report(std::get<FitResult>(outcome), flavor, fit_common.level, fit_common.display_scale(),
                                 make_manifest("fit", in.bytes, echo)),
                      fit_common.output);
            return 0;
        }

        if (*eff) {
            const Input in = load_input(eff_common.input, eff_common.format);
            ReportOptions opts;
            opts.flavor = eff_robust ? CovarianceFlavor::robust_independence : CovarianceFlavor::model_based;
            opts.level = eff_common.level;
            opts.scale = eff_common.display_scale();
            opts.fallback = fallback;
            opts.reri_source = reri_source == "log" ? RatioSource::relative_risk : RatioSource::odds_ratio;
            EffectReport report;
            try {
                report = build_effect_report(in.table, opts);
            } catch (const FitFailedError& e) {
                std::cerr << to_json(e.failure()).dump() << "\n";
                return kExitNumerical;
            }
            const auto verdict = additivity_verdict(report, alpha);
            if (table_view) {
                emit(render_effect_table(report), eff_common.output);
            } else {
                json echo{{"flavor", to_string(opts.flavor)}, {"level", opts.level},     {"scale", opts.scale},
                          {"fallback", fallback},             {"reri_source", reri_source}, {"alpha", alpha}};
                emit_json(effect_report(report, verdict, make_manifest("effects", in.bytes, echo)),
                          eff_common.output);
            }
            return 0;
        }

        if (*boot) {
            const Input in = load_input(boot_common.input, boot_common.format);
            bcfg.statistic = parse_statistic(statistic);
            bcfg.stratify_by_z = !unstratified;
            bcfg.validate();
            json echo{{"statistic", to_string(bcfg.statistic)},
                      {"replicates", bcfg.replicates},
                      {"stratify_by_z", bcfg.stratify_by_z},
                      {"level", bcfg.level}};
            const auto manifest = make_manifest("bootstrap", in.bytes, echo, bcfg.seed);
            auto write_dump = [&](const BootstrapResult& r) {
                if (dump.empty()) return;
                std::ostringstream csv;
                csv << "value\n";
                csv.precision(17);
                for (double v : r.replicate_values) csv << v << "\n";
                emit(csv.str(), dump);
            };
            try {
                const auto result = bootstrap(in.table, bcfg);
                write_dump(result);
                emit_json(bootstrap_report(result, manifest), boot_common.output);
            } catch (const BootstrapError& e) {
                write_dump(e.partial());
                json j = bootstrap_report(e.partial(), manifest);
                j["error"] = e.what();
                std::cerr << j.dump() << "\n";
                return kExitNumerical;
            }
            return 0;
        }

        if (*plot) {
            const Input in = load_input(plot_common.input, plot_common.format);
            const FigureKind kind = parse_figure(which);
            Figure fig;
            try {
                fig = make_figure(in.table, kind, plot_common.display_scale(), plot_common.level);
            } catch (const FitFailedError& e) {
                std::cerr << to_json(e.failure()).dump() << "\n";
                return kExitNumerical;
            }
            std::ostringstream out;
            if (plot_format == "csv")
                write_figure_csv(out, fig);
            else
                write_figure_svg(out, fig);
            emit(out.str(), plot_common.output);
            if (!plot_common.output.empty() && plot_common.output != "-") {
                json echo{{"figure", which}, {"format", plot_format}, {"level", plot_common.level},
                          {"scale", plot_common.display_scale()}};
                emit_json(to_json(make_manifest("plot", in.bytes, echo)), plot_common.output + ".manifest.json");
            }
            return 0;
        }
    } catch (const FitFailedError& e) {
        std::cerr << to_json(e.failure()).dump() << "\n";
        return kExitNumerical;
    } catch (const SingularInformationError& e) {
        std::cerr << json{{"error", "singular_information"}, {"detail", e.what()}, {"cell", e.cell()}}.dump() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return 0;
}

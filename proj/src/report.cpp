#include "interact/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace interact {

using nlohmann::json;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

json cell_json(std::size_t i) { return json{{"x", kCells[i].x}, {"z", kCells[i].z}}; }

}  // namespace

json to_json(const WaldResult& w, std::optional<double> scale) {
    json j{{"estimate", w.estimate},
           {"se", w.se},
           {"z", finite_or_null(w.z)},
           {"chi2", finite_or_null(w.chi2)},
           {"p_two_sided", w.p_two_sided},
           {"ci_low", w.ci_low},
           {"ci_high", w.ci_high},
           {"level", w.level},
           {"degenerate", w.degenerate}};
    if (scale) {
        j["scaled"] = json{{"multiplier", *scale},
                           {"estimate", w.estimate * *scale},
                           {"se", w.se * *scale},
                           {"ci_low", w.ci_low * *scale},
                           {"ci_high", w.ci_high * *scale}};
    }
    return j;
}

json to_json(const ModelSpec& spec) {
    return json{{"link", to_string(spec.link)},
                {"distribution", to_string(spec.distribution)},
                {"estimation", to_string(spec.estimation)},
                {"terms", spec.terms == Terms::saturated ? "saturated" : "main_effects"},
                {"max_iterations", spec.max_iterations},
                {"tolerance", spec.tolerance},
                {"step_halving_max", spec.step_halving_max}};
}

json to_json(const ConvergenceFailure& f) {
    json beta = json::array();
    for (Eigen::Index i = 0; i < f.last_beta.size(); ++i) beta.push_back(finite_or_null(f.last_beta(i)));
    return json{{"error", "convergence_failure"},
                {"reason", to_string(f.reason)},
                {"detail", f.detail},
                {"last_beta", beta},
                {"last_deviance", finite_or_null(f.last_deviance)}};
}

json to_json(const AdditivityVerdict& v) {
    json mult = json::object();
    for (const auto& m : v.departure_from_multiplicativity)
        mult[std::string(to_string(m.link))] = m.available ? json(m.departure) : json(nullptr);
    return json{{"alpha", v.alpha},
                {"departure_from_additivity", v.departure_from_additivity},
                {"departure_from_multiplicativity", mult}};
}

json to_json(const ReriResult& r) {
    json j = to_json(r.wald);
    j["source"] = to_string(r.source);
    j["approximation"] = r.approximation;
    j["gradient"] = json::array({r.gradient(0), r.gradient(1), r.gradient(2)});
    return j;
}

json fit_report(const FitResult& fit, CovarianceFlavor flavor, double level, double scale,
                const RunManifest& manifest) {
    const bool scaled = fit.spec.link == Link::identity;
    const auto names = coefficient_names(fit.spec.terms);
    const auto& cov = covariance_of(fit, flavor);

    json coefs = json::array();
    for (Eigen::Index k = 0; k < fit.beta.size(); ++k) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(fit.beta.size());
        e(k) = 1.0;
        json c = to_json(wald_contrast(fit.beta, cov, e, level), scaled ? std::optional<double>(scale) : std::nullopt);
        c["name"] = names[static_cast<std::size_t>(k)];
        c["se_model"] = std::sqrt(std::max(0.0, fit.cov_model(k, k)));
        c["se_robust"] = std::sqrt(std::max(0.0, fit.cov_robust(k, k)));
        coefs.push_back(c);
    }

    const auto pred = predict_cells(fit);
    json cells = json::array();
    for (std::size_t i = 0; i < 4; ++i) {
        json c = cell_json(i);
        c["link"] = pred.link[i];
        c["response"] = pred.response[i];
        if (scaled) c["response_scaled"] = pred.response[i] * scale;
        cells.push_back(c);
    }

    return json{{"schema_version", kSchemaVersion},
                {"kind", "fit"},
                {"manifest", to_json(manifest)},
                {"model", to_json(fit.spec)},
                {"inference", json{{"flavor", to_string(flavor)},
                                   {"level", level},
                                   {"scale", scaled ? json(scale) : json(nullptr)}}},
                {"coefficients", coefs},
                {"covariance", json{{"model_based", matrix_json(fit.cov_model)},
                                    {"robust_independence", matrix_json(fit.cov_robust)}}},
                {"cell_predictions", cells},
                {"convergence", json{{"converged", fit.converged},
                                     {"iterations", fit.iterations},
                                     {"deviance", fit.deviance},
                                     {"boundary_flag", fit.boundary_flag}}}};
}

json effect_report(const EffectReport& r, const AdditivityVerdict& verdict, const RunManifest& manifest) {
    const std::optional<double> scale = r.scale;
    json cells = json::array();
    for (std::size_t i = 0; i < 4; ++i) {
        json c = to_json(r.cell_risks[i], scale);
        c.update(cell_json(i));
        cells.push_back(c);
    }
    json attempts = json::array();
    for (const auto& a : r.attempts)
        attempts.push_back(json{{"strategy", to_string(a.strategy)}, {"accepted", a.accepted}, {"outcome", a.outcome}});

    json mult = json::array();
    for (const auto& m : r.multiplicativity) {
        json e{{"link", to_string(m.link)}};
        if (m.result) {
            e["beta3"] = to_json(m.result->beta3);
            e["ratio_of_ratios"] = m.result->ratio_of_ratios;
        } else {
            e["failure"] = m.failure;
        }
        mult.push_back(e);
    }

    return json{{"schema_version", kSchemaVersion},
                {"kind", "effects"},
                {"manifest", to_json(manifest)},
                {"strategy", to_string(r.strategy)},
                {"attempts", attempts},
                {"flavor", to_string(r.flavor)},
                {"level", r.level},
                {"scale", r.scale},
                {"cell_risks", cells},
                {"risk_differences", json{{"x", to_json(r.risk_difference_x, scale)},
                                          {"z", to_json(r.risk_difference_z, scale)}}},
                {"beta3", to_json(r.beta3, scale)},
                {"ic", to_json(r.ic, scale)},
                {"reri", r.reri ? to_json(*r.reri) : json(nullptr)},
                {"reri_failure", r.reri ? json(nullptr) : json(r.reri_failure)},
                {"multiplicativity", mult},
                {"verdict", to_json(verdict)}};
}

json bootstrap_report(const BootstrapResult& b, const RunManifest& manifest) {
    return json{{"schema_version", kSchemaVersion},
                {"kind", "bootstrap"},
                {"manifest", to_json(manifest)},
                {"statistic", to_string(b.config.statistic)},
                {"replicates", b.config.replicates},
                {"stratify_by_z", b.config.stratify_by_z},
                {"level", b.config.level},
                {"seed", b.seed},
                {"point_estimate", b.point_estimate},
                {"ci_low", b.ci_low},
                {"ci_high", b.ci_high},
                {"n_successful", b.replicate_values.size()},
                {"n_failed", b.n_failed},
                {"quantile_rule", "nearest_rank"}};
}

std::string render_effect_table(const EffectReport& r) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-6s %-3s %-3s %12s %14s %12s %12s\n", "", "x", "z", "estimate", "per-scale",
                  "lower", "upper");
    out << line;
    auto row = [&](const char* name, const char* x, const char* z, const WaldResult& w) {
        std::snprintf(line, sizeof line, "%-6s %-3s %-3s %12.6f %14.3f %12.3f %12.3f\n", name, x, z, w.estimate,
                      w.estimate * r.scale, w.ci_low * r.scale, w.ci_high * r.scale);
        out << line;
    };
    row("p11", "1", "1", r.cell_risks[cell_index(1, 1)]);
    row("p10", "1", "0", r.cell_risks[cell_index(1, 0)]);
    row("p01", "0", "1", r.cell_risks[cell_index(0, 1)]);
    row("p00", "0", "0", r.cell_risks[cell_index(0, 0)]);
    row("beta1", "", "", r.risk_difference_x);
    row("beta2", "", "", r.risk_difference_z);
    row("beta3", "", "", r.beta3);
    row("IC", "", "", r.ic);
    std::snprintf(line, sizeof line, "scale: per %.0f; strategy: %s; IC p = %.8f\n", r.scale,
                  std::string(to_string(r.strategy)).c_str(), r.ic.p_two_sided);
    out << line;
    if (r.reri) {
        std::snprintf(line, sizeof line, "RERI (%s) = %.3f (%.3f, %.3f)%s\n",
                      std::string(to_string(r.reri->source)).c_str(), r.reri->estimate, r.reri->wald.ci_low,
                      r.reri->wald.ci_high, r.reri->approximation ? " [odds-ratio approximation]" : "");
        out << line;
    }
    return out.str();
}

}  // namespace interact

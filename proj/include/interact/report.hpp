#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "interact/bootstrap.hpp"
#include "interact/effects.hpp"
#include "interact/glm.hpp"
#include "interact/manifest.hpp"
#include "interact/variance.hpp"

namespace interact {

/// Wald block. When `scale` is set, a "scaled" object repeats estimate, se
/// and interval multiplied by it; z and p never change with scale.
nlohmann::json to_json(const WaldResult& w, std::optional<double> scale = std::nullopt);

nlohmann::json to_json(const ModelSpec& spec);
nlohmann::json to_json(const ConvergenceFailure& failure);
nlohmann::json to_json(const AdditivityVerdict& verdict);
nlohmann::json to_json(const ReriResult& reri);

/// Coefficients with both standard errors, Wald inference under `flavor`,
/// covariance matrices, cell predictions and the convergence block. Scaled
/// values are attached for identity-link fits only.
nlohmann::json fit_report(const FitResult& fit, CovarianceFlavor flavor, double level, double scale,
                          const RunManifest& manifest);

nlohmann::json effect_report(const EffectReport& report, const AdditivityVerdict& verdict,
                             const RunManifest& manifest);

nlohmann::json bootstrap_report(const BootstrapResult& result, const RunManifest& manifest);

/// Fixed-width rendering of the absolute-risk table: the four cells, the two
/// risk differences, the product term and the interaction contrast, with
/// estimate, scaled estimate and interval.
std::string render_effect_table(const EffectReport& report);

}  // namespace interact

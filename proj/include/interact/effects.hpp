#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "interact/glm.hpp"
#include "interact/table.hpp"
#include "interact/variance.hpp"

namespace interact {

/// Weights over the four cells in canonical order (0,0), (1,0), (0,1), (1,1).
/// The default is the interaction contrast p11 - p10 - p01 + p00.
struct ContrastSpec {
    std::array<double, 4> coefficients{1.0, -1.0, -1.0, 1.0};
};

/// Interaction contrast from an identity-link fit: the estimate is beta3.
/// Throws SpecError for log or logit fits.
WaldResult compute_ic(const FitResult& fit, CovarianceFlavor flavor = CovarianceFlavor::model_based,
                      double level = 0.95);

/// Any cell contrast of an identity-link fit, evaluated on predicted risks.
WaldResult cell_contrast(const FitResult& fit, const ContrastSpec& contrast,
                         CovarianceFlavor flavor = CovarianceFlavor::model_based, double level = 0.95);

/// Wald results for the four predicted cell means on the link scale.
std::array<WaldResult, 4> link_scale_cells(const FitResult& fit, CovarianceFlavor flavor, double level = 0.95);

enum class RatioSource { relative_risk, odds_ratio };
std::string_view to_string(RatioSource source);

struct ReriResult {
    double estimate = 0.0;
    /// d RERI / d (beta1, beta2, beta3).
    Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
    WaldResult wald;
    RatioSource source = RatioSource::relative_risk;
    /// True when odds ratios stand in for relative risks (logit fits).
    bool approximation = false;
};

/// RERI = exp(b1+b2+b3) - exp(b1) - exp(b2) + 1.
double reri_value(const Eigen::Vector3d& b123);
Eigen::Vector3d reri_gradient(const Eigen::Vector3d& b123);

/// RERI from a log- or logit-link fit with a delta-method standard error and
/// symmetric Wald interval. Throws SpecError for identity fits.
ReriResult compute_reri(const FitResult& fit, CovarianceFlavor flavor = CovarianceFlavor::model_based,
                        double level = 0.95);

/// Plug-in RERI from raw cell proportions. Throws DataError when p00 = 0.
double reri_from_table(const ExposureTable& table);

struct MultiplicativityResult {
    Link link = Link::log;
    WaldResult beta3;
    /// exp(beta3): ratio of the joint ratio to the product of the separate ones.
    double ratio_of_ratios = 1.0;
};

MultiplicativityResult multiplicativity_test(const FitResult& fit,
                                             CovarianceFlavor flavor = CovarianceFlavor::model_based,
                                             double level = 0.95);

/// Strategy that produced the identity-scale estimates of a report.
enum class Strategy { binomial_identity, poisson_robust, ols_robust };
std::string_view to_string(Strategy s);

struct ReportOptions {
    CovarianceFlavor flavor = CovarianceFlavor::model_based;
    double level = 0.95;
    double scale = 100000.0;
    /// Walk binomial-identity -> Poisson-identity + robust -> ols + robust
    /// when a rung fails or ends on the parameter boundary.
    bool fallback = false;
    RatioSource reri_source = RatioSource::relative_risk;
    ModelSpec controls{};
};

struct StrategyAttempt {
    Strategy strategy = Strategy::binomial_identity;
    bool accepted = false;
    std::string outcome;
};

struct MultiplicativityEntry {
    Link link = Link::log;
    std::optional<MultiplicativityResult> result;
    std::string failure;
};

/// All estimates are stored on the probability (or link) scale; `scale` is a
/// display multiplier only.
struct EffectReport {
    Strategy strategy = Strategy::binomial_identity;
    CovarianceFlavor flavor = CovarianceFlavor::model_based;
    double scale = 100000.0;
    double level = 0.95;
    std::array<WaldResult, 4> cell_risks{};
    WaldResult risk_difference_x;  // beta1 = p10 - p00
    WaldResult risk_difference_z;  // beta2 = p01 - p00
    WaldResult beta3;
    WaldResult ic;
    std::optional<ReriResult> reri;
    std::string reri_failure;
    std::vector<MultiplicativityEntry> multiplicativity;
    std::vector<StrategyAttempt> attempts;
    FitResult identity_fit;
};

/// Fit the identity, log and logit models and assemble every effect measure.
/// Throws FitFailedError when no identity-scale strategy succeeds.
EffectReport build_effect_report(const ExposureTable& table, const ReportOptions& options = {});

struct AdditivityVerdict {
    double alpha = 0.05;
    bool departure_from_additivity = false;
    struct PerModel {
        Link link = Link::log;
        bool available = false;
        bool departure = false;
    };
    std::vector<PerModel> departure_from_multiplicativity;
};

AdditivityVerdict additivity_verdict(const EffectReport& report, double alpha = 0.05);

}  // namespace interact

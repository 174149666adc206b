#include "interact/effects.hpp"

#include <cmath>

namespace interact {

std::string_view to_string(RatioSource source) {
    return source == RatioSource::relative_risk ? "relative_risk" : "odds_ratio";
}

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::binomial_identity: return "binomial_identity";
        case Strategy::poisson_robust: return "poisson_robust";
        case Strategy::ols_robust: return "ols_robust";
    }
    return "?";
}

namespace {

void require_identity(const FitResult& fit) {
    if (fit.spec.link != Link::identity)
        throw SpecError("the interaction contrast is defined on the probability scale; an identity-link fit is required");
}

void require_saturated(const FitResult& fit) {
    if (fit.spec.terms != Terms::saturated) throw SpecError("effect measures need the saturated design");
}

Eigen::VectorXd unit(Eigen::Index p, Eigen::Index k) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(p);
    v(k) = 1.0;
    return v;
}

}  // namespace

WaldResult compute_ic(const FitResult& fit, CovarianceFlavor flavor, double level) {
    require_identity(fit);
    require_saturated(fit);
    return wald_contrast(fit.beta, covariance_of(fit, flavor), unit(4, 3), level);
}

WaldResult cell_contrast(const FitResult& fit, const ContrastSpec& contrast, CovarianceFlavor flavor, double level) {
    require_identity(fit);
    const auto design = DesignMatrix::make(fit.spec.terms);
    const Eigen::Map<const Eigen::Vector4d> c(contrast.coefficients.data());
    // c' mu = c' L beta with L the cell design rows.
    const Eigen::VectorXd on_beta = design.rows.transpose() * c;
    return wald_contrast(fit.beta, covariance_of(fit, flavor), on_beta, level);
}

std::array<WaldResult, 4> link_scale_cells(const FitResult& fit, CovarianceFlavor flavor, double level) {
    const auto design = DesignMatrix::make(fit.spec.terms);
    std::array<WaldResult, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) {
        const Eigen::VectorXd row = design.rows.row(static_cast<Eigen::Index>(i)).transpose();
        out[i] = wald_contrast(fit.beta, covariance_of(fit, flavor), row, level);
    }
    return out;
}

double reri_value(const Eigen::Vector3d& b) {
    return std::exp(b(0) + b(1) + b(2)) - std::exp(b(0)) - std::exp(b(1)) + 1.0;
}

Eigen::Vector3d reri_gradient(const Eigen::Vector3d& b) {
    const double joint = std::exp(b(0) + b(1) + b(2));
    return {joint - std::exp(b(0)), joint - std::exp(b(1)), joint};
}

ReriResult compute_reri(const FitResult& fit, CovarianceFlavor flavor, double level) {
    if (fit.spec.link == Link::identity) throw SpecError("RERI needs a log- or logit-link fit");
    require_saturated(fit);
    const Eigen::Vector3d b = fit.beta.segment<3>(1);
    ReriResult r;
    r.estimate = reri_value(b);
    r.gradient = reri_gradient(b);
    const Eigen::Matrix3d block = covariance_of(fit, flavor).block<3, 3>(1, 1);
    const double var = std::max(0.0, r.gradient.dot(block * r.gradient));
    r.wald = wald(r.estimate, var, level);
    r.source = fit.spec.link == Link::log ? RatioSource::relative_risk : RatioSource::odds_ratio;
    r.approximation = r.source == RatioSource::odds_ratio;
    return r;
}

double reri_from_table(const ExposureTable& table) {
    const double p00 = table.proportion(0, 0);
    if (p00 == 0.0) throw DataError("reference risk zero: RERI is undefined when p00 = 0");
    return table.proportion(1, 1) / p00 - table.proportion(0, 1) / p00 - table.proportion(1, 0) / p00 + 1.0;
}

MultiplicativityResult multiplicativity_test(const FitResult& fit, CovarianceFlavor flavor, double level) {
    if (fit.spec.link == Link::identity) throw SpecError("multiplicativity is assessed on log or logit fits");
    require_saturated(fit);
    MultiplicativityResult m;
    m.link = fit.spec.link;
    m.beta3 = wald_contrast(fit.beta, covariance_of(fit, flavor), unit(4, 3), level);
    m.ratio_of_ratios = std::exp(m.beta3.estimate);
    return m;
}

namespace {

ModelSpec with_controls(const ModelSpec& controls, Link link, Distribution dist, Estimation est) {
    ModelSpec s = controls;
    s.link = link;
    s.distribution = dist;
    s.estimation = est;
    s.terms = Terms::saturated;
    return s;
}

std::string describe(const ConvergenceFailure& f) {
    std::string s(to_string(f.reason));
    if (!f.detail.empty()) s += ": " + f.detail;
    return s;
}

}  // namespace

EffectReport build_effect_report(const ExposureTable& table, const ReportOptions& options) {
    EffectReport report;
    report.scale = options.scale;
    report.level = options.level;

    struct Rung {
        Strategy strategy;
        ModelSpec spec;
        CovarianceFlavor flavor;
    };
    const std::vector<Rung> ladder{
        {Strategy::binomial_identity,
         with_controls(options.controls, Link::identity, Distribution::binomial, Estimation::mle_irls), options.flavor},
        {Strategy::poisson_robust,
         with_controls(options.controls, Link::identity, Distribution::poisson, Estimation::mle_irls),
         CovarianceFlavor::robust_independence},
        {Strategy::ols_robust, with_controls(options.controls, Link::identity, Distribution::binomial, Estimation::ols),
         CovarianceFlavor::robust_independence},
    };

    std::optional<ConvergenceFailure> last_failure;
    bool found = false;
    for (const auto& rung : ladder) {
        auto outcome = fit(table, rung.spec);
        StrategyAttempt attempt{rung.strategy, false, {}};
        if (auto* failure = std::get_if<ConvergenceFailure>(&outcome)) {
            attempt.outcome = describe(*failure);
            last_failure = *failure;
            report.attempts.push_back(attempt);
            if (!options.fallback) break;
            continue;
        }
        auto& f = std::get<FitResult>(outcome);
        if (f.boundary_flag && options.fallback && rung.strategy != Strategy::ols_robust) {
            attempt.outcome = "boundary: a fitted mean sits on the edge of its support";
            report.attempts.push_back(attempt);
            continue;
        }
        attempt.accepted = true;
        attempt.outcome = f.boundary_flag ? "converged (boundary)" : "converged";
        report.attempts.push_back(attempt);
        report.strategy = rung.strategy;
        report.flavor = rung.flavor;
        report.identity_fit = std::move(f);
        found = true;
        break;
    }
    if (!found) {
        ConvergenceFailure failure = last_failure.value_or(
            ConvergenceFailure{FailureReason::boundary_stall, Eigen::VectorXd::Zero(4), 0.0, "every strategy ended on the boundary"});
        failure.detail = "no identity-scale strategy succeeded; last: " + describe(failure);
        throw FitFailedError(failure);
    }

    const auto& idf = report.identity_fit;
    report.cell_risks = link_scale_cells(idf, report.flavor, options.level);
    const auto& cov = covariance_of(idf, report.flavor);
    report.risk_difference_x = wald_contrast(idf.beta, cov, unit(4, 1), options.level);
    report.risk_difference_z = wald_contrast(idf.beta, cov, unit(4, 2), options.level);
    report.beta3 = wald_contrast(idf.beta, cov, unit(4, 3), options.level);
    report.ic = cell_contrast(idf, ContrastSpec{}, report.flavor, options.level);

    for (Link link : {Link::log, Link::logit}) {
        MultiplicativityEntry entry;
        entry.link = link;
        auto outcome = fit(table, with_controls(options.controls, link, Distribution::binomial, Estimation::mle_irls));
        if (auto* failure = std::get_if<ConvergenceFailure>(&outcome)) {
            entry.failure = describe(*failure);
        } else {
            const auto& f = std::get<FitResult>(outcome);
            entry.result = multiplicativity_test(f, options.flavor, options.level);
            const bool wanted = (link == Link::log) == (options.reri_source == RatioSource::relative_risk);
            if (wanted) report.reri = compute_reri(f, options.flavor, options.level);
        }
        const bool wanted = (link == Link::log) == (options.reri_source == RatioSource::relative_risk);
        if (wanted && !report.reri) report.reri_failure = entry.failure;
        report.multiplicativity.push_back(std::move(entry));
    }
    return report;
}

AdditivityVerdict additivity_verdict(const EffectReport& report, double alpha) {
    AdditivityVerdict v;
    v.alpha = alpha;
    v.departure_from_additivity = report.ic.p_two_sided < alpha;
    for (const auto& entry : report.multiplicativity) {
        AdditivityVerdict::PerModel m;
        m.link = entry.link;
        m.available = entry.result.has_value();
        m.departure = m.available && entry.result->beta3.p_two_sided < alpha;
        v.departure_from_multiplicativity.push_back(m);
    }
    return v;
}

}  // namespace interact

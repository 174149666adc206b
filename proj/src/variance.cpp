#include "interact/variance.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

namespace interact {

std::string_view to_string(CovarianceFlavor flavor) {
    return flavor == CovarianceFlavor::model_based ? "model_based" : "robust_independence";
}

CovarianceFlavor parse_flavor(std::string_view s) {
    if (s == "model_based" || s == "model") return CovarianceFlavor::model_based;
    if (s == "robust_independence" || s == "robust") return CovarianceFlavor::robust_independence;
    throw std::invalid_argument("unknown covariance flavor '" + std::string(s) + "'");
}

const Eigen::MatrixXd& covariance_of(const FitResult& fit, CovarianceFlavor flavor) {
    return flavor == CovarianceFlavor::model_based ? fit.cov_model : fit.cov_robust;
}

namespace {

std::string cell_label(std::size_t i) {
    return "(x=" + std::to_string(kCells[i].x) + ",z=" + std::to_string(kCells[i].z) + ")";
}

struct Bread {
    Eigen::MatrixXd information;
    Eigen::MatrixXd inverse;
};

// Working weight n * (dmu/deta)^2 / V per cell, or n for ols.
double working_weight(const detail::CellMoments& m, double n) { return n * m.dmu_deta * m.dmu_deta / m.variance; }

Bread make_bread(const FitResult& fit, const ExposureTable& table) {
    const auto design = DesignMatrix::make(fit.spec.terms);
    const Eigen::Index p = design.columns();
    const Eigen::VectorXd eta = design.rows * fit.beta;
    Bread b;
    b.information = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto m = detail::cell_moments(eta(static_cast<Eigen::Index>(i)), fit.spec);
        const double w = working_weight(m, static_cast<double>(table.cells()[i].total));
        if (!std::isfinite(w) || w <= 0.0)
            throw SingularInformationError("expected information is singular: zero or non-finite weight in cell " +
                                               cell_label(i),
                                           cell_label(i));
        const Eigen::VectorXd x = design.rows.row(static_cast<Eigen::Index>(i)).transpose();
        b.information += w * x * x.transpose();
    }
    auto ldlt = b.information.ldlt();
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0)
        throw SingularInformationError("expected information is singular", "");
    b.inverse = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    return b;
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

CovarianceMatrix model_covariance(const FitResult& fit, const ExposureTable& table) {
    const Bread bread = make_bread(fit, table);
    double scale = 1.0;
    if (fit.spec.estimation == Estimation::ols) {
        const auto design = DesignMatrix::make(fit.spec.terms);
        const Eigen::VectorXd mu = design.rows * fit.beta;
        double rss = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            const auto& c = table.cells()[i];
            const double m = mu(static_cast<Eigen::Index>(i));
            const double e = static_cast<double>(c.events);
            const double n = static_cast<double>(c.total);
            rss += e * (1.0 - m) * (1.0 - m) + (n - e) * m * m;
        }
        scale = rss / static_cast<double>(table.total_count() - design.columns());
    }
    return {symmetrized(scale * bread.inverse), CovarianceFlavor::model_based};
}

CovarianceMatrix robust_covariance(const FitResult& fit, const ExposureTable& table) {
    const Bread bread = make_bread(fit, table);
    const auto design = DesignMatrix::make(fit.spec.terms);
    const Eigen::Index p = design.columns();
    const Eigen::VectorXd eta = design.rows * fit.beta;
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto m = detail::cell_moments(eta(static_cast<Eigen::Index>(i)), fit.spec);
        const auto& c = table.cells()[i];
        const double e = static_cast<double>(c.events);
        const double n = static_cast<double>(c.total);
        const double mu = m.mu;
        // Sum over the cell's individuals of (y - mu)^2.
        const double ss = e * (1.0 - mu) * (1.0 - mu) + (n - e) * mu * mu;
        const double g = m.dmu_deta / m.variance;
        const Eigen::VectorXd x = design.rows.row(static_cast<Eigen::Index>(i)).transpose();
        meat += (g * g * ss) * x * x.transpose();
    }
    return {symmetrized(bread.inverse * meat * bread.inverse), CovarianceFlavor::robust_independence};
}

CovarianceMatrix robust_covariance(const FitResult& fit, std::span<const IndividualRecord> records) {
    const auto design = DesignMatrix::make(fit.spec.terms);
    const Eigen::Index p = design.columns();
    const Eigen::VectorXd eta = design.rows * fit.beta;
    std::array<detail::CellMoments, 4> moments{};
    for (std::size_t i = 0; i < 4; ++i) moments[i] = detail::cell_moments(eta(static_cast<Eigen::Index>(i)), fit.spec);

    Eigen::MatrixXd information = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
    for (const auto& r : records) {
        const auto k = cell_index(r.x, r.z);
        const auto& m = moments[k];
        const Eigen::VectorXd x = design.rows.row(static_cast<Eigen::Index>(k)).transpose();
        const double w = static_cast<double>(r.weight);
        const Eigen::VectorXd u = (m.dmu_deta / m.variance * (r.y - m.mu)) * x;
        information += (w * m.dmu_deta * m.dmu_deta / m.variance) * x * x.transpose();
        meat += w * u * u.transpose();
    }
    auto ldlt = information.ldlt();
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0)
        throw SingularInformationError("expected information is singular", "");
    const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    return {symmetrized(inv * meat * inv), CovarianceFlavor::robust_independence};
}

double two_sided_p(double z) {
    if (std::isnan(z)) return 1.0;
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

double critical_value(double level) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + level / 2.0);
}

WaldResult wald(double estimate, double variance, double level) {
    if (!(variance >= 0.0)) throw std::invalid_argument("variance must be non-negative");
    const double crit = critical_value(level);
    WaldResult w;
    w.estimate = estimate;
    w.level = level;
    w.se = std::sqrt(variance);
    if (variance == 0.0) {
        w.degenerate = true;
        w.z = estimate == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), estimate);
        w.p_two_sided = estimate == 0.0 ? 1.0 : 0.0;
    } else {
        w.z = estimate / w.se;
        w.p_two_sided = two_sided_p(w.z);
    }
    w.chi2 = w.z * w.z;
    w.ci_low = estimate - crit * w.se;
    w.ci_high = estimate + crit * w.se;
    return w;
}

WaldResult wald_contrast(const Eigen::VectorXd& beta, const Eigen::MatrixXd& cov, const Eigen::VectorXd& c,
                         double level) {
    const double est = c.dot(beta);
    // Guard against -0 from rounding in c' S c for PSD S.
    const double var = std::max(0.0, c.dot(cov * c));
    return wald(est, var, level);
}

}  // namespace interact

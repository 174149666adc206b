#include "interact/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "interact/variance.hpp"

namespace interact {

std::string_view to_string(Link link) {
    switch (link) {
        case Link::identity: return "identity";
        case Link::log: return "log";
        case Link::logit: return "logit";
    }
    return "?";
}

std::string_view to_string(Distribution dist) {
    return dist == Distribution::binomial ? "binomial" : "poisson";
}

std::string_view to_string(Estimation est) { return est == Estimation::mle_irls ? "mle_irls" : "ols"; }

std::string_view to_string(FailureReason reason) {
    switch (reason) {
        case FailureReason::max_iterations: return "max_iterations";
        case FailureReason::singular_weights: return "singular_weights";
        case FailureReason::boundary_stall: return "boundary_stall";
        case FailureReason::separation: return "separation";
    }
    return "?";
}

Link parse_link(std::string_view s) {
    if (s == "identity") return Link::identity;
    if (s == "log") return Link::log;
    if (s == "logit") return Link::logit;
    throw SpecError("unknown link '" + std::string(s) + "'");
}

Distribution parse_distribution(std::string_view s) {
    if (s == "binomial" || s == "bin") return Distribution::binomial;
    if (s == "poisson") return Distribution::poisson;
    throw SpecError("unknown distribution '" + std::string(s) + "'");
}

Estimation parse_estimation(std::string_view s) {
    if (s == "mle_irls" || s == "mle") return Estimation::mle_irls;
    if (s == "ols" || s == "mls") return Estimation::ols;
    throw SpecError("unknown estimation method '" + std::string(s) + "'");
}

void ModelSpec::validate() const {
    if (estimation == Estimation::ols && link != Link::identity) throw SpecError("ols estimation requires the identity link");
    if (estimation == Estimation::mle_irls && link == Link::logit && distribution != Distribution::binomial)
        throw SpecError("logit link requires the binomial distribution");
    if (max_iterations < 1) throw SpecError("max_iterations must be positive");
    if (step_halving_max < 1) throw SpecError("step_halving_max must be positive");
    if (!(tolerance > 0.0)) throw SpecError("tolerance must be positive");
}

DesignMatrix DesignMatrix::make(Terms terms) {
    const Eigen::Index p = terms == Terms::saturated ? 4 : 3;
    DesignMatrix d;
    d.terms = terms;
    d.rows.resize(4, p);
    for (std::size_t i = 0; i < kCells.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const double x = kCells[i].x;
        const double z = kCells[i].z;
        d.rows(r, 0) = 1.0;
        d.rows(r, 1) = x;
        d.rows(r, 2) = z;
        if (p == 4) d.rows(r, 3) = x * z;
    }
    return d;
}

std::vector<std::string> coefficient_names(Terms terms) {
    if (terms == Terms::saturated) return {"intercept", "x", "z", "x:z"};
    return {"intercept", "x", "z"};
}

FitFailedError::FitFailedError(ConvergenceFailure failure)
    : std::runtime_error("fit failed: " + std::string(to_string(failure.reason)) +
                         (failure.detail.empty() ? "" : " (" + failure.detail + ")")),
      failure_(std::move(failure)) {}

namespace detail {

double inverse_link(double eta, Link link) {
    switch (link) {
        case Link::identity: return eta;
        case Link::log: return std::exp(eta);
        case Link::logit: return 1.0 / (1.0 + std::exp(-eta));
    }
    return eta;
}

double link_function(double mu, Link link) {
    switch (link) {
        case Link::identity: return mu;
        case Link::log: return std::log(mu);
        case Link::logit: return std::log(mu / (1.0 - mu));
    }
    return mu;
}

CellMoments cell_moments(double eta, const ModelSpec& spec) {
    CellMoments m;
    m.eta = eta;
    m.mu = inverse_link(eta, spec.link);
    if (spec.estimation == Estimation::ols) {
        m.mu_clamped = m.mu;
        m.dmu_deta = 1.0;
        m.variance = 1.0;
        return m;
    }
    double lo = kMeanBound;
    double hi = spec.distribution == Distribution::binomial ? 1.0 - kMeanBound : std::numeric_limits<double>::infinity();
    m.mu_clamped = std::clamp(m.mu, lo, hi);
    m.clamped = m.mu_clamped != m.mu;
    const double mu = m.mu_clamped;
    switch (spec.link) {
        case Link::identity: m.dmu_deta = 1.0; break;
        case Link::log: m.dmu_deta = mu; break;
        case Link::logit: m.dmu_deta = mu * (1.0 - mu); break;
    }
    m.variance = spec.distribution == Distribution::binomial ? mu * (1.0 - mu) : mu;
    return m;
}

}  // namespace detail

namespace {

using detail::CellMoments;

double xlogy_ratio(double a, double b) {
    // a * log(a / b) with 0 log 0 = 0
    return a > 0.0 ? a * std::log(a / b) : 0.0;
}

double cell_deviance(const CellCount& c, const CellMoments& m, const ModelSpec& spec) {
    const double n = static_cast<double>(c.total);
    const double e = static_cast<double>(c.events);
    const double mu = m.mu;
    if (spec.estimation == Estimation::ols) {
        const double r = e / n - mu;
        return n * r * r;
    }
    if (spec.distribution == Distribution::binomial)
        return 2.0 * (xlogy_ratio(e, n * mu) + xlogy_ratio(n - e, n * (1.0 - mu)));
    return 2.0 * (xlogy_ratio(e, n * mu) - (e - n * mu));
}

bool feasible(const CellMoments& m, const ModelSpec& spec) {
    if (!std::isfinite(m.mu)) return false;
    if (spec.estimation == Estimation::ols) return true;
    if (m.mu < 0.0) return false;
    if (spec.distribution == Distribution::binomial && m.mu > 1.0) return false;
    return true;
}

struct Evaluation {
    std::array<CellMoments, 4> moments{};
    double deviance = 0.0;
    bool feasible = true;
    bool clamped = false;
};

Evaluation evaluate(const Eigen::VectorXd& beta, const DesignMatrix& design, const ExposureTable& table,
                    const ModelSpec& spec) {
    Evaluation ev;
    const Eigen::VectorXd eta = design.rows * beta;
    for (std::size_t i = 0; i < 4; ++i) {
        auto& m = ev.moments[i];
        m = detail::cell_moments(eta(static_cast<Eigen::Index>(i)), spec);
        ev.feasible = ev.feasible && feasible(m, spec);
        ev.clamped = ev.clamped || m.clamped;
        ev.deviance += cell_deviance(table.cells()[i], m, spec);
    }
    if (!std::isfinite(ev.deviance)) ev.feasible = false;
    return ev;
}

Eigen::VectorXd start_values(const ExposureTable& table, const DesignMatrix& design, const ModelSpec& spec) {
    Eigen::VectorXd eta(4);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& c = table.cells()[i];
        const double n = static_cast<double>(c.total);
        const double e = static_cast<double>(c.events);
        double v = 0.0;
        switch (spec.link) {
            case Link::identity: v = e / n; break;
            case Link::log: v = std::log(std::max(e / n, 0.5 / n)); break;
            case Link::logit: v = std::log((e + 0.5) / (n - e + 0.5)); break;
        }
        eta(static_cast<Eigen::Index>(i)) = v;
    }
    // Exact for the saturated design; least-squares projection otherwise.
    return design.rows.colPivHouseholderQr().solve(eta);
}

FitOutcome fit_ols(const ExposureTable& table, const ModelSpec& spec, const DesignMatrix& design) {
    const Eigen::Index p = design.columns();
    if (table.total_count() <= p) throw SpecError("ols needs more individuals than coefficients");
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
    for (std::size_t i = 0; i < 4; ++i) {
        const Eigen::VectorXd x = design.rows.row(static_cast<Eigen::Index>(i)).transpose();
        xtx += static_cast<double>(table.cells()[i].total) * x * x.transpose();
        xty += static_cast<double>(table.cells()[i].events) * x;
    }
    auto ldlt = xtx.ldlt();
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        return ConvergenceFailure{FailureReason::singular_weights, Eigen::VectorXd::Zero(p), 0.0, "X'X is singular"};
    FitResult out;
    out.spec = spec;
    out.beta = ldlt.solve(xty);
    out.converged = true;
    out.iterations = 0;
    out.deviance = evaluate(out.beta, design, table, spec).deviance;
    out.deviance_trace = {out.deviance};
    out.cov_model = model_covariance(out, table).matrix;
    out.cov_robust = robust_covariance(out, table).matrix;
    return out;
}

}  // namespace

FitOutcome fit(const ExposureTable& table, const ModelSpec& spec) {
    spec.validate();
    const auto design = DesignMatrix::make(spec.terms);
    if (spec.estimation == Estimation::ols) return fit_ols(table, spec, design);

    const Eigen::Index p = design.columns();
    if (spec.link == Link::log) {
        for (const auto& c : kCells) {
            if (table.at(c.x, c.z).events == 0) {
                return ConvergenceFailure{FailureReason::separation, Eigen::VectorXd::Zero(p), 0.0,
                                          "cell (x=" + std::to_string(c.x) + ",z=" + std::to_string(c.z) +
                                              ") has no events; the log-link estimate diverges"};
            }
        }
    }

    Eigen::VectorXd beta = start_values(table, design, spec);
    Evaluation current = evaluate(beta, design, table, spec);
    if (!current.feasible) {
        // Projection left the support (non-saturated designs only): start flat at the pooled risk.
        std::int64_t events = 0;
        for (const auto& c : table.cells()) events += c.events;
        const double n = static_cast<double>(table.total_count());
        const double pooled = std::clamp(static_cast<double>(events) / n, 0.5 / n, 1.0 - 0.5 / n);
        beta = Eigen::VectorXd::Zero(p);
        beta(0) = detail::link_function(pooled, spec.link);
        current = evaluate(beta, design, table, spec);
    }
    if (!current.feasible) {
        return ConvergenceFailure{FailureReason::boundary_stall, beta, current.deviance,
                                  "start values lie outside the mean's support"};
    }

    FitResult out;
    out.spec = spec;
    out.boundary_flag = current.clamped;
    out.deviance_trace.push_back(current.deviance);

    for (int iter = 1; iter <= spec.max_iterations; ++iter) {
        Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(p);
        for (std::size_t i = 0; i < 4; ++i) {
            const auto& m = current.moments[i];
            const auto& c = table.cells()[i];
            const double n = static_cast<double>(c.total);
            const double ybar = static_cast<double>(c.events) / n;
            const Eigen::VectorXd x = design.rows.row(static_cast<Eigen::Index>(i)).transpose();
            info += (n * m.dmu_deta * m.dmu_deta / m.variance) * x * x.transpose();
            grad += (n * (ybar - m.mu) * m.dmu_deta / m.variance) * x;
        }
        auto ldlt = info.ldlt();
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !info.allFinite() ||
            ldlt.vectorD().minCoeff() <= 0.0) {
            return ConvergenceFailure{FailureReason::singular_weights, beta, current.deviance,
                                      "expected information is not positive definite"};
        }
        const Eigen::VectorXd step = ldlt.solve(grad);

        const double slack = spec.tolerance * (std::abs(current.deviance) + 0.1);
        double t = 1.0;
        bool accepted = false;
        Eigen::VectorXd candidate;
        Evaluation next;
        for (int h = 0; h <= spec.step_halving_max; ++h, t *= 0.5) {
            candidate = beta + t * step;
            next = evaluate(candidate, design, table, spec);
            if (next.feasible && next.deviance <= current.deviance + slack) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            return ConvergenceFailure{FailureReason::boundary_stall, beta, current.deviance,
                                      "step-halving exhausted without a feasible, non-increasing step"};
        }

        const double change = std::abs(next.deviance - current.deviance) / (std::abs(next.deviance) + 0.1);
        beta = candidate;
        current = next;
        out.boundary_flag = out.boundary_flag || current.clamped;
        out.deviance_trace.push_back(current.deviance);
        if (change < spec.tolerance) {
            out.beta = beta;
            out.converged = true;
            out.iterations = iter;
            out.deviance = current.deviance;
            try {
                out.cov_model = model_covariance(out, table).matrix;
                out.cov_robust = robust_covariance(out, table).matrix;
            } catch (const SingularInformationError& e) {
                return ConvergenceFailure{FailureReason::singular_weights, beta, current.deviance, e.what()};
            }
            return out;
        }
    }
    return ConvergenceFailure{FailureReason::max_iterations, beta, current.deviance,
                              "no convergence within " + std::to_string(spec.max_iterations) + " iterations"};
}

FitOutcome fit(std::span<const IndividualRecord> records, const ModelSpec& spec) {
    return fit(tally_records(records), spec);
}

FitResult fit_or_throw(const ExposureTable& table, const ModelSpec& spec) {
    auto outcome = fit(table, spec);
    if (auto* failure = std::get_if<ConvergenceFailure>(&outcome)) throw FitFailedError(std::move(*failure));
    return std::get<FitResult>(std::move(outcome));
}

CellPredictions predict_cells(const FitResult& fit) {
    const auto design = DesignMatrix::make(fit.spec.terms);
    const Eigen::VectorXd eta = design.rows * fit.beta;
    CellPredictions out;
    for (std::size_t i = 0; i < 4; ++i) {
        out.link[i] = eta(static_cast<Eigen::Index>(i));
        out.response[i] = detail::inverse_link(out.link[i], fit.spec.link);
    }
    return out;
}

double deviance(const Eigen::VectorXd& beta, const ExposureTable& table, const ModelSpec& spec) {
    return evaluate(beta, DesignMatrix::make(spec.terms), table, spec).deviance;
}

double deviance(const FitResult& fit, const ExposureTable& table) { return deviance(fit.beta, table, fit.spec); }

Eigen::VectorXd score(const Eigen::VectorXd& beta, const ExposureTable& table, const ModelSpec& spec) {
    const auto design = DesignMatrix::make(spec.terms);
    const Eigen::VectorXd eta = design.rows * beta;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(design.columns());
    for (std::size_t i = 0; i < 4; ++i) {
        const auto m = detail::cell_moments(eta(static_cast<Eigen::Index>(i)), spec);
        const auto& c = table.cells()[i];
        const double n = static_cast<double>(c.total);
        const double resid = static_cast<double>(c.events) - n * m.mu;
        grad += (resid * m.dmu_deta / m.variance) * design.rows.row(static_cast<Eigen::Index>(i)).transpose();
    }
    return grad;
}

}  // namespace interact

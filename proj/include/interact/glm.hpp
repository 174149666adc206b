#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "interact/table.hpp"

namespace interact {

enum class Link { identity, log, logit };
enum class Distribution { binomial, poisson };
enum class Estimation { mle_irls, ols };

/// Which columns the design carries. `main_effects` drops the product term
/// and exists for nested-model deviance comparisons.
enum class Terms { saturated, main_effects };

std::string_view to_string(Link link);
std::string_view to_string(Distribution dist);
std::string_view to_string(Estimation est);
Link parse_link(std::string_view s);
Distribution parse_distribution(std::string_view s);
Estimation parse_estimation(std::string_view s);

/// Raised when a ModelSpec is internally inconsistent or the data cannot
/// support the requested design.
class SpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ModelSpec {
    Link link = Link::identity;
    Distribution distribution = Distribution::binomial;
    Estimation estimation = Estimation::mle_irls;
    Terms terms = Terms::saturated;
    int max_iterations = 100;
    /// Stop when |change in deviance| / (|deviance| + 0.1) falls below this.
    double tolerance = 1e-10;
    int step_halving_max = 30;

    /// Throws SpecError for unsupported combinations (ols needs identity,
    /// logit needs binomial) or non-positive controls.
    void validate() const;
};

/// Cell-level design: one row per cell in canonical order, columns
/// [intercept, X, Z, XZ] (XZ omitted for main-effects designs).
struct DesignMatrix {
    Eigen::MatrixXd rows;
    Terms terms = Terms::saturated;

    static DesignMatrix make(Terms terms);
    Eigen::Index columns() const { return rows.cols(); }
};

/// Names of the coefficients in design order.
std::vector<std::string> coefficient_names(Terms terms);

struct FitResult {
    ModelSpec spec;
    /// Link-scale coefficients (beta0, beta1, beta2, beta3).
    Eigen::VectorXd beta;
    Eigen::MatrixXd cov_model;
    Eigen::MatrixXd cov_robust;
    bool converged = false;
    int iterations = 0;
    double deviance = 0.0;
    /// Set when any fitted mean had to be clamped into the open support of
    /// the distribution (a cell estimate on the parameter boundary).
    bool boundary_flag = false;
    /// Deviance at the start value followed by each accepted iterate.
    std::vector<double> deviance_trace;
};

enum class FailureReason { max_iterations, singular_weights, boundary_stall, separation };
std::string_view to_string(FailureReason reason);

struct ConvergenceFailure {
    FailureReason reason = FailureReason::max_iterations;
    Eigen::VectorXd last_beta;
    double last_deviance = 0.0;
    std::string detail;
};

using FitOutcome = std::variant<FitResult, ConvergenceFailure>;

/// Fit the two-factor model to aggregated cell counts.
///
/// IRLS (Fisher scoring) for mle_irls with step-halving whenever a candidate
/// leaves the mean's support or raises the deviance; normal equations for
/// ols. Both covariance flavors are attached to the returned FitResult.
/// Throws SpecError for invalid specs; numerical trouble is reported through
/// ConvergenceFailure.
FitOutcome fit(const ExposureTable& table, const ModelSpec& spec);

/// Record-level entry point. Records are reduced to their cell sufficient
/// statistics, so the result matches the aggregated fit.
FitOutcome fit(std::span<const IndividualRecord> records, const ModelSpec& spec);

/// Convenience for callers that treat failure as exceptional.
class FitFailedError : public std::runtime_error {
public:
    explicit FitFailedError(ConvergenceFailure failure);
    const ConvergenceFailure& failure() const { return failure_; }

private:
    ConvergenceFailure failure_;
};

FitResult fit_or_throw(const ExposureTable& table, const ModelSpec& spec);

struct CellPredictions {
    /// Canonical cell order (0,0), (1,0), (0,1), (1,1).
    std::array<double, 4> link{};
    std::array<double, 4> response{};
};

CellPredictions predict_cells(const FitResult& fit);

/// Deviance against the cell-saturated model for the fit's distribution
/// (binomial, Poisson, or grouped Gaussian for ols). Zero for saturated fits.
double deviance(const FitResult& fit, const ExposureTable& table);
double deviance(const Eigen::VectorXd& beta, const ExposureTable& table, const ModelSpec& spec);

/// Log-likelihood gradient with respect to beta (least-squares normal
/// equations residual for ols).
Eigen::VectorXd score(const Eigen::VectorXd& beta, const ExposureTable& table, const ModelSpec& spec);

namespace detail {

/// Mean, derivative, and variance of one cell under a link/distribution pair.
struct CellMoments {
    double eta = 0.0;
    double mu = 0.0;          // unclamped inverse link
    double mu_clamped = 0.0;  // projected into the open support
    double dmu_deta = 0.0;
    double variance = 0.0;    // variance function at mu_clamped
    bool clamped = false;
};

inline constexpr double kMeanBound = 1e-12;

CellMoments cell_moments(double eta, const ModelSpec& spec);
double inverse_link(double eta, Link link);
double link_function(double mu, Link link);

}  // namespace detail

}  // namespace interact

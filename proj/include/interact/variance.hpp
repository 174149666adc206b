#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "interact/glm.hpp"
#include "interact/table.hpp"

namespace interact {

enum class CovarianceFlavor { model_based, robust_independence };
std::string_view to_string(CovarianceFlavor flavor);
CovarianceFlavor parse_flavor(std::string_view s);

struct CovarianceMatrix {
    Eigen::MatrixXd matrix;
    CovarianceFlavor flavor = CovarianceFlavor::model_based;
};

/// Expected information is not invertible. `cell` names the first cell whose
/// working weight is zero or non-finite, when one exists.
class SingularInformationError : public std::runtime_error {
public:
    SingularInformationError(const std::string& what, std::string cell)
        : std::runtime_error(what), cell_(std::move(cell)) {}
    const std::string& cell() const { return cell_; }

private:
    std::string cell_;
};

/// Inverse expected information at the fitted coefficients. For ols this is
/// the classical sigma^2 (X'X)^-1 with sigma^2 = RSS / (N - p).
CovarianceMatrix model_covariance(const FitResult& fit, const ExposureTable& table);

/// Independence-working-model sandwich A^-1 B A^-1: A is the expected
/// information (X'X for ols), B the outer product of per-individual score
/// contributions. No small-sample correction.
CovarianceMatrix robust_covariance(const FitResult& fit, const ExposureTable& table);

/// Same sandwich accumulated one record at a time (weights act as frequency
/// counts). Agrees with the aggregated form up to floating-point summation.
CovarianceMatrix robust_covariance(const FitResult& fit, std::span<const IndividualRecord> records);

const Eigen::MatrixXd& covariance_of(const FitResult& fit, CovarianceFlavor flavor);

struct WaldResult {
    double estimate = 0.0;
    double se = 0.0;
    double z = 0.0;
    double p_two_sided = 1.0;
    /// z squared, the 1-df Wald chi-square.
    double chi2 = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double level = 0.95;
    /// Zero variance: z is infinite (or undefined for a zero estimate).
    bool degenerate = false;
};

/// Two-sided standard normal tail probability P(|Z| >= |z|).
double two_sided_p(double z);
/// Standard normal quantile for a two-sided interval at `level`.
double critical_value(double level);

/// Wald test and interval for a scalar with the given variance. Throws
/// std::invalid_argument for negative variance or level outside (0, 1).
WaldResult wald(double estimate, double variance, double level = 0.95);

/// Wald result for the linear combination c' beta.
WaldResult wald_contrast(const Eigen::VectorXd& beta, const Eigen::MatrixXd& cov, const Eigen::VectorXd& c,
                         double level = 0.95);

}  // namespace interact

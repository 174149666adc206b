#include "doctest.h"

#include <random>

#include "interact/variance.hpp"
#include "oracle.hpp"

using namespace interact;

namespace {

ModelSpec spec_of(Link link, Distribution dist = Distribution::binomial, Estimation est = Estimation::mle_irls) {
    ModelSpec s;
    s.link = link;
    s.distribution = dist;
    s.estimation = est;
    return s;
}

double max_rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    double worst = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            const double scale = std::max(std::abs(a(i, j)), std::sqrt(std::abs(a(i, i) * a(j, j))));
            worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / scale);
        }
    return worst;
}

bool is_psd(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    return es.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("standard errors and intervals on the Hammond table") {
    const auto t = oracle::hammond();
    const auto f = fit_or_throw(t, spec_of(Link::identity));
    const auto p = oracle::props(t);
    CHECK(f.cov_model(3, 3) == doctest::Approx(oracle::var_identity_beta3(p)).epsilon(1e-10));
    CHECK(std::abs(std::sqrt(f.cov_model(3, 3)) * 1e5 - 114.18) < 5e-3);

    const auto ic = wald(f.beta(3), f.cov_model(3, 3));
    CHECK(std::abs(ic.p_two_sided - 0.00012702) < 1e-6);
    CHECK(std::abs(ic.ci_low * 1e5 - 213.768) < 0.01);
    CHECK(std::abs(ic.ci_high * 1e5 - 661.345) < 0.01);
    CHECK(ic.chi2 == doctest::Approx(ic.z * ic.z));

    const auto b0 = wald(f.beta(0), f.cov_model(0, 0));
    CHECK(std::abs(b0.ci_low * 1e5 - 2.258) < 0.01);
    CHECK(std::abs(b0.ci_high * 1e5 - 20.337) < 0.01);
}

TEST_CASE("critical value and tail probability") {
    CHECK(critical_value(0.95) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(critical_value(0.90) == doctest::Approx(1.6448536269514722).epsilon(1e-12));
    CHECK(two_sided_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(two_sided_p(0.0) == doctest::Approx(1.0));
    CHECK(two_sided_p(-2.0) == doctest::Approx(two_sided_p(2.0)));
}

TEST_CASE("robust equals model-based for saturated binomial fits (property)") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const auto t = oracle::random_interior_table(rng);
        for (Link link : {Link::identity, Link::log, Link::logit}) {
            const auto f = fit_or_throw(t, spec_of(link));
            CHECK(max_rel_diff(f.cov_model, f.cov_robust) < 1e-8);
        }
    }
}

TEST_CASE("Poisson robust variance matches the binomial model variance") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 50; ++trial) {
        const auto t = oracle::random_interior_table(rng);
        const auto bin = fit_or_throw(t, spec_of(Link::identity));
        const auto poi = fit_or_throw(t, spec_of(Link::identity, Distribution::poisson));
        const auto ols = fit_or_throw(t, spec_of(Link::identity, Distribution::binomial, Estimation::ols));
        CHECK(max_rel_diff(bin.cov_model, poi.cov_robust) < 1e-8);
        // ols robust carries the biased per-cell variance p(1-p)/n, the same sum
        CHECK(max_rel_diff(bin.cov_model, ols.cov_robust) < 1e-8);
    }
}

TEST_CASE("ols model-based covariance uses the pooled residual variance") {
    const auto t = ExposureTable::from_counts(3, 10, 5, 10, 2, 10, 8, 10);
    const auto f = fit_or_throw(t, spec_of(Link::identity, Distribution::binomial, Estimation::ols));
    double rss = 0;
    for (const auto& c : t.cells()) {
        const double p = c.proportion();
        rss += double(c.events) * (1 - p) * (1 - p) + double(c.total - c.events) * p * p;
    }
    const double sigma2 = rss / (40.0 - 4.0);
    // beta3 is a cell contrast with unit weights: var = sigma2 * sum 1/n
    CHECK(f.cov_model(3, 3) == doctest::Approx(sigma2 * 0.4).epsilon(1e-10));
}

TEST_CASE("record-level sandwich agrees with the aggregated one") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const auto t = oracle::random_interior_table(rng, 5, 200);
        const auto recs = expand_to_records(t);
        for (ModelSpec s : {spec_of(Link::identity, Distribution::poisson), spec_of(Link::log), spec_of(Link::logit)}) {
            const auto f = fit_or_throw(t, s);
            CHECK(max_rel_diff(robust_covariance(f, recs).matrix, f.cov_robust) < 1e-9);
        }
        ModelSpec reduced = spec_of(Link::logit);
        reduced.terms = Terms::main_effects;
        const auto f = fit_or_throw(t, reduced);
        CHECK(max_rel_diff(robust_covariance(f, recs).matrix, robust_covariance(f, t).matrix) < 1e-9);
    }
}

TEST_CASE("doubling every cell halves the variance") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 30; ++trial) {
        const auto t = oracle::random_interior_table(rng);
        for (Link link : {Link::identity, Link::log, Link::logit}) {
            const auto a = fit_or_throw(t, spec_of(link));
            const auto b = fit_or_throw(t.scaled(2), spec_of(link));
            CHECK(max_rel_diff(a.cov_model / 2.0, b.cov_model) < 1e-8);
            CHECK(max_rel_diff(a.cov_robust / 2.0, b.cov_robust) < 1e-8);
        }
    }
}

TEST_CASE("covariances are symmetric positive semidefinite") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 50; ++trial) {
        const auto t = oracle::random_interior_table(rng);
        for (ModelSpec s : {spec_of(Link::identity), spec_of(Link::log), spec_of(Link::logit),
                            spec_of(Link::identity, Distribution::poisson),
                            spec_of(Link::identity, Distribution::binomial, Estimation::ols)}) {
            const auto f = fit_or_throw(t, s);
            for (const auto* m : {&f.cov_model, &f.cov_robust}) {
                CHECK(((*m) - m->transpose()).cwiseAbs().maxCoeff() <= 1e-15 * m->cwiseAbs().maxCoeff());
                CHECK(is_psd(*m));
            }
        }
    }
    // one person per cell: the smallest table that still fits
    const auto tiny = ExposureTable::from_counts(0, 1, 1, 1, 1, 1, 0, 1);
    const auto f = fit_or_throw(tiny, spec_of(Link::identity, Distribution::poisson));
    CHECK(is_psd(f.cov_robust));
}

TEST_CASE("Wald edge cases") {
    const auto w0 = wald(0.0, 0.0);
    CHECK(w0.degenerate);
    CHECK(w0.p_two_sided == 1.0);
    CHECK(w0.ci_low == 0.0);
    CHECK(w0.ci_high == 0.0);

    const auto w1 = wald(0.3, 0.0);
    CHECK(w1.degenerate);
    CHECK(w1.p_two_sided == 0.0);

    CHECK_THROWS_AS(wald(1.0, -1e-3), std::invalid_argument);
    CHECK_THROWS_AS(wald(1.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(wald(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("intervals widen with the confidence level") {
    double prev_width = 0;
    for (double level : {0.5, 0.8, 0.9, 0.95, 0.99, 0.999}) {
        const auto w = wald(1.5, 0.04, level);
        CHECK(w.ci_low < w.estimate);
        CHECK(w.ci_high > w.estimate);
        CHECK(w.ci_high - w.estimate == doctest::Approx(w.estimate - w.ci_low));
        CHECK(w.ci_high - w.ci_low > prev_width);
        prev_width = w.ci_high - w.ci_low;
    }
}

TEST_CASE("contrast on a unit vector is the coefficient's own test") {
    const auto f = fit_or_throw(oracle::hammond(), spec_of(Link::identity));
    Eigen::VectorXd c = Eigen::VectorXd::Zero(4);
    c(3) = 1;
    const auto a = wald_contrast(f.beta, f.cov_model, c);
    const auto b = wald(f.beta(3), f.cov_model(3, 3));
    CHECK(a.estimate == b.estimate);
    CHECK(a.se == doctest::Approx(b.se).epsilon(1e-14));
    CHECK(a.p_two_sided == doctest::Approx(b.p_two_sided).epsilon(1e-12));
}

TEST_CASE("flavor names round trip") {
    for (auto f : {CovarianceFlavor::model_based, CovarianceFlavor::robust_independence})
        CHECK(parse_flavor(to_string(f)) == f);
    CHECK_THROWS(parse_flavor("sandwichy"));
}

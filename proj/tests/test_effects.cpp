#include "doctest.h"

#include <random>

#include "interact/effects.hpp"
#include "oracle.hpp"

using namespace interact;

namespace {

ModelSpec spec_of(Link link) {
    ModelSpec s;
    s.link = link;
    return s;
}

// RR10 = 2, RR01 = 3, RR11 = 6
ExposureTable multiplicative_table(std::int64_t n = 1000) {
    return ExposureTable::from_counts(n / 20, n, n / 10, n, 3 * n / 20, n, 3 * n / 10, n);
}

}  // namespace

TEST_CASE("IC is the identity-link product term") {
    const auto t = oracle::hammond();
    const auto f = fit_or_throw(t, spec_of(Link::identity));
    const auto ic = compute_ic(f);
    CHECK(ic.estimate == f.beta(3));
    CHECK(ic.se == std::sqrt(f.cov_model(3, 3)));

    const auto via_cells = cell_contrast(f, ContrastSpec{});
    CHECK(std::abs(via_cells.estimate - ic.estimate) < 1e-15);
    CHECK(via_cells.p_two_sided == doctest::Approx(ic.p_two_sided).epsilon(1e-9));
}

TEST_CASE("IC equals both homogeneity forms (property)") {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 100; ++trial) {
        const auto t = oracle::random_interior_table(rng);
        const auto p = oracle::props(t);
        const auto ic = compute_ic(fit_or_throw(t, spec_of(Link::identity))).estimate;
        CHECK(std::abs(ic - ((p.p11 - p.p01) - (p.p10 - p.p00))) < 1e-12);
        CHECK(std::abs(ic - ((p.p11 - p.p10) - (p.p01 - p.p00))) < 1e-12);
    }
}

TEST_CASE("RERI on the Hammond table") {
    const auto t = oracle::hammond();
    const auto lg = fit_or_throw(t, spec_of(Link::log));
    const auto r = compute_reri(lg);
    CHECK(std::abs(r.estimate - 38.7) < 0.1);
    CHECK(r.source == RatioSource::relative_risk);
    CHECK_FALSE(r.approximation);
    CHECK(r.estimate == doctest::Approx(reri_from_table(t)).epsilon(1e-6));
    CHECK(reri_from_table(t) == doctest::Approx(oracle::reri_plugin(oracle::props(t))).epsilon(1e-12));
    CHECK(r.wald.se > 0);
    CHECK(r.wald.ci_low < r.estimate);

    // rare outcome: odds ratios stand in for risk ratios closely
    const auto lt = fit_or_throw(t, spec_of(Link::logit));
    const auto ro = compute_reri(lt);
    CHECK(ro.approximation);
    CHECK(ro.source == RatioSource::odds_ratio);
    CHECK(std::abs(ro.estimate - r.estimate) / r.estimate < 0.01);
}

TEST_CASE("RERI from raw proportions is IC over p00 (property)") {
    std::mt19937_64 rng(59);
    for (int trial = 0; trial < 100; ++trial) {
        const auto t = oracle::random_interior_table(rng);
        const auto p = oracle::props(t);
        CHECK(std::abs(reri_from_table(t) - oracle::ic(p) / p.p00) < 1e-10);
    }
    CHECK_THROWS_AS(reri_from_table(ExposureTable::from_counts(0, 100, 5, 100, 5, 100, 10, 100)), DataError);
}

TEST_CASE("delta-method gradient matches finite differences") {
    auto check = [](const FitResult& f) {
        const Eigen::Vector3d b = f.beta.segment<3>(1);
        const auto g = reri_gradient(b);
        const auto fd = oracle::central_difference<3>(
            [](const std::array<double, 3>& a) { return reri_value(Eigen::Vector3d(a[0], a[1], a[2])); },
            {b(0), b(1), b(2)}, 1e-5);
        for (int k = 0; k < 3; ++k) CHECK(std::abs(g(k) - fd[static_cast<std::size_t>(k)]) <= 1e-6 * std::abs(g(k)));
        CHECK(compute_reri(f).gradient.isApprox(g, 1e-15));
    };
    check(fit_or_throw(oracle::hammond(), spec_of(Link::log)));
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 50; ++trial) check(fit_or_throw(oracle::random_interior_table(rng), spec_of(Link::log)));
}

TEST_CASE("delta-method variance is g' V g") {
    const auto f = fit_or_throw(oracle::hammond(), spec_of(Link::log));
    const auto r = compute_reri(f);
    const Eigen::Matrix3d v = f.cov_model.block<3, 3>(1, 1);
    CHECK(r.wald.se * r.wald.se == doctest::Approx(r.gradient.dot(v * r.gradient)).epsilon(1e-12));
}

TEST_CASE("exactly multiplicative and exactly additive tables") {
    const auto m = multiplicative_table();
    const auto lg = fit_or_throw(m, spec_of(Link::log));
    CHECK(std::abs(lg.beta(3)) < 1e-10);
    const auto mt = multiplicativity_test(lg);
    CHECK(mt.beta3.p_two_sided == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(mt.ratio_of_ratios == doctest::Approx(1.0).epsilon(1e-10));
    // RERI = 6 - 2 - 3 + 1
    CHECK(compute_reri(lg).estimate == doctest::Approx(2.0).epsilon(1e-10));

    const auto a = ExposureTable::from_counts(10, 100, 20, 100, 30, 100, 40, 100);
    CHECK(std::abs(compute_ic(fit_or_throw(a, spec_of(Link::identity))).estimate) < 1e-10);
    CHECK(std::abs(reri_from_table(a)) < 1e-10);
}

TEST_CASE("relabelling the exposures leaves IC and RERI unchanged") {
    std::mt19937_64 rng(67);
    for (int trial = 0; trial < 30; ++trial) {
        const auto t = oracle::random_interior_table(rng);
        const auto s = t.swapped();
        const auto a = compute_ic(fit_or_throw(t, spec_of(Link::identity)));
        const auto b = compute_ic(fit_or_throw(s, spec_of(Link::identity)));
        CHECK(a.estimate == doctest::Approx(b.estimate).epsilon(1e-10));
        CHECK(a.se == doctest::Approx(b.se).epsilon(1e-10));
        CHECK(compute_reri(fit_or_throw(t, spec_of(Link::log))).estimate ==
              doctest::Approx(compute_reri(fit_or_throw(s, spec_of(Link::log))).estimate).epsilon(1e-8));
    }
}

TEST_CASE("display scale does not touch stored estimates") {
    const auto t = oracle::hammond();
    ReportOptions a, b;
    b.scale = 1000.0;
    const auto ra = build_effect_report(t, a);
    const auto rb = build_effect_report(t, b);
    CHECK(ra.ic.estimate == rb.ic.estimate);
    CHECK(ra.ic.p_two_sided == rb.ic.p_two_sided);
    CHECK(ra.reri->estimate == rb.reri->estimate);
    CHECK(rb.scale == 1000.0);
}

TEST_CASE("effect report on the Hammond table") {
    const auto r = build_effect_report(oracle::hammond());
    CHECK(r.strategy == Strategy::binomial_identity);
    REQUIRE(r.attempts.size() == 1);
    CHECK(r.attempts[0].accepted);
    CHECK(std::abs(r.cell_risks[cell_index(1, 1)].estimate * 1e5 - 601.926) < 5e-4);
    CHECK(std::abs(r.risk_difference_x.estimate * 1e5 - 109.750) < 5e-4);
    CHECK(std::abs(r.risk_difference_z.estimate * 1e5 - 43.322) < 5e-4);
    CHECK(r.ic.estimate == doctest::Approx(r.beta3.estimate).epsilon(1e-12));
    REQUIRE(r.reri.has_value());
    CHECK(std::abs(r.reri->estimate - 38.7) < 0.1);
    REQUIRE(r.multiplicativity.size() == 2);
    CHECK(std::abs(r.multiplicativity[0].result->beta3.p_two_sided - 0.9637) < 1e-3);
    CHECK(std::abs(r.multiplicativity[1].result->beta3.p_two_sided - 0.9581) < 1e-3);

    const auto v = additivity_verdict(r);
    CHECK(v.departure_from_additivity);
    for (const auto& m : v.departure_from_multiplicativity) {
        CHECK(m.available);
        CHECK_FALSE(m.departure);
    }

    ReportOptions odds;
    odds.reri_source = RatioSource::odds_ratio;
    const auto ro = build_effect_report(oracle::hammond(), odds);
    CHECK(ro.reri->approximation);
}

TEST_CASE("verdict on a large multiplicative table") {
    const auto r = build_effect_report(multiplicative_table(100000));
    const auto v = additivity_verdict(r);
    CHECK(v.departure_from_additivity);
    CHECK_FALSE(v.departure_from_multiplicativity[0].departure);
    // risks up to 0.3 are far from rare, so the odds scale is not multiplicative
    CHECK(v.departure_from_multiplicativity[1].departure);
}

TEST_CASE("fallback ladder steps off the boundary") {
    // every exposed-to-both individual has the event: p11 = 1
    const auto t = ExposureTable::from_counts(5, 50, 10, 50, 15, 50, 50, 50);
    const auto p = oracle::props(t);

    const auto plain = build_effect_report(t);
    CHECK(plain.strategy == Strategy::binomial_identity);
    CHECK(plain.identity_fit.boundary_flag);

    ReportOptions opts;
    opts.fallback = true;
    const auto r = build_effect_report(t, opts);
    REQUIRE(r.attempts.size() == 2);
    CHECK_FALSE(r.attempts[0].accepted);
    CHECK(r.attempts[0].outcome.find("boundary") != std::string::npos);
    CHECK(r.attempts[1].accepted);
    CHECK(r.strategy == Strategy::poisson_robust);
    CHECK(r.flavor == CovarianceFlavor::robust_independence);
    CHECK(std::abs(r.cell_risks[cell_index(0, 0)].estimate - p.p00) < 1e-8);
    CHECK(std::abs(r.risk_difference_x.estimate - (p.p10 - p.p00)) < 1e-8);
    CHECK(std::abs(r.risk_difference_z.estimate - (p.p01 - p.p00)) < 1e-8);
    CHECK(std::abs(r.ic.estimate - oracle::ic(p)) < 1e-8);
    CHECK(r.ic.se > 0);
}

TEST_CASE("scale mismatches are rejected") {
    const auto t = oracle::hammond();
    CHECK_THROWS_AS(compute_ic(fit_or_throw(t, spec_of(Link::log))), SpecError);
    CHECK_THROWS_AS(cell_contrast(fit_or_throw(t, spec_of(Link::logit)), ContrastSpec{}), SpecError);
    CHECK_THROWS_AS(compute_reri(fit_or_throw(t, spec_of(Link::identity))), SpecError);
}

TEST_CASE("log-link separation leaves the report without a model RERI") {
    const auto t = ExposureTable::from_counts(0, 100, 5, 100, 5, 100, 10, 100);
    const auto r = build_effect_report(t);
    CHECK_FALSE(r.reri.has_value());
    CHECK(r.reri_failure.find("separation") != std::string::npos);
    CHECK(std::abs(r.ic.estimate - 0.0) < 1e-12);
}

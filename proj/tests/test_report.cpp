#include "doctest.h"

#include <cstdlib>

#include "interact/report.hpp"
#include "oracle.hpp"

using namespace interact;
using nlohmann::json;

namespace {

RunManifest manifest_for(const std::string& command) {
    RunManifest m;
    m.command = command;
    m.input_digest = sha256_hex("x,z,events,total\n");
    m.timestamp = "2000-01-01T00:00:00Z";
    return m;
}

}  // namespace

TEST_CASE("sha256 of known inputs") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("timestamp honours SOURCE_DATE_EPOCH") {
    ::setenv("SOURCE_DATE_EPOCH", "86400", 1);
    CHECK(run_timestamp() == "1970-01-02T00:00:00Z");
    ::unsetenv("SOURCE_DATE_EPOCH");
    CHECK(run_timestamp().size() == 20);
}

TEST_CASE("fit report round trip recomputes the interval") {
    const auto t = oracle::hammond();
    const auto f = fit_or_throw(t, ModelSpec{});
    const auto j = json::parse(fit_report(f, CovarianceFlavor::model_based, 0.95, 1e5, manifest_for("fit")).dump());
    CHECK(j["schema_version"] == kSchemaVersion);
    CHECK(j["kind"] == "fit");
    CHECK(j["manifest"]["tool_version"] == std::string(kToolVersion));
    CHECK(j["model"]["link"] == "identity");
    REQUIRE(j["coefficients"].size() == 4);
    for (const auto& c : j["coefficients"]) {
        const double est = c["estimate"], se = c["se"], level = c["level"];
        const double crit = critical_value(level);
        CHECK(double(c["ci_low"]) == doctest::Approx(est - crit * se).epsilon(1e-12));
        CHECK(double(c["ci_high"]) == doctest::Approx(est + crit * se).epsilon(1e-12));
        CHECK(double(c["p_two_sided"]) == doctest::Approx(two_sided_p(est / se)).epsilon(1e-12));
        CHECK(double(c["scaled"]["estimate"]) == doctest::Approx(est * 1e5).epsilon(1e-12));
    }
    const auto& b3 = j["coefficients"][3];
    CHECK(b3["name"] == "x:z");
    CHECK(std::abs(double(b3["scaled"]["estimate"]) - 437.557) < 5e-4);
    CHECK(std::abs(double(b3["scaled"]["ci_low"]) - 213.768) < 0.01);
    CHECK(std::abs(double(b3["scaled"]["ci_high"]) - 661.345) < 0.01);
    CHECK(j["convergence"]["converged"] == true);
    CHECK(j["cell_predictions"].size() == 4);
    CHECK(j["covariance"]["model_based"].size() == 4);
}

TEST_CASE("log-scale fits carry no scaled block") {
    ModelSpec s;
    s.link = Link::log;
    const auto f = fit_or_throw(oracle::hammond(), s);
    const auto j = fit_report(f, CovarianceFlavor::robust_independence, 0.9, 1e5, manifest_for("fit"));
    CHECK(j["inference"]["scale"].is_null());
    CHECK(j["inference"]["flavor"] == "robust_independence");
    for (const auto& c : j["coefficients"]) {
        CHECK_FALSE(c.contains("scaled"));
        CHECK(c["level"] == 0.9);
        CHECK(double(c["se"]) == doctest::Approx(double(c["se_robust"])));
    }
    CHECK_FALSE(j["cell_predictions"][0].contains("response_scaled"));
}

TEST_CASE("z and p do not depend on the display scale") {
    const WaldResult w = wald(0.004, 1e-6);
    const auto a = to_json(w, 1e5);
    const auto b = to_json(w, 1e3);
    CHECK(a["z"] == b["z"]);
    CHECK(a["p_two_sided"] == b["p_two_sided"]);
    CHECK(double(a["scaled"]["se"]) == doctest::Approx(100 * double(b["scaled"]["se"])));
    CHECK_FALSE(to_json(w).contains("scaled"));
}

TEST_CASE("degenerate Wald results serialise as valid JSON") {
    const auto j = to_json(wald(0.5, 0.0));
    CHECK(j["z"].is_null());
    CHECK(j["degenerate"] == true);
    CHECK(json::parse(j.dump()) == j);
}

TEST_CASE("convergence failure block") {
    ConvergenceFailure f{FailureReason::separation, Eigen::VectorXd::Zero(4), 12.5, "zero events in (0,0)"};
    const auto j = to_json(f);
    CHECK(j["error"] == "convergence_failure");
    CHECK(j["reason"] == "separation");
    CHECK(j["last_beta"].size() == 4);
    CHECK(j["last_deviance"] == 12.5);
}

TEST_CASE("effect report and rendered table") {
    const auto r = build_effect_report(oracle::hammond());
    const auto v = additivity_verdict(r);
    const auto j = effect_report(r, v, manifest_for("effects"));
    CHECK(j["strategy"] == "binomial_identity");
    CHECK(std::abs(double(j["ic"]["scaled"]["estimate"]) - 437.557) < 5e-4);
    CHECK(std::abs(double(j["reri"]["estimate"]) - 38.7) < 0.1);
    CHECK(j["verdict"]["departure_from_additivity"] == true);
    CHECK(j["verdict"]["departure_from_multiplicativity"]["log"] == false);
    CHECK(j["reri_failure"].is_null());

    const auto text = render_effect_table(r);
    for (const char* needle : {"601.926", "121.048", "54.619", "11.298", "109.750", "43.322", "437.557", "213.768",
                               "661.345", "2.258", "20.337"})
        CHECK_MESSAGE(text.find(needle) != std::string::npos, needle);
}

TEST_CASE("bootstrap report") {
    BootstrapResult b;
    b.config.replicates = 10;
    b.seed = 4;
    b.replicate_values = {1, 2, 3, 4, 5, 6, 7, 8};
    b.n_failed = 2;
    b.ci_low = 1;
    b.ci_high = 8;
    auto m = manifest_for("bootstrap");
    m.seed = 4;
    const auto j = bootstrap_report(b, m);
    CHECK(j["n_successful"] == 8);
    CHECK(j["n_failed"] == 2);
    CHECK(j["manifest"]["seed"] == 4);
    CHECK(j["quantile_rule"] == "nearest_rank");
}

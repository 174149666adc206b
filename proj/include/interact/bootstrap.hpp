#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "interact/table.hpp"

namespace interact {

enum class BootstrapStatistic { reri_log, reri_logit, ic };
std::string_view to_string(BootstrapStatistic s);
BootstrapStatistic parse_statistic(std::string_view s);

struct BootstrapConfig {
    int replicates = 500;
    std::uint64_t seed = 0;
    BootstrapStatistic statistic = BootstrapStatistic::reri_log;
    /// Resample within each level of Z, preserving both cohort sizes.
    bool stratify_by_z = true;
    double level = 0.95;
    /// Worker threads; 0 picks std::thread::hardware_concurrency().
    unsigned threads = 0;

    void validate() const;
};

struct BootstrapResult {
    double point_estimate = 0.0;
    /// Statistics of the successful replicates, in replicate-index order.
    std::vector<double> replicate_values;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int n_failed = 0;
    std::uint64_t seed = 0;
    BootstrapConfig config;
};

/// More than 20% of replicates failed; carries what was computed.
class BootstrapError : public std::runtime_error {
public:
    BootstrapError(const std::string& what, BootstrapResult partial)
        : std::runtime_error(what), partial_(std::move(partial)) {}
    const BootstrapResult& partial() const { return partial_; }

private:
    BootstrapResult partial_;
};

/// Nearest-rank order statistic: the ceil(q * n)-th smallest value (the
/// smallest for q = 0). Throws std::invalid_argument for empty input or q
/// outside [0, 1].
double quantile(std::span<const double> values, double q);

/// Per-replicate random stream. Replicate r draws from a Mersenne Twister
/// seeded with a SplitMix64 mix of (seed, r), so its draws do not depend on
/// how replicates are scheduled.
class ReplicateStream {
public:
    ReplicateStream(std::uint64_t seed, std::uint64_t replicate);
    /// Uniform integer in [0, bound), unbiased.
    std::uint64_t below(std::uint64_t bound);

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// One bootstrap table: draws individuals with replacement, within Z strata
/// when `stratify_by_z`. Individuals are indexed in the order
/// expand_to_records() produces, and each draw picks a uniform index.
ExposureTable resample_table(const ExposureTable& table, ReplicateStream& stream, bool stratify_by_z);

/// Record-level counterpart of resample_table: draws the same indices from
/// the (weight-1) records directly. Identical output for the same stream
/// when `records` is expand_to_records(table).
ExposureTable resample_records(std::span<const IndividualRecord> records, ReplicateStream& stream,
                               bool stratify_by_z);

/// The statistic on one table, or nullopt when the fit fails or the value is
/// not finite.
std::optional<double> evaluate_statistic(const ExposureTable& table, BootstrapStatistic statistic);

/// Percentile bootstrap. Deterministic for a given (table, config) regardless
/// of thread count.
BootstrapResult bootstrap(const ExposureTable& table, const BootstrapConfig& config);

}  // namespace interact

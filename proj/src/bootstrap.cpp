#include "interact/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "interact/effects.hpp"
#include "interact/glm.hpp"

namespace interact {

std::string_view to_string(BootstrapStatistic s) {
    switch (s) {
        case BootstrapStatistic::reri_log: return "reri_log";
        case BootstrapStatistic::reri_logit: return "reri_logit";
        case BootstrapStatistic::ic: return "ic";
    }
    return "?";
}

BootstrapStatistic parse_statistic(std::string_view s) {
    if (s == "reri_log" || s == "reri") return BootstrapStatistic::reri_log;
    if (s == "reri_logit") return BootstrapStatistic::reri_logit;
    if (s == "ic") return BootstrapStatistic::ic;
    throw std::invalid_argument("unknown bootstrap statistic '" + std::string(s) + "'");
}

void BootstrapConfig::validate() const {
    if (replicates < 2) throw std::invalid_argument("bootstrap needs at least 2 replicates");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must lie in (0, 1)");
}

double quantile(std::span<const double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile of an empty sequence");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    return sorted[rank - 1];
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

ReplicateStream::ReplicateStream(std::uint64_t seed, std::uint64_t replicate)
    : engine_(splitmix64(splitmix64(seed) ^ replicate)) {}

std::uint64_t ReplicateStream::below(std::uint64_t bound) {
    // Reject the low residue class so every value in [0, bound) is equally likely.
    const std::uint64_t threshold = (std::numeric_limits<std::uint64_t>::max() - bound + 1) % bound;
    for (;;) {
        const std::uint64_t r = engine_();
        if (r >= threshold) return r % bound;
    }
}

namespace {

// Individuals of one resampling pool grouped into runs of identical records,
// in expand_to_records() order.
struct Run {
    std::size_t cell = 0;
    bool event = false;
    std::uint64_t upper = 0;  // cumulative count through this run
};

std::vector<std::vector<Run>> make_pools(const ExposureTable& table, bool stratify_by_z) {
    std::vector<std::vector<Run>> pools(stratify_by_z ? 2 : 1);
    std::array<std::uint64_t, 2> cumulative{};
    for (std::size_t i = 0; i < kCells.size(); ++i) {
        const std::size_t pool = stratify_by_z ? static_cast<std::size_t>(kCells[i].z) : 0;
        const auto& c = table.cells()[i];
        auto& acc = cumulative[pool];
        acc += static_cast<std::uint64_t>(c.events);
        pools[pool].push_back({i, true, acc});
        acc += static_cast<std::uint64_t>(c.total - c.events);
        pools[pool].push_back({i, false, acc});
    }
    return pools;
}

}  // namespace

ExposureTable resample_table(const ExposureTable& table, ReplicateStream& stream, bool stratify_by_z) {
    std::array<CellCount, 4> cells{};
    for (const auto& pool : make_pools(table, stratify_by_z)) {
        const std::uint64_t size = pool.back().upper;
        for (std::uint64_t d = 0; d < size; ++d) {
            const std::uint64_t idx = stream.below(size);
            auto it = pool.begin();
            while (idx >= it->upper) ++it;
            auto& c = cells[it->cell];
            ++c.total;
            if (it->event) ++c.events;
        }
    }
    return ExposureTable(cells);
}

ExposureTable resample_records(std::span<const IndividualRecord> records, ReplicateStream& stream,
                               bool stratify_by_z) {
    std::vector<std::vector<const IndividualRecord*>> pools(stratify_by_z ? 2 : 1);
    for (const auto& r : records) {
        if (r.weight != 1) throw DataError("record-level resampling needs weight-1 records");
        pools[stratify_by_z ? static_cast<std::size_t>(r.z) : 0].push_back(&r);
    }
    std::array<CellCount, 4> cells{};
    for (const auto& pool : pools) {
        const auto size = static_cast<std::uint64_t>(pool.size());
        for (std::uint64_t d = 0; d < size; ++d) {
            const IndividualRecord& r = *pool[stream.below(size)];
            auto& c = cells[cell_index(r.x, r.z)];
            ++c.total;
            c.events += r.y;
        }
    }
    return ExposureTable(cells);
}

std::optional<double> evaluate_statistic(const ExposureTable& table, BootstrapStatistic statistic) {
    ModelSpec spec;
    switch (statistic) {
        case BootstrapStatistic::reri_log: spec.link = Link::log; break;
        case BootstrapStatistic::reri_logit: spec.link = Link::logit; break;
        case BootstrapStatistic::ic: spec.link = Link::identity; break;
    }
    auto outcome = fit(table, spec);
    if (std::holds_alternative<ConvergenceFailure>(outcome)) return std::nullopt;
    const auto& f = std::get<FitResult>(outcome);
    const double value = statistic == BootstrapStatistic::ic ? f.beta(3) : reri_value(f.beta.segment<3>(1));
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

BootstrapResult bootstrap(const ExposureTable& table, const BootstrapConfig& config) {
    config.validate();
    const auto point = evaluate_statistic(table, config.statistic);
    if (!point) throw DataError("bootstrap statistic is undefined on the input table");

    const auto n = static_cast<std::size_t>(config.replicates);
    std::vector<std::optional<double>> values(n);
    auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t r = first; r < n; r += stride) {
            ReplicateStream stream(config.seed, r);
            try {
                values[r] = evaluate_statistic(resample_table(table, stream, config.stratify_by_z), config.statistic);
            } catch (const DataError&) {
                values[r] = std::nullopt;  // a cell drew no individuals
            }
        }
    };
    unsigned threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    }

    BootstrapResult result;
    result.point_estimate = *point;
    result.seed = config.seed;
    result.config = config;
    for (const auto& v : values) {
        if (v)
            result.replicate_values.push_back(*v);
        else
            ++result.n_failed;
    }
    if (!result.replicate_values.empty()) {
        const double tail = (1.0 - config.level) / 2.0;
        result.ci_low = quantile(result.replicate_values, tail);
        result.ci_high = quantile(result.replicate_values, 1.0 - tail);
    }
    if (static_cast<double>(result.n_failed) > 0.2 * static_cast<double>(config.replicates)) {
        throw BootstrapError(std::to_string(result.n_failed) + " of " + std::to_string(config.replicates) +
                                 " bootstrap replicates failed (limit 20%)",
                             std::move(result));
    }
    return result;
}

}  // namespace interact

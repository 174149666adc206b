#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace interact {

/// Raised for malformed input data or violated table invariants.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CellCount {
    std::int64_t events = 0;
    std::int64_t total = 0;

    double proportion() const { return static_cast<double>(events) / static_cast<double>(total); }
    friend bool operator==(const CellCount&, const CellCount&) = default;
};

/// Binary exposure levels. `x` is the first factor (e.g. smoking), `z` the
/// second (e.g. asbestos).
struct Cell {
    int x = 0;
    int z = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Canonical cell order used everywhere a 4-vector over cells appears:
/// (0,0), (1,0), (0,1), (1,1).
inline constexpr std::array<Cell, 4> kCells{{{0, 0}, {1, 0}, {0, 1}, {1, 1}}};

inline constexpr std::size_t cell_index(int x, int z) { return static_cast<std::size_t>(2 * z + x); }

struct TableLabels {
    std::string x = "x";
    std::string z = "z";
    std::string y = "y";
};

/// Two binary exposures crossed with a binary outcome: four cells of
/// (events, total). Construction validates every cell.
class ExposureTable {
public:
    ExposureTable(std::array<CellCount, 4> cells, std::optional<TableLabels> labels = std::nullopt);

    /// Build from counts given as (x=0,z=0), (x=1,z=0), (x=0,z=1), (x=1,z=1).
    static ExposureTable from_counts(std::int64_t e00, std::int64_t n00, std::int64_t e10, std::int64_t n10,
                                     std::int64_t e01, std::int64_t n01, std::int64_t e11, std::int64_t n11);

    const CellCount& at(int x, int z) const { return cells_.at(cell_index(x, z)); }
    const std::array<CellCount, 4>& cells() const { return cells_; }
    const std::optional<TableLabels>& labels() const { return labels_; }

    double proportion(int x, int z) const { return at(x, z).proportion(); }
    std::array<double, 4> proportions() const;
    std::int64_t total_count() const;

    /// Exchange the roles of the two exposures.
    ExposureTable swapped() const;
    /// Every cell's counts multiplied by `factor`.
    ExposureTable scaled(std::int64_t factor) const;

    friend bool operator==(const ExposureTable& a, const ExposureTable& b) { return a.cells_ == b.cells_; }

private:
    std::array<CellCount, 4> cells_;
    std::optional<TableLabels> labels_;
};

struct IndividualRecord {
    int x = 0;
    int z = 0;
    int y = 0;
    std::int64_t weight = 1;
    friend bool operator==(const IndividualRecord&, const IndividualRecord&) = default;
};

struct GeneratorInput {
    std::array<double, 2> group_sizes{73763.0, 17800.0};
    /// Outcome rates per 100000, indexed 2*z + x.
    std::array<double, 4> rates_per_100k{11.3, 122.6, 58.4, 601.6};
    double smoking_prevalence = 0.28;
};

/// Deterministic synthetic cohort: each (z, x) stratum has n_z * prevalence
/// (x=1) or n_z * (1 - prevalence) (x=0) members; events and non-events are
/// rounded separately (half away from zero) and summed into the total.
ExposureTable generate_hammond_dataset(const GeneratorInput& input);

/// Sum of generated totals minus the requested cohort sizes (rounding residue).
double generator_total_discrepancy(const GeneratorInput& input, const ExposureTable& table);

enum class CsvFormat { aggregated, individual };

/// Parse an aggregated (`x,z,events,total`) or individual (`x,z,y[,weight]`)
/// CSV stream.
ExposureTable read_table(std::istream& in, CsvFormat format);

/// Inspect the header line to decide the format. Leaves the stream unchanged.
CsvFormat detect_format(const std::string& header_line);

void write_aggregated_csv(std::ostream& out, const ExposureTable& table);
void write_individual_csv(std::ostream& out, std::span<const IndividualRecord> records);

/// One weight-1 record per individual. Records are ordered by cell (canonical
/// order), events before non-events.
std::vector<IndividualRecord> expand_to_records(const ExposureTable& table);

/// Sum record weights back into cells. Throws DataError on absent cells.
ExposureTable tally_records(std::span<const IndividualRecord> records);

}  // namespace interact

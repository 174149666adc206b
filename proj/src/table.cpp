#include "interact/table.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace interact {

namespace {

std::string cell_name(int x, int z) {
    return "(x=" + std::to_string(x) + ",z=" + std::to_string(z) + ")";
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) fields.push_back(trim(item));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::int64_t parse_integer(const std::string& field, std::size_t line_no) {
    std::int64_t value = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc{} || ptr != last)
        throw DataError("malformed row at line " + std::to_string(line_no) + ": '" + field + "' is not an integer");
    return value;
}

int parse_binary(const std::string& field, const char* column, std::size_t line_no) {
    auto v = parse_integer(field, line_no);
    if (v != 0 && v != 1)
        throw DataError(std::string("non-binary code in column '") + column + "' at line " + std::to_string(line_no));
    return static_cast<int>(v);
}

void validate_cell(const CellCount& c, int x, int z) {
    if (c.total < 1) throw DataError("cell " + cell_name(x, z) + " has total < 1");
    if (c.events < 0 || c.events > c.total)
        throw DataError("cell " + cell_name(x, z) + " requires 0 <= events <= total");
}

}  // namespace

ExposureTable::ExposureTable(std::array<CellCount, 4> cells, std::optional<TableLabels> labels)
    : cells_(cells), labels_(std::move(labels)) {
    for (const auto& c : kCells) validate_cell(at(c.x, c.z), c.x, c.z);
}

ExposureTable ExposureTable::from_counts(std::int64_t e00, std::int64_t n00, std::int64_t e10, std::int64_t n10,
                                         std::int64_t e01, std::int64_t n01, std::int64_t e11, std::int64_t n11) {
    return ExposureTable({CellCount{e00, n00}, CellCount{e10, n10}, CellCount{e01, n01}, CellCount{e11, n11}});
}

std::array<double, 4> ExposureTable::proportions() const {
    std::array<double, 4> p{};
    for (std::size_t i = 0; i < 4; ++i) p[i] = cells_[i].proportion();
    return p;
}

std::int64_t ExposureTable::total_count() const {
    std::int64_t n = 0;
    for (const auto& c : cells_) n += c.total;
    return n;
}

ExposureTable ExposureTable::swapped() const {
    std::optional<TableLabels> labels;
    if (labels_) labels = TableLabels{labels_->z, labels_->x, labels_->y};
    return ExposureTable({at(0, 0), at(0, 1), at(1, 0), at(1, 1)}, labels);
}

ExposureTable ExposureTable::scaled(std::int64_t factor) const {
    auto cells = cells_;
    for (auto& c : cells) {
        c.events *= factor;
        c.total *= factor;
    }
    return ExposureTable(cells, labels_);
}

ExposureTable generate_hammond_dataset(const GeneratorInput& input) {
    for (double n : input.group_sizes)
        if (!(n >= 1.0)) throw DataError("group sizes must be >= 1");
    for (double r : input.rates_per_100k)
        if (!(r >= 0.0 && r <= 100000.0)) throw DataError("rates per 100000 must lie in [0, 100000]");
    const double prev = input.smoking_prevalence;
    if (!(prev > 0.0 && prev < 1.0)) throw DataError("smoking prevalence must lie in (0, 1)");

    std::array<CellCount, 4> cells{};
    for (int z = 0; z <= 1; ++z) {
        for (int x = 0; x <= 1; ++x) {
            const double risk = input.rates_per_100k[cell_index(x, z)] / 100000.0;
            const double stratum = input.group_sizes[z] * (x == 1 ? prev : 1.0 - prev);
            const auto events = static_cast<std::int64_t>(std::round(stratum * risk));
            const auto non_events = static_cast<std::int64_t>(std::round(stratum * (1.0 - risk)));
            cells[cell_index(x, z)] = CellCount{events, events + non_events};
        }
    }
    return ExposureTable(cells, TableLabels{"smk", "asbestos", "lungcadeath"});
}

double generator_total_discrepancy(const GeneratorInput& input, const ExposureTable& table) {
    return static_cast<double>(table.total_count()) - (input.group_sizes[0] + input.group_sizes[1]);
}

CsvFormat detect_format(const std::string& header_line) {
    auto cols = split_row(trim(header_line));
    for (const auto& c : cols) {
        if (c == "events" || c == "total") return CsvFormat::aggregated;
        if (c == "y") return CsvFormat::individual;
    }
    throw DataError("unrecognized CSV header: " + header_line);
}

ExposureTable read_table(std::istream& in, CsvFormat format) {
    std::string line;
    std::size_t line_no = 0;
    std::string header;
    while (std::getline(in, line)) {
        ++line_no;
        header = trim(line);
        if (!header.empty()) break;
    }
    if (header.empty()) throw DataError("empty CSV input");
    if (header.size() >= 3 && header.compare(0, 3, "\xEF\xBB\xBF") == 0) header.erase(0, 3);

    const auto cols = split_row(header);
    auto column = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < cols.size(); ++i)
            if (cols[i] == name) return i;
        if (required) throw DataError("CSV header lacks column '" + name + "'");
        return std::nullopt;
    };

    std::array<CellCount, 4> cells{};
    std::array<bool, 4> seen{};
    const auto ix = *column("x", true);
    const auto iz = *column("z", true);

    if (format == CsvFormat::aggregated) {
        const auto ie = *column("events", true);
        const auto in_ = *column("total", true);
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            auto f = split_row(line);
            if (f.size() != cols.size())
                throw DataError("malformed row at line " + std::to_string(line_no) + ": expected " +
                                std::to_string(cols.size()) + " fields");
            const int x = parse_binary(f[ix], "x", line_no);
            const int z = parse_binary(f[iz], "z", line_no);
            const auto k = cell_index(x, z);
            if (seen[k]) throw DataError("duplicate cell " + cell_name(x, z) + " at line " + std::to_string(line_no));
            seen[k] = true;
            cells[k] = CellCount{parse_integer(f[ie], line_no), parse_integer(f[in_], line_no)};
            if (cells[k].total < 1 || cells[k].events < 0 || cells[k].events > cells[k].total)
                throw DataError("malformed row at line " + std::to_string(line_no) +
                                ": requires 0 <= events <= total and total >= 1");
        }
    } else {
        const auto iy = *column("y", true);
        const auto iw = column("weight", false);
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            auto f = split_row(line);
            if (f.size() != cols.size())
                throw DataError("malformed row at line " + std::to_string(line_no) + ": expected " +
                                std::to_string(cols.size()) + " fields");
            const int x = parse_binary(f[ix], "x", line_no);
            const int z = parse_binary(f[iz], "z", line_no);
            const int y = parse_binary(f[iy], "y", line_no);
            std::int64_t w = 1;
            if (iw) {
                w = parse_integer(f[*iw], line_no);
                if (w < 1) throw DataError("malformed row at line " + std::to_string(line_no) + ": weight must be >= 1");
            }
            const auto k = cell_index(x, z);
            seen[k] = true;
            cells[k].total += w;
            cells[k].events += y * w;
        }
    }

    for (const auto& c : kCells)
        if (!seen[cell_index(c.x, c.z)]) throw DataError("absent cell " + cell_name(c.x, c.z));
    return ExposureTable(cells);
}

void write_aggregated_csv(std::ostream& out, const ExposureTable& table) {
    out << "x,z,events,total\n";
    for (const auto& c : kCells) {
        const auto& cc = table.at(c.x, c.z);
        out << c.x << ',' << c.z << ',' << cc.events << ',' << cc.total << '\n';
    }
}

void write_individual_csv(std::ostream& out, std::span<const IndividualRecord> records) {
    out << "x,z,y,weight\n";
    for (const auto& r : records) out << r.x << ',' << r.z << ',' << r.y << ',' << r.weight << '\n';
}

std::vector<IndividualRecord> expand_to_records(const ExposureTable& table) {
    std::vector<IndividualRecord> records;
    records.reserve(static_cast<std::size_t>(table.total_count()));
    for (const auto& c : kCells) {
        const auto& cc = table.at(c.x, c.z);
        for (std::int64_t i = 0; i < cc.events; ++i) records.push_back({c.x, c.z, 1, 1});
        for (std::int64_t i = cc.events; i < cc.total; ++i) records.push_back({c.x, c.z, 0, 1});
    }
    return records;
}

ExposureTable tally_records(std::span<const IndividualRecord> records) {
    std::array<CellCount, 4> cells{};
    for (const auto& r : records) {
        if ((r.x != 0 && r.x != 1) || (r.z != 0 && r.z != 1) || (r.y != 0 && r.y != 1))
            throw DataError("non-binary code in record");
        if (r.weight < 1) throw DataError("record weight must be >= 1");
        auto& c = cells[cell_index(r.x, r.z)];
        c.total += r.weight;
        c.events += r.y * r.weight;
    }
    for (const auto& c : kCells)
        if (cells[cell_index(c.x, c.z)].total == 0) throw DataError("absent cell " + cell_name(c.x, c.z));
    return ExposureTable(cells);
}

}  // namespace interact

#include "core/table.hpp"

#include <algorithm>
#include <cstdio>
#include <fmt/format.h>
#include <sstream>

namespace scalimit {

void ExperimentTable::add_row(std::vector<double> row) {
    if (row.size() != columns_.size())
        throw config_error(fmt::format("table row has {} cells, expected {}", row.size(), columns_.size()));
    rows_.push_back(std::move(row));
}

std::size_t ExperimentTable::col_index(const std::string& name) const {
    auto it = std::find(columns_.begin(), columns_.end(), name);
    if (it == columns_.end()) throw config_error("unknown table column: " + name);
    return static_cast<std::size_t>(it - columns_.begin());
}

bool ExperimentTable::has_column(const std::string& name) const {
    return std::find(columns_.begin(), columns_.end(), name) != columns_.end();
}

double ExperimentTable::at(std::size_t row, const std::string& column) const {
    if (row >= rows_.size()) throw config_error("table row out of range");
    return rows_[row][col_index(column)];
}

std::vector<double> ExperimentTable::column(const std::string& name) const {
    std::size_t c = col_index(name);
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(r[c]);
    return out;
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void ExperimentTable::write_csv(std::ostream& os) const {
    for (std::size_t c = 0; c < columns_.size(); ++c)
        os << (c ? "," : "") << columns_[c];
    os << "\r\n";
    for (const auto& row : rows_) {
        for (std::size_t c = 0; c < row.size(); ++c)
            os << (c ? "," : "") << format_value(row[c]);
        os << "\r\n";
    }
}

std::string ExperimentTable::to_csv() const {
    std::ostringstream os;
    write_csv(os);
    return os.str();
}

std::string content_digest(const std::string& content) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : content) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return fmt::format("{:016x}", h);
}

}  // namespace scalimit

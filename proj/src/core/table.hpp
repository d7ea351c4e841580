#ifndef SCALIMIT_CORE_TABLE_HPP
#define SCALIMIT_CORE_TABLE_HPP

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "core/errors.hpp"

namespace scalimit {

// Rectangular result table.  Stochastic columns carry a companion "<name>_se"
// column; deterministic columns do not.  CSV output is RFC 4180 with '.'
// decimal separator and 17 significant digits.
class ExperimentTable {
  public:
    ExperimentTable() = default;
    explicit ExperimentTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    const std::vector<std::string>& columns() const { return columns_; }
    std::size_t n_rows() const { return rows_.size(); }

    void add_row(std::vector<double> row);
    double at(std::size_t row, const std::string& column) const;
    std::vector<double> column(const std::string& name) const;
    bool has_column(const std::string& name) const;

    void set_provenance(std::string digest) { provenance_ = std::move(digest); }
    const std::string& provenance() const { return provenance_; }

    void write_csv(std::ostream& os) const;
    std::string to_csv() const;

  private:
    std::size_t col_index(const std::string& name) const;

    std::vector<std::string> columns_;
    std::vector<std::vector<double>> rows_;
    std::string provenance_;
};

// Formats a double the way every CSV artifact does (shortest 17-digit form).
std::string format_value(double v);

// FNV-1a content digest used for config/artifact provenance.
std::string content_digest(const std::string& content);

}  // namespace scalimit

#endif

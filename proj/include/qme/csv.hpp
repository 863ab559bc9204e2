#pragma once

#include <string>
#include <vector>

#include "qme/errors.hpp"

namespace qme {

/// Column-oriented CSV table: header row, comma separation, UNIX newlines,
/// doubles at 17 significant digits so emitted values round-trip bit-exactly.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
    const std::vector<double>& column(const std::string& name) const;
    bool has_column(const std::string& name) const;
};

std::string format_csv(const CsvTable& table);
void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

}  // namespace qme

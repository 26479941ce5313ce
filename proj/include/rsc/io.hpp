#pragma once

// CSV tables with "# key: value" metadata lines, conversions between tables
// and domain results, SVG rendering from tables, and file helpers.

#include "rsc/analysis.hpp"
#include "rsc/cooling.hpp"
#include "rsc/detection.hpp"
#include "rsc/spectroscopy.hpp"

#include <string>
#include <utility>
#include <vector>

namespace rsc {

struct CsvTable {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::string meta(const std::string& key) const; // empty if absent
    std::size_t column(const std::string& name) const; // throws DomainError if absent
    bool has_column(const std::string& name) const;
};

// Shortest text that reads back to the same double.
std::string format_number(double value);

std::string write_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);

CsvTable histogram_table(const std::vector<HistogramRow>& rows, const DetectionConfig& config);
CsvTable spectrum_table(const std::vector<SpectrumPoint>& points);
CsvTable scan_table(const std::vector<ScanRow>& rows);
CsvTable residual_table(const std::vector<SpectrumPoint>& carrier, const LorentzianFit& fit);

std::vector<SpectrumPoint> spectrum_from_table(const CsvTable& table);

// Picks the plot type from the table's columns.
std::string render_svg(const CsvTable& table);

std::string sha256_hex(const std::string& bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

} // namespace rsc

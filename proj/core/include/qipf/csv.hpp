#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace qipf::io {

/// Headered numeric table (RFC 4180 quoting in the header, LF line ends on write).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column_index(std::string_view name) const;
    std::vector<double> column(std::size_t index) const;
};

CsvTable parse_csv(std::string_view text, const std::string& source = "csv");
CsvTable read_csv(const std::filesystem::path& path);
std::string format_csv(const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Shortest decimal text that round-trips to the same double.
std::string format_number(double v);

/// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace qipf::io

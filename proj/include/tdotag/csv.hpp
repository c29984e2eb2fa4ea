#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tdotag {

/// Minimal comma-separated table: one header row, no quoting.
/// Blank lines and lines starting with '#' are skipped.
class CsvTable {
public:
    static CsvTable read(const std::filesystem::path& path);
    static CsvTable parse(std::string_view text, std::string source = "<memory>");

    const std::vector<std::string>& header() const { return header_; }
    std::size_t rows() const { return rows_.size(); }
    std::size_t column(std::string_view name) const;
    bool has_column(std::string_view name) const;

    const std::string& text(std::size_t row, std::string_view col) const;
    double number(std::size_t row, std::string_view col) const;

    /// Header must start with exactly these columns (extra columns allowed).
    void require(std::initializer_list<std::string_view> cols) const;

private:
    std::string source_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

std::vector<std::string> split_csv_line(std::string_view line);

/// Shortest round-trippable text for a double.
std::string format_number(double v);

} // namespace tdotag

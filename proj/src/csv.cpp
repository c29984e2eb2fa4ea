#include "tdotag/csv.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tdotag/errors.hpp"

namespace tdotag {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

CsvTable CsvTable::read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

CsvTable CsvTable::parse(std::string_view text, std::string source) {
    CsvTable t;
    t.source_ = std::move(source);
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const auto line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        if (line.empty() || line.front() == '#') continue;
        auto fields = split_csv_line(line);
        if (t.header_.empty()) {
            t.header_ = std::move(fields);
        } else {
            if (fields.size() != t.header_.size())
                throw InputError(t.source_ + ": row has " + std::to_string(fields.size()) +
                                 " fields, header has " + std::to_string(t.header_.size()));
            t.rows_.push_back(std::move(fields));
        }
    }
    if (t.header_.empty()) throw InputError(t.source_ + ": missing header");
    return t;
}

bool CsvTable::has_column(std::string_view name) const {
    for (const auto& h : header_)
        if (h == name) return true;
    return false;
}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
        if (header_[i] == name) return i;
    throw InputError(source_ + ": missing column '" + std::string(name) + "'");
}

const std::string& CsvTable::text(std::size_t row, std::string_view col) const {
    return rows_.at(row).at(column(col));
}

double CsvTable::number(std::size_t row, std::string_view col) const {
    const std::string& s = text(row, col);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
        throw InputError(source_ + ": row " + std::to_string(row + 1) + " column '" + std::string(col) +
                         "' is not a number: '" + s + "'");
    return v;
}

void CsvTable::require(std::initializer_list<std::string_view> cols) const {
    std::size_t i = 0;
    for (auto c : cols) {
        if (i >= header_.size() || header_[i] != c) {
            std::string want;
            for (auto w : cols) want += (want.empty() ? "" : ",") + std::string(w);
            throw InputError(source_ + ": expected header starting with '" + want + "'");
        }
        ++i;
    }
}

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace tdotag

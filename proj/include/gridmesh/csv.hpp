#pragma once

// CSV input/output: `time_s,value` series files and multi-column trace
// tables. Writers emit full precision (%.17g), UTF-8, LF line endings, and
// go through a temp-file rename so readers never observe partial files.

#include "gridmesh/timeseries.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridmesh::csv {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(strip(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(strip(cur));
    return cells;
}

inline double parse_number(const std::string& cell, const std::string& file, int line_no) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || errno == ERANGE) {
        throw ParseError(file + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
    }
    return v;
}

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

// Writes content to `path` atomically (temp file in the same directory,
// then rename).
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline TimeSeriesProfile read_series(const std::filesystem::path& path, Interp interp) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open series file: " + path.string());
    std::string file = path.string();
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    TimeSeriesProfile profile;
    profile.interp = interp;
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = detail::strip(line);
        if (s.empty() || s.front() == '#') continue;
        auto cells = detail::split_line(s);
        if (!header_seen) {
            if (cells.size() != 2 || cells[0] != "time_s" || cells[1] != "value") {
                throw ParseError(file + ":" + std::to_string(line_no) +
                                 ": expected header 'time_s,value'");
            }
            header_seen = true;
            continue;
        }
        if (cells.size() != 2) {
            throw ParseError(file + ":" + std::to_string(line_no) + ": expected 2 columns, got " +
                             std::to_string(cells.size()));
        }
        double t = detail::parse_number(cells[0], file, line_no);
        double v = detail::parse_number(cells[1], file, line_no);
        if (!profile.times.empty() && t <= profile.times.back()) {
            throw ParseError(file + ":" + std::to_string(line_no) +
                             ": times must be strictly increasing");
        }
        profile.times.push_back(t);
        profile.values.push_back(v);
    }
    if (profile.times.empty()) {
        throw ParseError(file + ": series has no samples");
    }
    return profile;
}

inline void write_series(const std::filesystem::path& path, const TimeSeriesProfile& profile) {
    std::ostringstream out;
    out << "time_s,value\n";
    for (std::size_t i = 0; i < profile.times.size(); ++i) {
        out << detail::format_number(profile.times[i]) << ','
            << detail::format_number(profile.values[i]) << '\n';
    }
    write_file_atomic(path, out.str());
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open: " + path.string());
    std::string file = path.string();
    Table table;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = detail::strip(line);
        if (s.empty()) continue;
        auto cells = detail::split_line(s);
        if (table.header.empty()) {
            table.header = cells;
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw ParseError(file + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(table.header.size()) + " columns, got " +
                             std::to_string(cells.size()));
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& cell : cells) row.push_back(detail::parse_number(cell, file, line_no));
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty()) throw ParseError(file + ": empty file");
    return table;
}

inline void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                        const std::vector<std::vector<double>>& rows) {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i > 0) out << ',';
        out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out << ',';
            out << detail::format_number(row[i]);
        }
        out << '\n';
    }
    write_file_atomic(path, out.str());
}

} // namespace gridmesh::csv

#pragma once

// Time-indexed record of every published quantity. A TraceSet holds one
// channel per quantity; each channel carries a fixed element list (blocks,
// roads, buses, lines) and one row per simulation step. Channels round-trip
// through `trace_<quantity>.csv` files at full precision.

#include "gridmesh/csv.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridmesh {

struct TraceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TraceChannel {
    std::vector<std::string> elements;
    std::vector<std::vector<double>> rows;  // rows[step][element]

    bool operator==(const TraceChannel&) const = default;

    int element_index(const std::string& name) const {
        for (std::size_t i = 0; i < elements.size(); ++i) {
            if (elements[i] == name) return static_cast<int>(i);
        }
        return -1;
    }

    std::vector<double> column(const std::string& name) const {
        int idx = element_index(name);
        if (idx < 0) throw TraceError("trace: unknown element '" + name + "'");
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& row : rows) out.push_back(row[static_cast<std::size_t>(idx)]);
        return out;
    }
};

struct TraceSet {
    std::vector<double> times_s;
    std::map<std::string, TraceChannel> channels;

    bool operator==(const TraceSet&) const = default;

    const TraceChannel& channel(const std::string& quantity) const {
        auto it = channels.find(quantity);
        if (it == channels.end()) throw TraceError("trace: unknown quantity '" + quantity + "'");
        return it->second;
    }
    bool has(const std::string& quantity) const { return channels.contains(quantity); }
};

inline void write_trace_csv(const TraceSet& trace, const std::string& quantity,
                            const std::filesystem::path& path) {
    const TraceChannel& ch = trace.channel(quantity);
    std::vector<std::string> header{"time_s"};
    header.insert(header.end(), ch.elements.begin(), ch.elements.end());
    std::vector<std::vector<double>> rows;
    rows.reserve(trace.times_s.size());
    for (std::size_t i = 0; i < trace.times_s.size(); ++i) {
        std::vector<double> row{trace.times_s[i]};
        row.insert(row.end(), ch.rows[i].begin(), ch.rows[i].end());
        rows.push_back(std::move(row));
    }
    csv::write_table(path, header, rows);
}

// Reads one `trace_<quantity>.csv` back into (times, channel).
inline std::pair<std::vector<double>, TraceChannel> read_trace_csv(
    const std::filesystem::path& path) {
    csv::Table table = csv::read_table(path);
    if (table.header.empty() || table.header[0] != "time_s") {
        throw TraceError(path.string() + ": first column must be time_s");
    }
    TraceChannel ch;
    ch.elements.assign(table.header.begin() + 1, table.header.end());
    std::vector<double> times;
    times.reserve(table.rows.size());
    for (auto& row : table.rows) {
        times.push_back(row[0]);
        ch.rows.emplace_back(row.begin() + 1, row.end());
    }
    return {std::move(times), std::move(ch)};
}

struct DeviationReport {
    std::string quantity;
    std::vector<double> times_s;
    std::vector<std::string> elements;
    std::vector<std::vector<double>> deviation_pct;  // 100*|b-a|/max(|a|, eps)
    double mean_pct = 0.0;
    double peak_pct = 0.0;
    double peak_time_s = 0.0;
    std::string peak_element;
};

// Per-step relative deviation of trace b against reference trace a.
inline DeviationReport compare_channels(const std::vector<double>& times_a,
                                        const TraceChannel& a,
                                        const std::vector<double>& times_b,
                                        const TraceChannel& b, const std::string& quantity) {
    if (times_a.size() != times_b.size()) {
        throw TraceError("compare: traces have different lengths (" +
                         std::to_string(times_a.size()) + " vs " + std::to_string(times_b.size()) +
                         ")");
    }
    for (std::size_t i = 0; i < times_a.size(); ++i) {
        if (times_a[i] != times_b[i]) throw TraceError("compare: time grids differ");
    }
    if (a.elements != b.elements) throw TraceError("compare: element sets differ");

    DeviationReport report;
    report.quantity = quantity;
    report.times_s = times_a;
    report.elements = a.elements;
    report.deviation_pct.resize(times_a.size(),
                                std::vector<double>(a.elements.size(), 0.0));
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < times_a.size(); ++i) {
        for (std::size_t e = 0; e < a.elements.size(); ++e) {
            double ref = a.rows[i][e];
            double val = b.rows[i][e];
            double dev = (ref == val) ? 0.0
                                      : 100.0 * std::abs(val - ref) / std::max(std::abs(ref), 1e-12);
            report.deviation_pct[i][e] = dev;
            sum += dev;
            ++count;
            if (dev > report.peak_pct) {
                report.peak_pct = dev;
                report.peak_time_s = times_a[i];
                report.peak_element = a.elements[e];
            }
        }
    }
    report.mean_pct = count > 0 ? sum / static_cast<double>(count) : 0.0;
    if (report.peak_element.empty() && !a.elements.empty()) {
        report.peak_element = a.elements[0];
        report.peak_time_s = times_a.empty() ? 0.0 : times_a[0];
    }
    return report;
}

inline DeviationReport compare(const TraceSet& a, const TraceSet& b, const std::string& quantity) {
    return compare_channels(a.times_s, a.channel(quantity), b.times_s, b.channel(quantity),
                            quantity);
}

inline void write_deviation_csv(const DeviationReport& report, const std::filesystem::path& path) {
    std::vector<std::string> header{"time_s"};
    for (const auto& e : report.elements) header.push_back(e + "_deviation_pct");
    std::vector<std::vector<double>> rows;
    rows.reserve(report.times_s.size());
    for (std::size_t i = 0; i < report.times_s.size(); ++i) {
        std::vector<double> row{report.times_s[i]};
        row.insert(row.end(), report.deviation_pct[i].begin(), report.deviation_pct[i].end());
        rows.push_back(std::move(row));
    }
    csv::write_table(path, header, rows);
}

} // namespace gridmesh

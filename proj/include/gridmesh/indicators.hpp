#pragma once

// Performance indicators computed from a completed trace: peak-valley load
// ratio and load cover factor for the energy balance, voltage-band and
// line-rating violation indices for the network, and per-road congestion
// summaries for the transport and communication systems.

#include "gridmesh/trace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridmesh {

struct IndicatorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Peak-valley load ratio of the grid draw, in percent.
inline double pvlr_pct(std::span<const double> grid_power_w) {
    if (grid_power_w.empty()) throw IndicatorError("pvlr: empty series");
    double p_max = *std::max_element(grid_power_w.begin(), grid_power_w.end());
    double p_min = *std::min_element(grid_power_w.begin(), grid_power_w.end());
    if (p_max == 0.0) throw IndicatorError("pvlr: peak grid power is zero");
    return 100.0 * (p_max - p_min) / p_max;
}

namespace indicator_detail {

// Trapezoidal weight sum; the grid spacing cancels in every ratio we take.
inline double integral_weighted(std::span<const double> values) {
    if (values.size() == 1) return values[0];
    double total = 0.5 * (values.front() + values.back());
    for (std::size_t i = 1; i + 1 < values.size(); ++i) total += values[i];
    return total;
}

} // namespace indicator_detail

// Share of demand energy covered by renewable generation, in percent.
inline double lcf_pct(std::span<const double> renewable_w, std::span<const double> demand_w) {
    if (renewable_w.empty() || demand_w.empty()) throw IndicatorError("lcf: empty series");
    if (renewable_w.size() != demand_w.size()) {
        throw IndicatorError("lcf: series do not share a grid");
    }
    double demand = indicator_detail::integral_weighted(demand_w);
    if (demand <= 0.0) throw IndicatorError("lcf: total demand energy is zero");
    return 100.0 * indicator_detail::integral_weighted(renewable_w) / demand;
}

// Mean voltage-band violation over all (bus, step) samples; voltages in
// per-unit, band [0.95, 1.05].
inline double si_b(const std::vector<std::vector<double>>& voltage_pu_rows) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& row : voltage_pu_rows) {
        for (double v : row) {
            if (v > 1.05) sum += v - 1.05;
            else if (v < 0.95) sum += 0.95 - v;
            ++count;
        }
    }
    if (count == 0) throw IndicatorError("si_b: empty input");
    return sum / static_cast<double>(count);
}

// Mean line-rating violation over all (line, step) samples, in per-unit of
// each line's limit so the index is scale-free.
inline double si_l(const std::vector<std::vector<double>>& line_power_rows,
                   std::span<const double> limits_w) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& row : line_power_rows) {
        if (row.size() != limits_w.size()) throw IndicatorError("si_l: limit count mismatch");
        for (std::size_t l = 0; l < row.size(); ++l) {
            if (limits_w[l] <= 0.0) throw IndicatorError("si_l: nonpositive line limit");
            double loading = std::abs(row[l]) / limits_w[l];
            if (loading > 1.0) sum += loading - 1.0;
            ++count;
        }
    }
    if (count == 0) throw IndicatorError("si_l: empty input");
    return sum / static_cast<double>(count);
}

struct RoadCongestion {
    std::string road;
    double mean_travel_time_s = 0.0;
    double peak_travel_time_s = 0.0;
    double peak_travel_time_at_s = 0.0;
    double mean_packet_loss = 0.0;
    double peak_packet_loss = 0.0;
    double peak_packet_loss_at_s = 0.0;
};

// Per-road mean/peak travel time and packet loss, peaks timestamped.
inline std::vector<RoadCongestion> congestion(const TraceSet& trace) {
    if (trace.times_s.empty()) throw IndicatorError("congestion: empty trace");
    const TraceChannel& travel = trace.channel("travel_time");
    const TraceChannel& loss = trace.channel("packet_loss");
    std::vector<RoadCongestion> out;
    for (std::size_t e = 0; e < travel.elements.size(); ++e) {
        RoadCongestion c;
        c.road = travel.elements[e];
        double travel_sum = 0.0, loss_sum = 0.0;
        c.peak_travel_time_s = -1.0;
        c.peak_packet_loss = -1.0;
        for (std::size_t i = 0; i < trace.times_s.size(); ++i) {
            double t_travel = travel.rows[i][e];
            double gamma = loss.rows[i][e];
            travel_sum += t_travel;
            loss_sum += gamma;
            if (t_travel > c.peak_travel_time_s) {
                c.peak_travel_time_s = t_travel;
                c.peak_travel_time_at_s = trace.times_s[i];
            }
            if (gamma > c.peak_packet_loss) {
                c.peak_packet_loss = gamma;
                c.peak_packet_loss_at_s = trace.times_s[i];
            }
        }
        c.mean_travel_time_s = travel_sum / static_cast<double>(trace.times_s.size());
        c.mean_packet_loss = loss_sum / static_cast<double>(trace.times_s.size());
        out.push_back(std::move(c));
    }
    return out;
}

struct IndicatorReport {
    double pvlr_pct = 0.0;
    double lcf_pct = 0.0;
    std::map<std::string, double> si_b;  // per block plus "community"
    std::map<std::string, double> si_l;
    std::vector<RoadCongestion> roads;
};

namespace indicator_detail {

inline std::string element_scope(const std::string& element) {
    std::size_t pos = element.find(':');
    return pos == std::string::npos ? std::string("community") : element.substr(0, pos);
}

} // namespace indicator_detail

// Full report over a trace. Line limits are aligned with the line_power
// channel's element order.
inline IndicatorReport compute_indicators(const TraceSet& trace,
                                          std::span<const double> line_limits_w) {
    namespace id = indicator_detail;
    if (trace.times_s.empty()) throw IndicatorError("indicators: empty trace");
    IndicatorReport report;

    const TraceChannel& grid = trace.channel("grid_power");
    std::vector<double> community_grid = grid.column("community");
    report.pvlr_pct = pvlr_pct(community_grid);

    const TraceChannel& pv = trace.channel("pv_power");
    const TraceChannel& wind = trace.channel("wind_power");
    std::vector<double> renewable(trace.times_s.size(), 0.0);
    std::vector<double> demand(trace.times_s.size(), 0.0);
    for (const char* q : {"building_load", "ev_power", "comm_power", "general_load"}) {
        const TraceChannel& ch = trace.channel(q);
        for (std::size_t i = 0; i < trace.times_s.size(); ++i) {
            for (double v : ch.rows[i]) demand[i] += v;
        }
    }
    for (std::size_t i = 0; i < trace.times_s.size(); ++i) {
        for (double v : pv.rows[i]) renewable[i] += v;
        for (double v : wind.rows[i]) renewable[i] += v;
    }
    report.lcf_pct = lcf_pct(renewable, demand);

    // Voltage index, community-wide and per block (bus names are
    // "<block>:<bus>"; the grid bus counts toward the community only).
    const TraceChannel& voltage = trace.channel("bus_voltage_pu");
    report.si_b["community"] = si_b(voltage.rows);
    std::map<std::string, std::vector<std::size_t>> buses_by_block;
    for (std::size_t e = 0; e < voltage.elements.size(); ++e) {
        std::string scope = id::element_scope(voltage.elements[e]);
        if (scope != "community") buses_by_block[scope].push_back(e);
    }
    for (const auto& [block, indices] : buses_by_block) {
        std::vector<std::vector<double>> rows;
        rows.reserve(voltage.rows.size());
        for (const auto& row : voltage.rows) {
            std::vector<double> sub;
            sub.reserve(indices.size());
            for (std::size_t e : indices) sub.push_back(row[e]);
            rows.push_back(std::move(sub));
        }
        report.si_b[block] = si_b(rows);
    }

    // Line index, likewise split by name scope.
    const TraceChannel& line_power = trace.channel("line_power");
    if (line_limits_w.size() != line_power.elements.size()) {
        throw IndicatorError("indicators: line limit count mismatch");
    }
    if (!line_power.elements.empty()) {
        report.si_l["community"] = si_l(line_power.rows, line_limits_w);
        std::map<std::string, std::vector<std::size_t>> lines_by_scope;
        for (std::size_t e = 0; e < line_power.elements.size(); ++e) {
            lines_by_scope[id::element_scope(line_power.elements[e])].push_back(e);
        }
        for (const auto& [scope, indices] : lines_by_scope) {
            if (scope == "community") continue;
            std::vector<std::vector<double>> rows;
            std::vector<double> limits;
            for (std::size_t e : indices) limits.push_back(line_limits_w[e]);
            rows.reserve(line_power.rows.size());
            for (const auto& row : line_power.rows) {
                std::vector<double> sub;
                sub.reserve(indices.size());
                for (std::size_t e : indices) sub.push_back(row[e]);
                rows.push_back(std::move(sub));
            }
            report.si_l[scope] = si_l(rows, limits);
        }
    }

    report.roads = congestion(trace);
    return report;
}

} // namespace gridmesh

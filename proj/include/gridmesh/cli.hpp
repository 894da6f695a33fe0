#pragma once

// Command implementations behind the gridmesh CLI: run a scenario in a
// coupling mode and emit traces plus indicators, compare a quantity across
// two trace directories, and export plot-ready long-format data. All trace
// computation happens before any file is written, and every file goes
// through a temp-then-rename, so failed commands leave no partial traces.

#include "gridmesh/engine.hpp"
#include "gridmesh/indicators.hpp"
#include "gridmesh/version.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace gridmesh::cli {

namespace detail {

class Fnv1a64 {
public:
    void feed(const void* data, std::size_t size) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            hash_ ^= bytes[i];
            hash_ *= 0x100000001b3ULL;
        }
    }
    void feed(double v) { feed(&v, sizeof v); }
    void feed(const std::string& s) {
        feed(s.data(), s.size());
        feed("\0", 1);
    }
    void feed(const TimeSeriesProfile& p) {
        for (double t : p.times) feed(t);
        for (double v : p.values) feed(v);
        feed(p.interp == Interp::linear ? "L" : "S", 1);
    }
    std::string hex() const {
        std::ostringstream out;
        out << std::hex << std::setfill('0') << std::setw(16) << hash_;
        return out.str();
    }

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

// Content digest of a loaded configuration, independent of file layout.
inline std::string scenario_digest(const ScenarioConfig& cfg) {
    Fnv1a64 h;
    h.feed(cfg.sim_start_s);
    h.feed(cfg.sim_end_s);
    h.feed(cfg.dt_s);
    h.feed(cfg.coupling_tolerance);
    h.feed(static_cast<double>(cfg.coupling_max_iters));
    h.feed(cfg.nominal_voltage_v);
    h.feed(cfg.power_base_w);
    for (const auto* p :
         {&cfg.weather.direct_normal_w_m2, &cfg.weather.sky_diffuse_w_m2,
          &cfg.weather.ground_diffuse_w_m2, &cfg.weather.wind_speed_mps,
          &cfg.weather.cos_incidence}) {
        h.feed(*p);
    }
    for (const auto& block : cfg.blocks) {
        h.feed(block.name);
        for (const auto& a : block.pv.arrays) {
            h.feed(a.area_m2);
            h.feed(a.active_fraction);
            h.feed(a.efficiency);
            h.feed(a.inverter_efficiency);
        }
        h.feed(static_cast<double>(block.wind.count));
        h.feed(block.wind.scale);
        h.feed(block.wind.inverter_efficiency);
        for (double v : block.wind.curve_speed_mps) h.feed(v);
        for (double v : block.wind.curve_power_w) h.feed(v);
        h.feed(block.battery.capacity_wh);
        h.feed(block.battery.max_charge_w);
        h.feed(block.battery.max_discharge_w);
        h.feed(block.battery.charge_threshold_w);
        h.feed(block.battery.discharge_threshold_w);
        h.feed(block.battery.initial_soc);
        h.feed(block.initial_ev_count);
        h.feed(block.ev_charge_power_w);
        h.feed(block.charge_probability);
        h.feed(block.building_load_w);
        h.feed(block.general_load_w);
        h.feed(static_cast<double>(block.comm.tower_count));
        h.feed(block.comm.e_elec_j_per_packet);
        h.feed(block.comm.eps_elec_j_per_packet_m);
        h.feed(block.comm.distance_m);
        h.feed(block.comm.path_loss_exponent);
        h.feed(block.feeder.slack_bus);
        for (const auto& bus : block.feeder.buses) {
            h.feed(bus.id);
            h.feed(std::string(to_string(bus.load)));
        }
        for (const auto& line : block.feeder.lines) {
            h.feed(line.from);
            h.feed(line.to);
            h.feed(line.r_ohm);
            h.feed(line.x_ohm);
            h.feed(line.limit_w);
        }
        for (const auto& [road, series] : block.traffic_out_veh_h) {
            h.feed(road);
            h.feed(series);
        }
        if (block.prescribed_ev_power_w) h.feed(*block.prescribed_ev_power_w);
        if (block.prescribed_throughput_pps) h.feed(*block.prescribed_throughput_pps);
    }
    for (const auto& road : cfg.roads) {
        h.feed(road.name);
        h.feed(road.from_block);
        h.feed(road.to_block);
        h.feed(road.length_m);
        h.feed(road.capacity_veh_h);
        h.feed(road.design_speed_mps);
        h.feed(road.alpha1);
        h.feed(road.alpha2);
        h.feed(road.alpha3);
        h.feed(road.comm.kappa);
        h.feed(road.comm.threshold_pps);
        h.feed(road.comm.packets_per_vehicle_pps);
    }
    for (const auto& line : cfg.community_lines) {
        h.feed(line.from);
        h.feed(line.to);
        h.feed(line.r_ohm);
        h.feed(line.x_ohm);
        h.feed(line.limit_w);
    }
    return h.hex();
}

inline nlohmann::json to_json(const IndicatorReport& report) {
    nlohmann::json j;
    j["pvlr_pct"] = report.pvlr_pct;
    j["lcf_pct"] = report.lcf_pct;
    j["si_b"] = report.si_b;
    j["si_l"] = report.si_l;
    nlohmann::json roads = nlohmann::json::array();
    for (const auto& c : report.roads) {
        roads.push_back({{"road", c.road},
                         {"mean_travel_time_s", c.mean_travel_time_s},
                         {"peak_travel_time_s", c.peak_travel_time_s},
                         {"peak_travel_time_at_s", c.peak_travel_time_at_s},
                         {"mean_packet_loss", c.mean_packet_loss},
                         {"peak_packet_loss", c.peak_packet_loss},
                         {"peak_packet_loss_at_s", c.peak_packet_loss_at_s}});
    }
    j["road_congestion"] = roads;
    return j;
}

inline std::string iso_utc_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

} // namespace detail

struct RunRequest {
    std::filesystem::path scenario;
    CouplingMode mode = CouplingMode::energy_transport;
    std::optional<double> dt_s;
    std::filesystem::path out_dir;
    bool format_csv = true;
    bool format_json = false;
};

inline int cmd_run(const RunRequest& request, std::ostream& out, std::ostream& err) {
    try {
        ScenarioConfig cfg = load_scenario(request.scenario, request.dt_s);
        Engine engine(std::move(cfg), request.mode);
        TraceSet trace = engine.run();
        std::vector<double> limits = engine.line_limits_w();
        std::optional<IndicatorReport> report;
        if (!trace.times_s.empty()) report = compute_indicators(trace, limits);

        std::filesystem::create_directories(request.out_dir);
        for (const auto& [quantity, channel] : trace.channels) {
            if (request.format_csv) {
                write_trace_csv(trace, quantity, request.out_dir / ("trace_" + quantity + ".csv"));
            }
            if (request.format_json) {
                nlohmann::json j;
                j["quantity"] = quantity;
                j["times_s"] = trace.times_s;
                j["elements"] = channel.elements;
                j["rows"] = channel.rows;
                csv::write_file_atomic(request.out_dir / ("trace_" + quantity + ".json"),
                                       j.dump(2) + "\n");
            }
        }
        if (report) {
            csv::write_file_atomic(request.out_dir / "indicators.json",
                                   detail::to_json(*report).dump(2) + "\n");
        }

        nlohmann::json manifest;
        manifest["tool"] = "gridmesh";
        manifest["version"] = version;
        manifest["scenario"] = request.scenario.string();
        manifest["scenario_digest"] = "fnv1a64:" + detail::scenario_digest(engine.config());
        manifest["mode"] = to_string(request.mode);
        manifest["start_s"] = engine.config().sim_start_s;
        manifest["end_s"] = engine.config().sim_end_s;
        manifest["dt_s"] = engine.config().dt_s;
        manifest["steps"] = trace.times_s.size();
        manifest["created_utc"] = detail::iso_utc_now();
        csv::write_file_atomic(request.out_dir / "manifest.json", manifest.dump(2) + "\n");

        out << "run complete: " << trace.times_s.size() << " steps, mode "
            << to_string(request.mode) << "\n";
        if (report) {
            out << "  pvlr: " << report->pvlr_pct << " %\n";
            out << "  lcf:  " << report->lcf_pct << " %\n";
            out << "  si_b: " << report->si_b.at("community") << "\n";
            if (report->si_l.contains("community")) {
                out << "  si_l: " << report->si_l.at("community") << "\n";
            }
            for (const auto& c : report->roads) {
                out << "  road " << c.road << ": mean travel " << c.mean_travel_time_s
                    << " s, peak travel " << c.peak_travel_time_s << " s @ "
                    << c.peak_travel_time_at_s << " s, peak loss " << c.peak_packet_loss << " @ "
                    << c.peak_packet_loss_at_s << " s\n";
            }
        }
        out << "traces written to " << request.out_dir.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "gridmesh run: " << e.what() << "\n";
        return 1;
    }
}

inline int cmd_compare(const std::filesystem::path& dir_a, const std::filesystem::path& dir_b,
                       const std::string& quantity, const std::optional<std::filesystem::path>& out_csv,
                       std::ostream& out, std::ostream& err) {
    try {
        std::filesystem::path file_a = dir_a / ("trace_" + quantity + ".csv");
        std::filesystem::path file_b = dir_b / ("trace_" + quantity + ".csv");
        for (const auto& f : {file_a, file_b}) {
            if (!std::filesystem::exists(f)) {
                throw TraceError("quantity '" + quantity + "' not found: " + f.string());
            }
        }
        auto [times_a, channel_a] = read_trace_csv(file_a);
        auto [times_b, channel_b] = read_trace_csv(file_b);
        DeviationReport report =
            compare_channels(times_a, channel_a, times_b, channel_b, quantity);

        std::filesystem::path target =
            out_csv.value_or(std::filesystem::path("compare_" + quantity + ".csv"));
        write_deviation_csv(report, target);

        out << "compare " << quantity << ": mean deviation " << report.mean_pct
            << " %, peak deviation " << report.peak_pct << " % at t=" << report.peak_time_s
            << " s (" << report.peak_element << ")\n";
        out << "deviation series written to " << target.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "gridmesh compare: " << e.what() << "\n";
        return 1;
    }
}

inline int cmd_plotdata(const std::filesystem::path& dir, const std::string& quantity,
                        const std::vector<std::string>& elements, std::ostream& out,
                        std::ostream& err) {
    try {
        std::filesystem::path file = dir / ("trace_" + quantity + ".csv");
        if (!std::filesystem::exists(file)) {
            throw TraceError("quantity '" + quantity + "' not found: " + file.string());
        }
        auto [times, channel] = read_trace_csv(file);
        std::vector<std::size_t> selected;
        if (elements.empty()) {
            for (std::size_t e = 0; e < channel.elements.size(); ++e) selected.push_back(e);
        } else {
            for (const auto& name : elements) {
                int idx = channel.element_index(name);
                if (idx < 0) throw TraceError("unknown element '" + name + "' in " + quantity);
                selected.push_back(static_cast<std::size_t>(idx));
            }
        }
        out << "time_s,element,value\n";
        for (std::size_t i = 0; i < times.size(); ++i) {
            for (std::size_t e : selected) {
                out << csv::detail::format_number(times[i]) << ',' << channel.elements[e] << ','
                    << csv::detail::format_number(channel.rows[i][e]) << '\n';
            }
        }
        return 0;
    } catch (const std::exception& e) {
        err << "gridmesh plotdata: " << e.what() << "\n";
        return 1;
    }
}

} // namespace gridmesh::cli

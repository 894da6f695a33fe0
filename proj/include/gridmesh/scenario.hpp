#pragma once

// Scenario loading: parses the structured-text scenario document plus its
// sidecar series CSVs, resamples every profile onto the simulation grid,
// and validates all invariants. The result is an immutable ScenarioConfig;
// save_scenario writes it back out (series included) in the same format.

#include "gridmesh/csv.hpp"
#include "gridmesh/energy.hpp"
#include "gridmesh/powerflow.hpp"
#include "gridmesh/sctext.hpp"
#include "gridmesh/timeseries.hpp"
#include "gridmesh/transport.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace gridmesh {

struct ValidationError : std::runtime_error {
    std::vector<std::string> issues;

    explicit ValidationError(std::vector<std::string> list)
        : std::runtime_error(join(list)), issues(std::move(list)) {}

    static std::string join(const std::vector<std::string>& list) {
        std::ostringstream out;
        out << "scenario validation failed (" << list.size() << " issue"
            << (list.size() == 1 ? "" : "s") << "):";
        for (const auto& s : list) out << "\n  - " << s;
        return out.str();
    }
};

struct MissingSeriesError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BusSpec {
    std::string id;
    BusLoad load = BusLoad::none;
    bool operator==(const BusSpec&) const = default;
};

struct LineSpec {
    std::string from;
    std::string to;
    double r_ohm = 0.0;
    double x_ohm = 0.0;
    double limit_w = 0.0;
    bool operator==(const LineSpec&) const = default;
};

struct FeederSpec {
    std::string slack_bus;
    std::vector<BusSpec> buses;
    std::vector<LineSpec> lines;
    bool operator==(const FeederSpec&) const = default;
};

struct InterBlockLineSpec {
    std::string from;  // block name, or "grid" for the utility connection
    std::string to;
    double r_ohm = 0.0;
    double x_ohm = 0.0;
    double limit_w = 0.0;
    bool operator==(const InterBlockLineSpec&) const = default;
};

struct WeatherSeries {
    TimeSeriesProfile direct_normal_w_m2;
    TimeSeriesProfile sky_diffuse_w_m2;
    TimeSeriesProfile ground_diffuse_w_m2;
    TimeSeriesProfile wind_speed_mps;
    TimeSeriesProfile cos_incidence;  // plane-of-array direct fraction
    bool operator==(const WeatherSeries&) const = default;

    WeatherPoint at(double t) const {
        return WeatherPoint{direct_normal_w_m2.value_at(t), sky_diffuse_w_m2.value_at(t),
                            ground_diffuse_w_m2.value_at(t), cos_incidence.value_at(t)};
    }
};

struct BlockSpec {
    std::string name;
    PvParams pv;
    WindParams wind;
    BatteryParams battery;
    FeederSpec feeder;
    double initial_ev_count = 0.0;
    double ev_charge_power_w = 0.0;
    TimeSeriesProfile charge_probability;  // p_i, hourly
    TimeSeriesProfile building_load_w;
    TimeSeriesProfile general_load_w;
    CommTowerParams comm;
    // Departures onto each outgoing road, veh/h, keyed by road name.
    std::map<std::string, TimeSeriesProfile> traffic_out_veh_h;
    // Fixed transportation/communication inputs, required by the
    // energy-only coupling mode.
    std::optional<TimeSeriesProfile> prescribed_ev_power_w;
    std::optional<TimeSeriesProfile> prescribed_throughput_pps;

    bool operator==(const BlockSpec&) const = default;
};

struct ScenarioConfig {
    double sim_start_s = 0.0;
    double sim_end_s = 0.0;
    double dt_s = 60.0;
    double coupling_tolerance = 1e-8;
    int coupling_max_iters = 50;
    double nominal_voltage_v = 1.0;
    double power_base_w = 1.0;
    WeatherSeries weather;
    std::vector<BlockSpec> blocks;
    std::vector<RoadSpec> roads;
    std::vector<InterBlockLineSpec> community_lines;

    bool operator==(const ScenarioConfig&) const = default;

    TimeGrid grid() const { return TimeGrid{sim_start_s, sim_end_s, dt_s}; }

    int block_index(const std::string& name) const {
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            if (blocks[i].name == name) return static_cast<int>(i);
        }
        return -1;
    }
    int road_index(const std::string& name) const {
        for (std::size_t i = 0; i < roads.size(); ++i) {
            if (roads[i].name == name) return static_cast<int>(i);
        }
        return -1;
    }
};

namespace scenario_detail {

inline bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '_' || c == '-' || c == '.';
        if (!ok) return false;
    }
    return true;
}

// Typed, path-aware access to one node's children. Unknown keys are
// reported so schema typos fail loudly.
class View {
public:
    View(const sctext::Node& node, std::string path, std::vector<std::string>& issues)
        : node_(&node), path_(std::move(path)), issues_(&issues), used_(node.children.size(), false) {}

    const std::string& path() const { return path_; }

    const sctext::Node* find(const std::string& key) {
        for (std::size_t i = 0; i < node_->children.size(); ++i) {
            if (!used_[i] && node_->children[i].key == key) {
                used_[i] = true;
                return &node_->children[i];
            }
        }
        return nullptr;
    }

    std::vector<const sctext::Node*> all(const std::string& key) {
        std::vector<const sctext::Node*> out;
        for (std::size_t i = 0; i < node_->children.size(); ++i) {
            if (node_->children[i].key == key) {
                used_[i] = true;
                out.push_back(&node_->children[i]);
            }
        }
        return out;
    }

    double number(const std::string& key, double fallback = 0.0) {
        const sctext::Node* n = find(key);
        if (n == nullptr) {
            issue("missing '" + key + "'");
            return fallback;
        }
        return scalar_number(*n, key, fallback);
    }

    double number_or(const std::string& key, double fallback) {
        const sctext::Node* n = find(key);
        if (n == nullptr) return fallback;
        return scalar_number(*n, key, fallback);
    }

    int integer(const std::string& key, int fallback = 0) {
        double v = number(key, static_cast<double>(fallback));
        int i = static_cast<int>(v);
        if (static_cast<double>(i) != v) issue("'" + key + "' must be an integer");
        return i;
    }

    int integer_or(const std::string& key, int fallback) {
        double v = number_or(key, static_cast<double>(fallback));
        int i = static_cast<int>(v);
        if (static_cast<double>(i) != v) issue("'" + key + "' must be an integer");
        return i;
    }

    std::string text(const std::string& key, const std::string& fallback = "") {
        const sctext::Node* n = find(key);
        if (n == nullptr) {
            issue("missing '" + key + "'");
            return fallback;
        }
        if (!n->scalar) {
            issue("'" + key + "' must be 'key = value'");
            return fallback;
        }
        return *n->scalar;
    }

    std::optional<std::string> text_or(const std::string& key) {
        const sctext::Node* n = find(key);
        if (n == nullptr) return std::nullopt;
        if (!n->scalar) {
            issue("'" + key + "' must be 'key = value'");
            return std::nullopt;
        }
        return *n->scalar;
    }

    void issue(const std::string& msg) { issues_->push_back(path_ + ": " + msg); }

    // Flags any child keys never consumed by the schema walk.
    void finish() {
        for (std::size_t i = 0; i < node_->children.size(); ++i) {
            if (!used_[i]) {
                issue("unknown key '" + node_->children[i].key + "' (line " +
                      std::to_string(node_->children[i].line) + ")");
            }
        }
    }

private:
    double scalar_number(const sctext::Node& n, const std::string& key, double fallback) {
        if (!n.scalar) {
            issue("'" + key + "' must be 'key = value'");
            return fallback;
        }
        try {
            return sctext::parse_number(*n.scalar, path_ + "." + key);
        } catch (const sctext::ParseError& e) {
            issues_->push_back(e.what());
            return fallback;
        }
    }

    const sctext::Node* node_;
    std::string path_;
    std::vector<std::string>* issues_;
    std::vector<bool> used_;
};

} // namespace scenario_detail

// Invariant checks over a built configuration. Returns one diagnostic per
// violation, each naming the offending field.
inline std::vector<std::string> validate(const ScenarioConfig& cfg) {
    namespace sd = scenario_detail;
    std::vector<std::string> issues;
    auto bad = [&](const std::string& msg) { issues.push_back(msg); };

    if (cfg.sim_end_s < cfg.sim_start_s) bad("simulation.end_s: must be >= start_s");
    if (cfg.dt_s <= 0.0) bad("simulation.dt_s: must be > 0");
    if (cfg.dt_s > 0.0 && cfg.sim_end_s >= cfg.sim_start_s) {
        double steps = (cfg.sim_end_s - cfg.sim_start_s) / cfg.dt_s;
        if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps)) {
            bad("simulation: window must be a whole number of dt_s steps");
        }
    }
    if (cfg.coupling_tolerance <= 0.0) bad("simulation.coupling_tolerance: must be > 0");
    if (cfg.coupling_max_iters < 1) bad("simulation.coupling_max_iters: must be >= 1");
    if (cfg.nominal_voltage_v <= 0.0) bad("community.nominal_voltage_v: must be > 0");
    if (cfg.power_base_w <= 0.0) bad("community.power_base_w: must be > 0");

    auto check_series = [&](const TimeSeriesProfile& p, const std::string& field, double lo,
                            double hi) {
        if (p.empty()) {
            bad(field + ": empty series");
            return;
        }
        for (double v : p.values) {
            if (v < lo || v > hi) {
                bad(field + ": value " + std::to_string(v) + " outside [" + std::to_string(lo) +
                    ", " + std::to_string(hi) + "]");
                break;
            }
        }
    };
    const double inf = std::numeric_limits<double>::infinity();

    check_series(cfg.weather.direct_normal_w_m2, "weather.direct_normal_w_m2", 0.0, inf);
    check_series(cfg.weather.sky_diffuse_w_m2, "weather.sky_diffuse_w_m2", 0.0, inf);
    check_series(cfg.weather.ground_diffuse_w_m2, "weather.ground_diffuse_w_m2", 0.0, inf);
    check_series(cfg.weather.wind_speed_mps, "weather.wind_speed_mps", 0.0, inf);
    check_series(cfg.weather.cos_incidence, "weather.cos_incidence", -1.0, 1.0);

    std::set<std::string> block_names;
    for (const auto& block : cfg.blocks) {
        const std::string at = "block '" + block.name + "'";
        if (!sd::valid_name(block.name)) bad(at + ": invalid name (use [A-Za-z0-9_.-])");
        if (block.name == "grid" || block.name == "community") {
            bad(at + ": name is reserved");
        }
        if (!block_names.insert(block.name).second) bad(at + ": duplicate block name");

        for (std::size_t i = 0; i < block.pv.arrays.size(); ++i) {
            const auto& a = block.pv.arrays[i];
            const std::string ap = at + ".pv.array[" + std::to_string(i) + "]";
            if (a.area_m2 < 0.0) bad(ap + ".area_m2: must be >= 0");
            if (a.active_fraction < 0.0 || a.active_fraction > 1.0)
                bad(ap + ".active_fraction: must be in [0, 1]");
            if (a.efficiency < 0.0 || a.efficiency > 1.0) bad(ap + ".efficiency: must be in [0, 1]");
            if (a.inverter_efficiency < 0.0 || a.inverter_efficiency > 1.0)
                bad(ap + ".inverter_efficiency: must be in [0, 1]");
        }
        if (block.wind.count < 0) bad(at + ".wind.count: must be >= 0");
        if (block.wind.scale < 0.0) bad(at + ".wind.scale: must be >= 0");
        if (block.wind.inverter_efficiency < 0.0 || block.wind.inverter_efficiency > 1.0)
            bad(at + ".wind.inverter_efficiency: must be in [0, 1]");
        if (block.wind.curve_speed_mps.size() != block.wind.curve_power_w.size())
            bad(at + ".wind: power curve speed/power lists differ in length");
        for (std::size_t i = 1; i < block.wind.curve_speed_mps.size(); ++i) {
            if (block.wind.curve_speed_mps[i] <= block.wind.curve_speed_mps[i - 1]) {
                bad(at + ".wind: power curve speeds must be strictly increasing");
                break;
            }
        }
        if (block.battery.capacity_wh < 0.0) bad(at + ".battery.capacity_wh: must be >= 0");
        if (block.battery.max_charge_w < 0.0) bad(at + ".battery.max_charge_w: must be >= 0");
        if (block.battery.max_discharge_w < 0.0) bad(at + ".battery.max_discharge_w: must be >= 0");
        if (block.battery.charge_threshold_w > block.battery.discharge_threshold_w)
            bad(at + ".battery: charge_threshold_w must be <= discharge_threshold_w");
        if (block.battery.initial_soc < 0.0 || block.battery.initial_soc > 1.0)
            bad(at + ".battery.initial_soc: must be in [0, 1]");
        if (block.initial_ev_count < 0.0) bad(at + ".ev.initial_count: must be >= 0");
        if (block.ev_charge_power_w < 0.0) bad(at + ".ev.charge_power_w: must be >= 0");
        check_series(block.charge_probability, at + ".ev.charge_probability", 0.0, 1.0);
        check_series(block.building_load_w, at + ".loads.building_w", 0.0, inf);
        check_series(block.general_load_w, at + ".loads.general_w", 0.0, inf);
        if (block.comm.tower_count < 0) bad(at + ".comm_tower.count: must be >= 0");
        if (block.comm.e_elec_j_per_packet < 0.0)
            bad(at + ".comm_tower.e_elec_j_per_packet: must be >= 0");
        if (block.comm.eps_elec_j_per_packet_m < 0.0)
            bad(at + ".comm_tower.eps_elec_j_per_packet_m: must be >= 0");
        if (block.comm.distance_m < 0.0) bad(at + ".comm_tower.distance_m: must be >= 0");
        if (block.prescribed_ev_power_w)
            check_series(*block.prescribed_ev_power_w, at + ".prescribed.ev_power_w", 0.0, inf);
        if (block.prescribed_throughput_pps)
            check_series(*block.prescribed_throughput_pps, at + ".prescribed.throughput_pps", 0.0,
                         inf);

        // Feeder shape: unique bus ids, known endpoints, radial from slack.
        const auto& feeder = block.feeder;
        const std::size_t issues_before_feeder = issues.size();
        std::set<std::string> bus_ids;
        for (const auto& bus : feeder.buses) {
            if (!sd::valid_name(bus.id)) bad(at + ".feeder: invalid bus id '" + bus.id + "'");
            if (!bus_ids.insert(bus.id).second)
                bad(at + ".feeder: duplicate bus id '" + bus.id + "'");
        }
        if (!bus_ids.contains(feeder.slack_bus))
            bad(at + ".feeder.slack_bus: unknown bus '" + feeder.slack_bus + "'");
        for (const auto& line : feeder.lines) {
            const std::string lp = at + ".feeder.line " + line.from + "->" + line.to;
            if (!bus_ids.contains(line.from)) bad(lp + ": unknown bus '" + line.from + "'");
            if (!bus_ids.contains(line.to)) bad(lp + ": unknown bus '" + line.to + "'");
            if (line.r_ohm < 0.0) bad(lp + ": r_ohm must be >= 0");
            if (line.limit_w <= 0.0) bad(lp + ": limit_w must be > 0");
        }
        if (issues.size() == issues_before_feeder && !feeder.buses.empty()) {
            FeederNetwork net;
            for (const auto& bus : feeder.buses) net.buses.push_back({bus.id, bus.load});
            for (const auto& line : feeder.lines) {
                net.lines.push_back({net.bus_index(line.from), net.bus_index(line.to),
                                     {line.r_ohm, line.x_ohm}, line.limit_w});
            }
            net.slack = net.bus_index(feeder.slack_bus);
            try {
                net.finalize();
            } catch (const PowerFlowError& e) {
                bad(at + ".feeder: " + e.what());
            }
        }
    }

    std::set<std::string> road_names;
    for (const auto& road : cfg.roads) {
        const std::string at = "road '" + road.name + "'";
        if (!sd::valid_name(road.name)) bad(at + ": invalid name (use [A-Za-z0-9_.-])");
        if (!road_names.insert(road.name).second) bad(at + ": duplicate road name");
        if (cfg.block_index(road.from_block) < 0)
            bad(at + ".from: unknown block '" + road.from_block + "'");
        if (cfg.block_index(road.to_block) < 0)
            bad(at + ".to: unknown block '" + road.to_block + "'");
        if (road.length_m <= 0.0) bad(at + ".length_m: must be > 0");
        if (road.capacity_veh_h <= 0.0) bad(at + ".capacity_veh_h: must be > 0");
        if (road.design_speed_mps <= 0.0) bad(at + ".design_speed_mps: must be > 0");
        if (road.alpha1 <= 0.0) bad(at + ".alpha1: must be > 0");
        if (road.comm.kappa < 0.0) bad(at + ".comm_link.kappa: must be >= 0");
        if (road.comm.threshold_pps < 0.0) bad(at + ".comm_link.threshold_pps: must be >= 0");
        if (road.comm.packets_per_vehicle_pps < 0.0)
            bad(at + ".comm_link.packets_per_vehicle_pps: must be >= 0");
    }

    for (const auto& block : cfg.blocks) {
        for (const auto& [road_name, series] : block.traffic_out_veh_h) {
            const std::string at = "block '" + block.name + "'.traffic_out '" + road_name + "'";
            int r = cfg.road_index(road_name);
            if (r < 0) {
                bad(at + ": unknown road");
            } else if (cfg.roads[static_cast<std::size_t>(r)].from_block != block.name) {
                bad(at + ": road does not depart from this block");
            }
            check_series(series, at, 0.0, inf);
        }
    }

    // Community topology: a tree rooted at the grid terminal spanning every
    // block. A single block with no community lines connects directly.
    if (!(cfg.blocks.size() == 1 && cfg.community_lines.empty())) {
        std::map<std::string, std::vector<std::string>> adj;
        bool endpoints_ok = true;
        for (const auto& line : cfg.community_lines) {
            const std::string lp = "community.line " + line.from + "->" + line.to;
            for (const std::string& end : {line.from, line.to}) {
                if (end != "grid" && cfg.block_index(end) < 0) {
                    bad(lp + ": unknown terminal '" + end + "' (block name or 'grid')");
                    endpoints_ok = false;
                }
            }
            if (line.r_ohm < 0.0) bad(lp + ": r_ohm must be >= 0");
            if (line.limit_w <= 0.0) bad(lp + ": limit_w must be > 0");
            adj[line.from].push_back(line.to);
            adj[line.to].push_back(line.from);
        }
        if (endpoints_ok) {
            if (cfg.community_lines.size() != cfg.blocks.size()) {
                bad("community: lines must form a tree rooted at 'grid' spanning all blocks (" +
                    std::to_string(cfg.blocks.size()) + " blocks need " +
                    std::to_string(cfg.blocks.size()) + " lines, got " +
                    std::to_string(cfg.community_lines.size()) + ")");
            } else {
                std::set<std::string> seen{"grid"};
                std::vector<std::string> queue{"grid"};
                for (std::size_t head = 0; head < queue.size(); ++head) {
                    for (const auto& other : adj[queue[head]]) {
                        if (seen.insert(other).second) queue.push_back(other);
                    }
                }
                for (const auto& block : cfg.blocks) {
                    if (!seen.contains(block.name)) {
                        bad("community: block '" + block.name + "' is not reachable from 'grid'");
                    }
                }
            }
        }
    }

    return issues;
}

namespace scenario_detail {

class Builder {
public:
    Builder(const std::filesystem::path& scenario_path, std::optional<double> dt_override)
        : base_dir_(scenario_path.parent_path()), dt_override_(dt_override) {}

    ScenarioConfig build(const std::vector<sctext::Node>& document, const std::string& label) {
        sctext::Node root;
        root.children = document;
        View top(root, label, issues_);

        if (const sctext::Node* sim = top.find("simulation")) {
            View v(*sim, label + ".simulation", issues_);
            cfg_.sim_start_s = v.number("start_s");
            cfg_.sim_end_s = v.number("end_s");
            cfg_.dt_s = v.number("dt_s");
            cfg_.coupling_tolerance = v.number_or("coupling_tolerance", 1e-8);
            cfg_.coupling_max_iters = v.integer_or("coupling_max_iters", 50);
            v.finish();
        } else {
            top.issue("missing 'simulation'");
        }
        if (dt_override_ && *dt_override_ > 0.0) cfg_.dt_s = *dt_override_;

        if (const sctext::Node* community = top.find("community")) {
            View v(*community, label + ".community", issues_);
            cfg_.nominal_voltage_v = v.number("nominal_voltage_v");
            cfg_.power_base_w = v.number_or("power_base_w", 1e6);
            for (const sctext::Node* line : v.all("line")) {
                View lv(*line, label + ".community.line", issues_);
                InterBlockLineSpec spec;
                spec.from = lv.text("from");
                spec.to = lv.text("to");
                spec.r_ohm = lv.number("r_ohm");
                spec.x_ohm = lv.number_or("x_ohm", 0.0);
                spec.limit_w = lv.number("limit_w");
                lv.finish();
                cfg_.community_lines.push_back(std::move(spec));
            }
            v.finish();
        } else {
            top.issue("missing 'community'");
        }

        if (const sctext::Node* weather = top.find("weather")) {
            View v(*weather, label + ".weather", issues_);
            cfg_.weather.direct_normal_w_m2 = series(v, "direct_normal_w_m2", Interp::linear);
            cfg_.weather.sky_diffuse_w_m2 = series(v, "sky_diffuse_w_m2", Interp::linear);
            cfg_.weather.ground_diffuse_w_m2 = series(v, "ground_diffuse_w_m2", Interp::linear);
            cfg_.weather.wind_speed_mps = series(v, "wind_speed_mps", Interp::linear);
            cfg_.weather.cos_incidence =
                series_or(v, "cos_incidence", Interp::linear, TimeSeriesProfile::constant(1.0));
            v.finish();
        } else {
            top.issue("missing 'weather'");
        }

        for (const sctext::Node* block : top.all("block")) {
            cfg_.blocks.push_back(build_block(*block, label));
        }
        for (const sctext::Node* road : top.all("road")) {
            cfg_.roads.push_back(build_road(*road, label));
        }
        top.finish();

        resample_all();
        return cfg_;
    }

    std::vector<std::string>& issues() { return issues_; }

private:
    BlockSpec build_block(const sctext::Node& node, const std::string& label) {
        BlockSpec block;
        block.name = node.args.empty() ? "" : node.args[0];
        const std::string path = label + ".block '" + block.name + "'";
        View v(node, path, issues_);
        if (node.args.size() != 1) v.issue("expected exactly one name argument");

        if (const sctext::Node* pv = v.find("pv")) {
            View pvv(*pv, path + ".pv", issues_);
            for (const sctext::Node* arr : pvv.all("array")) {
                View av(*arr, path + ".pv.array", issues_);
                PvArray a;
                a.area_m2 = av.number("area_m2");
                a.active_fraction = av.number_or("active_fraction", 1.0);
                a.efficiency = av.number("efficiency");
                a.inverter_efficiency = av.number_or("inverter_efficiency", 1.0);
                av.finish();
                block.pv.arrays.push_back(a);
            }
            pvv.finish();
        }
        if (const sctext::Node* wind = v.find("wind")) {
            View wv(*wind, path + ".wind", issues_);
            block.wind.count = wv.integer_or("count", 0);
            block.wind.scale = wv.number_or("scale", 1.0);
            block.wind.inverter_efficiency = wv.number_or("inverter_efficiency", 1.0);
            for (const sctext::Node* point : wv.all("point")) {
                View pv2(*point, path + ".wind.point", issues_);
                block.wind.curve_speed_mps.push_back(pv2.number("speed_mps"));
                block.wind.curve_power_w.push_back(pv2.number("power_w"));
                pv2.finish();
            }
            wv.finish();
        }
        if (const sctext::Node* battery = v.find("battery")) {
            View bv(*battery, path + ".battery", issues_);
            block.battery.capacity_wh = bv.number("capacity_wh");
            block.battery.max_charge_w = bv.number("max_charge_w");
            block.battery.max_discharge_w = bv.number("max_discharge_w");
            block.battery.charge_threshold_w = bv.number_or("charge_threshold_w", 0.0);
            block.battery.discharge_threshold_w = bv.number_or("discharge_threshold_w", 0.0);
            block.battery.initial_soc = bv.number_or("initial_soc", 0.5);
            bv.finish();
        } else {
            v.issue("missing 'battery'");
        }
        if (const sctext::Node* ev = v.find("ev")) {
            View ev2(*ev, path + ".ev", issues_);
            block.initial_ev_count = ev2.number("initial_count");
            block.ev_charge_power_w = ev2.number("charge_power_w");
            block.charge_probability = series(ev2, "charge_probability", Interp::step_hold);
            ev2.finish();
        } else {
            v.issue("missing 'ev'");
        }
        if (const sctext::Node* loads = v.find("loads")) {
            View lv(*loads, path + ".loads", issues_);
            block.building_load_w = series(lv, "building_w", Interp::linear);
            block.general_load_w =
                series_or(lv, "general_w", Interp::linear, TimeSeriesProfile::constant(0.0));
            lv.finish();
        } else {
            v.issue("missing 'loads'");
        }
        if (const sctext::Node* tower = v.find("comm_tower")) {
            View tv(*tower, path + ".comm_tower", issues_);
            block.comm.tower_count = tv.integer_or("count", 0);
            block.comm.e_elec_j_per_packet = tv.number_or("e_elec_j_per_packet", 0.0);
            block.comm.eps_elec_j_per_packet_m = tv.number_or("eps_elec_j_per_packet_m", 0.0);
            block.comm.distance_m = tv.number_or("distance_m", 0.0);
            block.comm.path_loss_exponent = tv.number_or("path_loss_exponent", 2.0);
            tv.finish();
        }
        if (const sctext::Node* feeder = v.find("feeder")) {
            View fv(*feeder, path + ".feeder", issues_);
            block.feeder.slack_bus = fv.text("slack_bus");
            for (const sctext::Node* bus : fv.all("bus")) {
                View bv(*bus, path + ".feeder.bus", issues_);
                BusSpec spec;
                spec.id = bus->args.empty() ? "" : bus->args[0];
                if (bus->args.size() != 1) bv.issue("expected exactly one bus id argument");
                if (auto kind = bv.text_or("load")) {
                    if (*kind == "building") spec.load = BusLoad::building;
                    else if (*kind == "ev") spec.load = BusLoad::ev;
                    else if (*kind == "general") spec.load = BusLoad::general;
                    else if (*kind == "comm") spec.load = BusLoad::comm;
                    else if (*kind == "none") spec.load = BusLoad::none;
                    else bv.issue("unknown load kind '" + *kind + "'");
                }
                bv.finish();
                block.feeder.buses.push_back(std::move(spec));
            }
            for (const sctext::Node* line : fv.all("line")) {
                View lv(*line, path + ".feeder.line", issues_);
                LineSpec spec;
                spec.from = lv.text("from");
                spec.to = lv.text("to");
                spec.r_ohm = lv.number("r_ohm");
                spec.x_ohm = lv.number_or("x_ohm", 0.0);
                spec.limit_w = lv.number("limit_w");
                lv.finish();
                block.feeder.lines.push_back(std::move(spec));
            }
            fv.finish();
        } else {
            v.issue("missing 'feeder'");
        }
        for (const sctext::Node* out : v.all("traffic_out")) {
            std::string road = out->args.empty() ? "" : out->args[0];
            if (out->args.size() != 1 || road.empty()) {
                v.issue("traffic_out: expected one road-name argument");
                continue;
            }
            block.traffic_out_veh_h[road] =
                series_node(*out, path + ".traffic_out '" + road + "'", Interp::linear);
        }
        if (const sctext::Node* prescribed = v.find("prescribed")) {
            View pv2(*prescribed, path + ".prescribed", issues_);
            block.prescribed_ev_power_w = series(pv2, "ev_power_w", Interp::linear);
            block.prescribed_throughput_pps = series(pv2, "throughput_pps", Interp::linear);
            pv2.finish();
        }
        v.finish();
        return block;
    }

    RoadSpec build_road(const sctext::Node& node, const std::string& label) {
        RoadSpec road;
        road.name = node.args.empty() ? "" : node.args[0];
        const std::string path = label + ".road '" + road.name + "'";
        View v(node, path, issues_);
        if (node.args.size() != 1) v.issue("expected exactly one name argument");
        road.from_block = v.text("from");
        road.to_block = v.text("to");
        road.length_m = v.number("length_m");
        road.capacity_veh_h = v.number("capacity_veh_h");
        road.design_speed_mps = v.number("design_speed_mps");
        road.alpha1 = v.number("alpha1");
        road.alpha2 = v.number("alpha2");
        road.alpha3 = v.number("alpha3");
        if (const sctext::Node* link = v.find("comm_link")) {
            View lv(*link, path + ".comm_link", issues_);
            road.comm.kappa = lv.number("kappa");
            road.comm.threshold_pps = lv.number("threshold_pps");
            road.comm.packets_per_vehicle_pps = lv.number_or("packets_per_vehicle_pps", 0.0);
            lv.finish();
        } else {
            v.issue("missing 'comm_link'");
        }
        v.finish();
        return road;
    }

    // A series field is either `key = "path.csv"` or
    // `key { file = "path.csv"  interp = step|linear }`.
    TimeSeriesProfile series(View& v, const std::string& key, Interp default_interp) {
        const sctext::Node* n = v.find(key);
        if (n == nullptr) {
            v.issue("missing series '" + key + "'");
            return TimeSeriesProfile::constant(0.0);
        }
        return series_node(*n, v.path() + "." + key, default_interp);
    }

    TimeSeriesProfile series_or(View& v, const std::string& key, Interp default_interp,
                                TimeSeriesProfile fallback) {
        const sctext::Node* n = v.find(key);
        if (n == nullptr) return fallback;
        return series_node(*n, v.path() + "." + key, default_interp);
    }

    TimeSeriesProfile series_node(const sctext::Node& node, const std::string& path,
                                  Interp default_interp) {
        std::string file;
        Interp interp = default_interp;
        if (node.scalar) {
            file = *node.scalar;
        } else if (node.is_block) {
            View v(node, path, issues_);
            file = v.text("file");
            if (auto mode = v.text_or("interp")) {
                if (*mode == "step") interp = Interp::step_hold;
                else if (*mode == "linear") interp = Interp::linear;
                else v.issue("interp must be 'step' or 'linear'");
            }
            v.finish();
        }
        if (file.empty()) {
            issues_.push_back(path + ": expected a series file reference");
            return TimeSeriesProfile::constant(0.0);
        }
        std::filesystem::path full = base_dir_ / file;
        if (!std::filesystem::exists(full)) {
            throw MissingSeriesError(path + ": series file not found: " + full.string());
        }
        try {
            return csv::read_series(full, interp);
        } catch (const csv::ParseError& e) {
            issues_.push_back(std::string(e.what()));
            return TimeSeriesProfile::constant(0.0);
        }
    }

    void resample_all() {
        if (cfg_.dt_s <= 0.0 || cfg_.sim_end_s < cfg_.sim_start_s) return;  // reported elsewhere
        double steps = (cfg_.sim_end_s - cfg_.sim_start_s) / cfg_.dt_s;
        if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps)) return;
        TimeGrid grid = cfg_.grid();
        auto regrid = [&](TimeSeriesProfile& p) {
            if (!p.empty()) p = resample(p, grid);
        };
        regrid(cfg_.weather.direct_normal_w_m2);
        regrid(cfg_.weather.sky_diffuse_w_m2);
        regrid(cfg_.weather.ground_diffuse_w_m2);
        regrid(cfg_.weather.wind_speed_mps);
        regrid(cfg_.weather.cos_incidence);
        for (auto& block : cfg_.blocks) {
            regrid(block.charge_probability);
            regrid(block.building_load_w);
            regrid(block.general_load_w);
            for (auto& [_, series] : block.traffic_out_veh_h) regrid(series);
            if (block.prescribed_ev_power_w) regrid(*block.prescribed_ev_power_w);
            if (block.prescribed_throughput_pps) regrid(*block.prescribed_throughput_pps);
        }
    }

    ScenarioConfig cfg_;
    std::filesystem::path base_dir_;
    std::optional<double> dt_override_;
    std::vector<std::string> issues_;
};

} // namespace scenario_detail

// Loads, resamples, and validates a scenario file. dt_override replaces the
// file's dt_s before resampling (CLI --dt).
inline ScenarioConfig load_scenario(const std::filesystem::path& path,
                                    std::optional<double> dt_override = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw sctext::ParseError("cannot open scenario file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::vector<sctext::Node> document = sctext::parse(buf.str(), path.string());

    scenario_detail::Builder builder(path, dt_override);
    ScenarioConfig cfg = builder.build(document, path.filename().string());
    std::vector<std::string> issues = std::move(builder.issues());
    std::vector<std::string> invariant_issues = validate(cfg);
    issues.insert(issues.end(), invariant_issues.begin(), invariant_issues.end());
    if (!issues.empty()) throw ValidationError(std::move(issues));
    return cfg;
}

namespace scenario_detail {

inline std::string number_token(double v) { return csv::detail::format_number(v); }

inline sctext::Node scalar_node(const std::string& key, const std::string& value) {
    sctext::Node n;
    n.key = key;
    n.scalar = value;
    return n;
}

inline sctext::Node number_node(const std::string& key, double v) {
    return scalar_node(key, number_token(v));
}

// Writes the profile as a sidecar CSV and returns the referencing node.
inline sctext::Node series_out(const std::string& key, const TimeSeriesProfile& profile,
                               const std::filesystem::path& series_dir,
                               const std::string& file_stem,
                               const std::filesystem::path& base_dir) {
    std::filesystem::path file = series_dir / (file_stem + ".csv");
    csv::write_series(file, profile);
    sctext::Node n;
    n.key = key;
    n.is_block = true;
    n.children.push_back(
        scalar_node("file", std::filesystem::relative(file, base_dir).generic_string()));
    n.children.push_back(scalar_node("interp", to_string(profile.interp)));
    return n;
}

} // namespace scenario_detail

// Writes the configuration as a scenario file plus a `<stem>_series/`
// directory of CSVs. Loading the result reproduces an equal ScenarioConfig.
inline void save_scenario(const ScenarioConfig& cfg, const std::filesystem::path& path) {
    namespace sd = scenario_detail;
    std::filesystem::path base_dir = path.parent_path();
    if (base_dir.empty()) base_dir = ".";
    std::filesystem::path series_dir = base_dir / (path.stem().string() + "_series");
    std::filesystem::create_directories(series_dir);

    std::vector<sctext::Node> doc;

    sctext::Node sim;
    sim.key = "simulation";
    sim.is_block = true;
    sim.children.push_back(sd::number_node("start_s", cfg.sim_start_s));
    sim.children.push_back(sd::number_node("end_s", cfg.sim_end_s));
    sim.children.push_back(sd::number_node("dt_s", cfg.dt_s));
    sim.children.push_back(sd::number_node("coupling_tolerance", cfg.coupling_tolerance));
    sim.children.push_back(sd::number_node("coupling_max_iters", cfg.coupling_max_iters));
    doc.push_back(std::move(sim));

    sctext::Node community;
    community.key = "community";
    community.is_block = true;
    community.children.push_back(sd::number_node("nominal_voltage_v", cfg.nominal_voltage_v));
    community.children.push_back(sd::number_node("power_base_w", cfg.power_base_w));
    for (const auto& line : cfg.community_lines) {
        sctext::Node n;
        n.key = "line";
        n.is_block = true;
        n.children.push_back(sd::scalar_node("from", line.from));
        n.children.push_back(sd::scalar_node("to", line.to));
        n.children.push_back(sd::number_node("r_ohm", line.r_ohm));
        n.children.push_back(sd::number_node("x_ohm", line.x_ohm));
        n.children.push_back(sd::number_node("limit_w", line.limit_w));
        community.children.push_back(std::move(n));
    }
    doc.push_back(std::move(community));

    sctext::Node weather;
    weather.key = "weather";
    weather.is_block = true;
    weather.children.push_back(sd::series_out("direct_normal_w_m2", cfg.weather.direct_normal_w_m2,
                                              series_dir, "weather_direct_normal", base_dir));
    weather.children.push_back(sd::series_out("sky_diffuse_w_m2", cfg.weather.sky_diffuse_w_m2,
                                              series_dir, "weather_sky_diffuse", base_dir));
    weather.children.push_back(sd::series_out("ground_diffuse_w_m2",
                                              cfg.weather.ground_diffuse_w_m2, series_dir,
                                              "weather_ground_diffuse", base_dir));
    weather.children.push_back(sd::series_out("wind_speed_mps", cfg.weather.wind_speed_mps,
                                              series_dir, "weather_wind_speed", base_dir));
    weather.children.push_back(sd::series_out("cos_incidence", cfg.weather.cos_incidence,
                                              series_dir, "weather_cos_incidence", base_dir));
    doc.push_back(std::move(weather));

    for (const auto& block : cfg.blocks) {
        sctext::Node b;
        b.key = "block";
        b.args.push_back(block.name);
        b.is_block = true;

        sctext::Node pv;
        pv.key = "pv";
        pv.is_block = true;
        for (const auto& a : block.pv.arrays) {
            sctext::Node arr;
            arr.key = "array";
            arr.is_block = true;
            arr.children.push_back(sd::number_node("area_m2", a.area_m2));
            arr.children.push_back(sd::number_node("active_fraction", a.active_fraction));
            arr.children.push_back(sd::number_node("efficiency", a.efficiency));
            arr.children.push_back(sd::number_node("inverter_efficiency", a.inverter_efficiency));
            pv.children.push_back(std::move(arr));
        }
        b.children.push_back(std::move(pv));

        sctext::Node wind;
        wind.key = "wind";
        wind.is_block = true;
        wind.children.push_back(sd::number_node("count", block.wind.count));
        wind.children.push_back(sd::number_node("scale", block.wind.scale));
        wind.children.push_back(
            sd::number_node("inverter_efficiency", block.wind.inverter_efficiency));
        for (std::size_t i = 0; i < block.wind.curve_speed_mps.size(); ++i) {
            sctext::Node point;
            point.key = "point";
            point.is_block = true;
            point.children.push_back(sd::number_node("speed_mps", block.wind.curve_speed_mps[i]));
            point.children.push_back(sd::number_node("power_w", block.wind.curve_power_w[i]));
            wind.children.push_back(std::move(point));
        }
        b.children.push_back(std::move(wind));

        sctext::Node battery;
        battery.key = "battery";
        battery.is_block = true;
        battery.children.push_back(sd::number_node("capacity_wh", block.battery.capacity_wh));
        battery.children.push_back(sd::number_node("max_charge_w", block.battery.max_charge_w));
        battery.children.push_back(
            sd::number_node("max_discharge_w", block.battery.max_discharge_w));
        battery.children.push_back(
            sd::number_node("charge_threshold_w", block.battery.charge_threshold_w));
        battery.children.push_back(
            sd::number_node("discharge_threshold_w", block.battery.discharge_threshold_w));
        battery.children.push_back(sd::number_node("initial_soc", block.battery.initial_soc));
        b.children.push_back(std::move(battery));

        sctext::Node ev;
        ev.key = "ev";
        ev.is_block = true;
        ev.children.push_back(sd::number_node("initial_count", block.initial_ev_count));
        ev.children.push_back(sd::number_node("charge_power_w", block.ev_charge_power_w));
        ev.children.push_back(sd::series_out("charge_probability", block.charge_probability,
                                             series_dir, block.name + "_charge_probability",
                                             base_dir));
        b.children.push_back(std::move(ev));

        sctext::Node loads;
        loads.key = "loads";
        loads.is_block = true;
        loads.children.push_back(sd::series_out("building_w", block.building_load_w, series_dir,
                                                block.name + "_building", base_dir));
        loads.children.push_back(sd::series_out("general_w", block.general_load_w, series_dir,
                                                block.name + "_general", base_dir));
        b.children.push_back(std::move(loads));

        sctext::Node tower;
        tower.key = "comm_tower";
        tower.is_block = true;
        tower.children.push_back(sd::number_node("count", block.comm.tower_count));
        tower.children.push_back(
            sd::number_node("e_elec_j_per_packet", block.comm.e_elec_j_per_packet));
        tower.children.push_back(
            sd::number_node("eps_elec_j_per_packet_m", block.comm.eps_elec_j_per_packet_m));
        tower.children.push_back(sd::number_node("distance_m", block.comm.distance_m));
        tower.children.push_back(
            sd::number_node("path_loss_exponent", block.comm.path_loss_exponent));
        b.children.push_back(std::move(tower));

        sctext::Node feeder;
        feeder.key = "feeder";
        feeder.is_block = true;
        feeder.children.push_back(sd::scalar_node("slack_bus", block.feeder.slack_bus));
        for (const auto& bus : block.feeder.buses) {
            sctext::Node n;
            n.key = "bus";
            n.args.push_back(bus.id);
            n.is_block = true;
            if (bus.load != BusLoad::none) {
                n.children.push_back(sd::scalar_node("load", to_string(bus.load)));
            }
            feeder.children.push_back(std::move(n));
        }
        for (const auto& line : block.feeder.lines) {
            sctext::Node n;
            n.key = "line";
            n.is_block = true;
            n.children.push_back(sd::scalar_node("from", line.from));
            n.children.push_back(sd::scalar_node("to", line.to));
            n.children.push_back(sd::number_node("r_ohm", line.r_ohm));
            n.children.push_back(sd::number_node("x_ohm", line.x_ohm));
            n.children.push_back(sd::number_node("limit_w", line.limit_w));
            feeder.children.push_back(std::move(n));
        }
        b.children.push_back(std::move(feeder));

        for (const auto& [road, series] : block.traffic_out_veh_h) {
            sctext::Node n = sd::series_out("traffic_out", series, series_dir,
                                            block.name + "_out_" + road, base_dir);
            n.args.push_back(road);
            b.children.push_back(std::move(n));
        }
        if (block.prescribed_ev_power_w && block.prescribed_throughput_pps) {
            sctext::Node prescribed;
            prescribed.key = "prescribed";
            prescribed.is_block = true;
            prescribed.children.push_back(sd::series_out("ev_power_w", *block.prescribed_ev_power_w,
                                                         series_dir,
                                                         block.name + "_prescribed_ev", base_dir));
            prescribed.children.push_back(
                sd::series_out("throughput_pps", *block.prescribed_throughput_pps, series_dir,
                               block.name + "_prescribed_throughput", base_dir));
            b.children.push_back(std::move(prescribed));
        }
        doc.push_back(std::move(b));
    }

    for (const auto& road : cfg.roads) {
        sctext::Node r;
        r.key = "road";
        r.args.push_back(road.name);
        r.is_block = true;
        r.children.push_back(sd::scalar_node("from", road.from_block));
        r.children.push_back(sd::scalar_node("to", road.to_block));
        r.children.push_back(sd::number_node("length_m", road.length_m));
        r.children.push_back(sd::number_node("capacity_veh_h", road.capacity_veh_h));
        r.children.push_back(sd::number_node("design_speed_mps", road.design_speed_mps));
        r.children.push_back(sd::number_node("alpha1", road.alpha1));
        r.children.push_back(sd::number_node("alpha2", road.alpha2));
        r.children.push_back(sd::number_node("alpha3", road.alpha3));
        sctext::Node link;
        link.key = "comm_link";
        link.is_block = true;
        link.children.push_back(sd::number_node("kappa", road.comm.kappa));
        link.children.push_back(sd::number_node("threshold_pps", road.comm.threshold_pps));
        link.children.push_back(
            sd::number_node("packets_per_vehicle_pps", road.comm.packets_per_vehicle_pps));
        r.children.push_back(std::move(link));
        doc.push_back(std::move(r));
    }

    csv::write_file_atomic(path, sctext::serialize(doc));
}

} // namespace gridmesh

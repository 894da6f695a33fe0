#pragma once

// Quasi-static co-simulation engine. Each step runs a Gauss-Seidel sweep
// over the agents (transport, then comms, then energy) and iterates the
// sweep to a fixed point of the coupling variables: per-block charging
// count, per-road packet loss, and per-block grid power. The coupling mode
// selects which loops are closed:
//
//   energy_only           fixed EV-charging and throughput series (case 1)
//   energy_transport      traffic closed, communication delay factor 1 (case 2)
//   energy_transport_comm all loops closed (case 3)

#include "gridmesh/comms.hpp"
#include "gridmesh/energy.hpp"
#include "gridmesh/powerflow.hpp"
#include "gridmesh/scenario.hpp"
#include "gridmesh/trace.hpp"
#include "gridmesh/transport.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gridmesh {

enum class CouplingMode { energy_only, energy_transport, energy_transport_comm };

inline const char* to_string(CouplingMode mode) {
    switch (mode) {
        case CouplingMode::energy_only: return "e";
        case CouplingMode::energy_transport: return "et";
        default: return "etc";
    }
}

inline std::optional<CouplingMode> parse_mode(const std::string& s) {
    if (s == "e") return CouplingMode::energy_only;
    if (s == "et") return CouplingMode::energy_transport;
    if (s == "etc") return CouplingMode::energy_transport_comm;
    return std::nullopt;
}

struct EngineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EnergySignals {
    double lmp = 0.0;    // constant charging price, no feedback loop yet
    double sig_e = 0.0;  // constant no-op control word
};

struct BlockState {
    BatteryState battery;
    BlockParking parking;
    CommState comm;  // tower-level aggregate throughput
    double p_pv_w = 0.0;
    double p_win_w = 0.0;
    double p_ev_w = 0.0;
    double p_com_w = 0.0;
    double p_bui_w = 0.0;
    double p_general_w = 0.0;
    double grid_power_w = 0.0;
    EnergySignals signals;
};

struct SimulationState {
    double t_s = 0.0;
    std::vector<BlockState> blocks;
    std::vector<RoadState> roads;
    std::vector<CommState> road_comm;
};

// Everything published for one accepted step.
struct StepRecord {
    double t_s = 0.0;
    int coupling_iterations = 0;
    double coupling_residual = 0.0;
    // per block
    std::vector<double> pv_w, wind_w, ev_w, comm_w, building_w, general_w;
    std::vector<double> soc, battery_w, parked, charging, block_grid_w;
    double community_grid_w = 0.0;
    // per road
    std::vector<double> inflow_veh_h, outflow_veh_h, velocity_mps, traffic_flow_veh_h;
    std::vector<double> travel_time_s, vehicles, throughput_pps, packet_loss_rate;
    // per bus / line
    std::vector<double> bus_voltage_pu;
    std::vector<double> line_power_w;
};

class Engine {
public:
    Engine(ScenarioConfig cfg, CouplingMode mode) : cfg_(std::move(cfg)), mode_(mode) {
        std::vector<std::string> issues = validate(cfg_);
        if (!issues.empty()) throw ValidationError(std::move(issues));
        if (mode_ == CouplingMode::energy_only) {
            for (const auto& block : cfg_.blocks) {
                if (!block.prescribed_ev_power_w || !block.prescribed_throughput_pps) {
                    throw EngineError("mode 'e' requires prescribed ev_power_w and "
                                      "throughput_pps series in block '" +
                                      block.name + "'");
                }
            }
        }
        build_network();
        index_roads();
    }

    const ScenarioConfig& config() const { return cfg_; }
    CouplingMode mode() const { return mode_; }
    const FeederNetwork& network() const { return net_; }
    const std::vector<std::string>& bus_names() const { return bus_names_; }
    const std::vector<std::string>& line_names() const { return line_names_; }
    std::vector<double> line_limits_w() const {
        std::vector<double> out;
        for (const auto& line : net_.lines) out.push_back(line.limit_w);
        return out;
    }

    SimulationState initial_state() const {
        SimulationState state;
        state.t_s = cfg_.sim_start_s;
        state.blocks.resize(cfg_.blocks.size());
        for (std::size_t b = 0; b < cfg_.blocks.size(); ++b) {
            state.blocks[b].battery.soc = cfg_.blocks[b].battery.initial_soc;
            state.blocks[b].parking.n_parked = cfg_.blocks[b].initial_ev_count;
        }
        for (const auto& road : cfg_.roads) state.roads.push_back(RoadState::initial(road));
        state.road_comm.resize(cfg_.roads.size());
        return state;
    }

    // One coupled step from t to t+dt. Throws EngineError if the coupling
    // fixed point does not converge within coupling_max_iters.
    std::pair<SimulationState, StepRecord> step(const SimulationState& base, double t_s) const {
        const double dt = cfg_.dt_s;
        const std::size_t n_roads = cfg_.roads.size();

        std::vector<double> gamma_in(n_roads);
        for (std::size_t r = 0; r < n_roads; ++r) {
            gamma_in[r] = base.road_comm[r].packet_loss_rate;
        }
        std::vector<double> prev = coupling_vector(base);

        SimulationState cand;
        PowerFlowSolution solution;
        double residual = std::numeric_limits<double>::infinity();
        double prev_residual = std::numeric_limits<double>::infinity();
        // Under-relaxation on the packet-loss feedback; backed off when the
        // iteration stalls (the loss curve has unbounded slope right at the
        // transmission threshold).
        double relax = 1.0;
        int iters = 0;
        bool converged = false;
        while (iters < cfg_.coupling_max_iters) {
            ++iters;
            cand = base;
            cand.t_s = t_s + dt;

            if (mode_ != CouplingMode::energy_only) {
                sweep_transport(base, cand, gamma_in, t_s, dt);
                sweep_comms(cand);
            }
            solution = sweep_energy(base, cand, t_s, dt);

            std::vector<double> now = coupling_vector(cand);
            residual = max_relative_change(now, prev);
            if (mode_ == CouplingMode::energy_transport_comm) {
                for (std::size_t r = 0; r < n_roads; ++r) {
                    double gap = std::abs(cand.road_comm[r].packet_loss_rate - gamma_in[r]);
                    residual = std::max(residual, gap);
                }
            }
            prev = std::move(now);
            if (residual < cfg_.coupling_tolerance) {
                converged = true;
                break;
            }
            if (iters >= 3 && residual >= 0.9 * prev_residual) {
                relax = std::max(0.5 * relax, 1.0 / 1024.0);
            }
            prev_residual = residual;
            for (std::size_t r = 0; r < n_roads; ++r) {
                gamma_in[r] += relax * (cand.road_comm[r].packet_loss_rate - gamma_in[r]);
            }
        }
        if (!converged) {
            throw EngineError("coupling fixed point did not converge at t=" +
                              std::to_string(t_s) + " s (residual " + std::to_string(residual) +
                              " after " + std::to_string(iters) + " iterations)");
        }

        StepRecord record = make_record(cand, solution, t_s, iters, residual);
        return {std::move(cand), std::move(record)};
    }

    // Steps from sim_start to sim_end and collects the full trace.
    // Deterministic: identical inputs produce bit-identical traces.
    TraceSet run() const {
        TraceSet trace = empty_trace();
        SimulationState state = initial_state();
        const TimeGrid grid = cfg_.grid();
        for (std::size_t i = 0; i < grid.steps(); ++i) {
            double t = grid.time_at(i);
            std::pair<SimulationState, StepRecord> next;
            try {
                next = step(state, t);
            } catch (const std::exception& e) {
                throw EngineError("step at t=" + std::to_string(t) + " s failed: " + e.what());
            }
            state = std::move(next.first);
            append_record(trace, next.second);
        }
        return trace;
    }

private:
    void build_network() {
        const bool standalone = cfg_.blocks.size() == 1 && cfg_.community_lines.empty();
        block_root_bus_.assign(cfg_.blocks.size(), -1);
        block_bus_range_.assign(cfg_.blocks.size(), {0, 0});
        block_line_range_.assign(cfg_.blocks.size(), {0, 0});

        if (!standalone) {
            net_.buses.push_back({"grid", BusLoad::none});
            bus_names_.push_back("grid");
            grid_bus_ = 0;
        }
        for (std::size_t b = 0; b < cfg_.blocks.size(); ++b) {
            const auto& block = cfg_.blocks[b];
            int first_bus = static_cast<int>(net_.buses.size());
            for (const auto& bus : block.feeder.buses) {
                net_.buses.push_back({block.name + ":" + bus.id, bus.load});
                bus_names_.push_back(net_.buses.back().id);
            }
            block_bus_range_[b] = {first_bus, static_cast<int>(net_.buses.size())};
            block_root_bus_[b] = net_.bus_index(block.name + ":" + block.feeder.slack_bus);
            int first_line = static_cast<int>(net_.lines.size());
            for (const auto& line : block.feeder.lines) {
                net_.lines.push_back({net_.bus_index(block.name + ":" + line.from),
                                      net_.bus_index(block.name + ":" + line.to),
                                      {line.r_ohm, line.x_ohm},
                                      line.limit_w});
                line_names_.push_back(block.name + ":" + line.from + "->" + line.to);
            }
            block_line_range_[b] = {first_line, static_cast<int>(net_.lines.size())};
        }
        for (const auto& line : cfg_.community_lines) {
            auto terminal = [&](const std::string& name) {
                if (name == "grid") return grid_bus_;
                return block_root_bus_[static_cast<std::size_t>(cfg_.block_index(name))];
            };
            net_.lines.push_back({terminal(line.from), terminal(line.to),
                                  {line.r_ohm, line.x_ohm}, line.limit_w});
            line_names_.push_back("community:" + line.from + "->" + line.to);
        }
        net_.slack = standalone ? block_root_bus_[0] : grid_bus_;
        net_.nominal_voltage_v = cfg_.nominal_voltage_v;
        net_.power_base_w = cfg_.power_base_w;
        net_.finalize();

        // Bus indices per load kind for splitting each block load.
        block_load_buses_.assign(cfg_.blocks.size(), {});
        for (std::size_t b = 0; b < cfg_.blocks.size(); ++b) {
            auto [lo, hi] = block_bus_range_[b];
            for (int i = lo; i < hi; ++i) {
                block_load_buses_[b][static_cast<int>(net_.buses[static_cast<std::size_t>(i)].load)]
                    .push_back(i);
            }
        }
    }

    void index_roads() {
        road_inflow_series_.clear();
        roads_into_block_.assign(cfg_.blocks.size(), {});
        roads_out_of_block_.assign(cfg_.blocks.size(), {});
        for (std::size_t r = 0; r < cfg_.roads.size(); ++r) {
            const auto& road = cfg_.roads[r];
            int from = cfg_.block_index(road.from_block);
            int to = cfg_.block_index(road.to_block);
            roads_out_of_block_[static_cast<std::size_t>(from)].push_back(static_cast<int>(r));
            roads_into_block_[static_cast<std::size_t>(to)].push_back(static_cast<int>(r));
            auto it = cfg_.blocks[static_cast<std::size_t>(from)].traffic_out_veh_h.find(road.name);
            road_inflow_series_.push_back(
                it == cfg_.blocks[static_cast<std::size_t>(from)].traffic_out_veh_h.end()
                    ? nullptr
                    : &it->second);
        }
    }

    double road_inflow(std::size_t r, double t_s) const {
        const TimeSeriesProfile* series = road_inflow_series_[r];
        return series != nullptr ? series->value_at(t_s) : 0.0;
    }

    void sweep_transport(const SimulationState& base, SimulationState& cand,
                         const std::vector<double>& gamma_in, double t_s, double dt) const {
        for (std::size_t r = 0; r < cfg_.roads.size(); ++r) {
            double df = mode_ == CouplingMode::energy_transport_comm ? delay_factor(gamma_in[r])
                                                                     : 1.0;
            cand.roads[r] = road_step(base.roads[r], road_inflow(r, t_s), df, cfg_.roads[r], t_s,
                                      dt);
        }
        for (std::size_t b = 0; b < cfg_.blocks.size(); ++b) {
            std::vector<double> inflows, outflows;
            for (int r : roads_into_block_[b]) {
                inflows.push_back(road_outflow(cand.roads[static_cast<std::size_t>(r)], t_s));
            }
            for (int r : roads_out_of_block_[b]) {
                outflows.push_back(road_inflow(static_cast<std::size_t>(r), t_s));
            }
            cand.blocks[b].parking =
                parking_step(base.blocks[b].parking, inflows, outflows, dt);
            double p_i = cfg_.blocks[b].charge_probability.value_at(t_s);
            cand.blocks[b].parking.n_charging =
                charging_count(cand.blocks[b].parking.n_parked, p_i);
        }
    }

    void sweep_comms(SimulationState& cand) const {
        for (std::size_t r = 0; r < cfg_.roads.size(); ++r) {
            const auto& link = cfg_.roads[r].comm;
            double qc = throughput_from_traffic(cand.roads[r].vehicles,
                                                link.packets_per_vehicle_pps);
            cand.road_comm[r] =
                CommState{qc, packet_loss(qc, link.kappa, link.threshold_pps), 0.0};
        }
    }

    PowerFlowSolution sweep_energy(const SimulationState& base, SimulationState& cand, double t_s,
                                   double dt) const {
        std::vector<double> injections(net_.buses.size(), 0.0);
        const WeatherPoint weather = cfg_.weather.at(t_s);
        const double wind_speed = cfg_.weather.wind_speed_mps.value_at(t_s);

        for (std::size_t b = 0; b < cfg_.blocks.size(); ++b) {
            const BlockSpec& spec = cfg_.blocks[b];
            BlockState& blk = cand.blocks[b];
            blk.p_pv_w = pv_power(pv_irradiance(weather), spec.pv);
            blk.p_win_w = wind_power(wind_speed, spec.wind);
            blk.p_bui_w = spec.building_load_w.value_at(t_s);
            blk.p_general_w = spec.general_load_w.value_at(t_s);

            double tower_throughput = 0.0;
            if (mode_ == CouplingMode::energy_only) {
                blk.p_ev_w = spec.prescribed_ev_power_w->value_at(t_s);
                tower_throughput = spec.prescribed_throughput_pps->value_at(t_s);
            } else {
                blk.p_ev_w = ev_charging_power(blk.parking.n_charging, spec.ev_charge_power_w);
                for (int r : roads_into_block_[b]) {
                    tower_throughput += cand.road_comm[static_cast<std::size_t>(r)].throughput_pps;
                }
            }
            blk.comm = CommState{tower_throughput, 0.0, 0.0};
            blk.p_com_w = comm_tower_power(tower_throughput, spec.comm);

            double demand = blk.p_bui_w + blk.p_ev_w + blk.p_com_w + blk.p_general_w;
            blk.battery = battery_step(base.blocks[b].battery, blk.p_pv_w + blk.p_win_w, demand,
                                       spec.battery, dt);

            place_load(injections, b, BusLoad::building, blk.p_bui_w);
            place_load(injections, b, BusLoad::ev, blk.p_ev_w);
            place_load(injections, b, BusLoad::comm, blk.p_com_w);
            place_load(injections, b, BusLoad::general, blk.p_general_w);
            injections[static_cast<std::size_t>(block_root_bus_[b])] +=
                blk.battery.power_w - blk.p_pv_w - blk.p_win_w;
        }

        PowerFlowSolution solution = solve_power_flow(net_, injections, cfg_.nominal_voltage_v);
        for (std::size_t b = 0; b < cfg_.blocks.size(); ++b) {
            BlockState& blk = cand.blocks[b];
            double own = blk.p_bui_w + blk.p_ev_w + blk.p_com_w + blk.p_general_w +
                         blk.battery.power_w - blk.p_pv_w - blk.p_win_w;
            auto [lo, hi] = block_line_range_[b];
            for (int l = lo; l < hi; ++l) {
                const auto& line = net_.lines[static_cast<std::size_t>(l)];
                double current2 = std::norm(solution.line_current_a[static_cast<std::size_t>(l)]);
                own += current2 * line.impedance_ohm.real();
            }
            blk.grid_power_w = own;
        }
        return solution;
    }

    // Splits a block load equally over its buses of the given kind; a block
    // with no such bus carries the load at its root bus.
    void place_load(std::vector<double>& injections, std::size_t b, BusLoad kind,
                    double power_w) const {
        if (power_w == 0.0) return;
        auto it = block_load_buses_[b].find(static_cast<int>(kind));
        if (it == block_load_buses_[b].end() || it->second.empty()) {
            injections[static_cast<std::size_t>(block_root_bus_[b])] += power_w;
            return;
        }
        double share = power_w / static_cast<double>(it->second.size());
        for (int bus : it->second) injections[static_cast<std::size_t>(bus)] += share;
    }

    // Coupling variables: per-block charging count, per-road packet loss,
    // per-block grid power.
    std::vector<double> coupling_vector(const SimulationState& state) const {
        std::vector<double> v;
        v.reserve(state.blocks.size() * 2 + state.road_comm.size());
        for (const auto& blk : state.blocks) v.push_back(blk.parking.n_charging);
        for (const auto& comm : state.road_comm) v.push_back(comm.packet_loss_rate);
        for (const auto& blk : state.blocks) v.push_back(blk.grid_power_w);
        return v;
    }

    // Relative change with a unity floor so near-zero quantities compare
    // absolutely.
    static double max_relative_change(const std::vector<double>& now,
                                      const std::vector<double>& prev) {
        double worst = 0.0;
        for (std::size_t i = 0; i < now.size(); ++i) {
            double scale = std::max({1.0, std::abs(now[i]), std::abs(prev[i])});
            worst = std::max(worst, std::abs(now[i] - prev[i]) / scale);
        }
        return worst;
    }

    StepRecord make_record(const SimulationState& state, const PowerFlowSolution& solution,
                           double t_s, int iters, double residual) const {
        StepRecord rec;
        rec.t_s = t_s;
        rec.coupling_iterations = iters;
        rec.coupling_residual = residual;
        for (std::size_t b = 0; b < state.blocks.size(); ++b) {
            const BlockState& blk = state.blocks[b];
            rec.pv_w.push_back(blk.p_pv_w);
            rec.wind_w.push_back(blk.p_win_w);
            rec.ev_w.push_back(blk.p_ev_w);
            rec.comm_w.push_back(blk.p_com_w);
            rec.building_w.push_back(blk.p_bui_w);
            rec.general_w.push_back(blk.p_general_w);
            rec.soc.push_back(blk.battery.soc);
            rec.battery_w.push_back(blk.battery.power_w);
            rec.parked.push_back(blk.parking.n_parked);
            rec.charging.push_back(blk.parking.n_charging);
            rec.block_grid_w.push_back(blk.grid_power_w);
        }
        rec.community_grid_w = solution.grid_power_w;
        for (std::size_t r = 0; r < state.roads.size(); ++r) {
            const RoadState& road = state.roads[r];
            rec.inflow_veh_h.push_back(road.inflow_times_s.empty() ? 0.0
                                                                   : road.inflow_veh_h.back());
            rec.outflow_veh_h.push_back(mode_ == CouplingMode::energy_only
                                            ? 0.0
                                            : road_outflow(road, t_s));
            rec.velocity_mps.push_back(road.u_ave_mps);
            rec.traffic_flow_veh_h.push_back(road.v_ave_veh_h);
            rec.travel_time_s.push_back(road.t_travel_s);
            rec.vehicles.push_back(road.vehicles);
            rec.throughput_pps.push_back(state.road_comm[r].throughput_pps);
            rec.packet_loss_rate.push_back(state.road_comm[r].packet_loss_rate);
        }
        for (std::size_t i = 0; i < solution.bus_voltage_v.size(); ++i) {
            rec.bus_voltage_pu.push_back(std::abs(solution.bus_voltage_v[i]) /
                                         cfg_.nominal_voltage_v);
        }
        rec.line_power_w = solution.line_active_power_w;
        return rec;
    }

    TraceSet empty_trace() const {
        TraceSet trace;
        std::vector<std::string> block_names;
        for (const auto& block : cfg_.blocks) block_names.push_back(block.name);
        std::vector<std::string> road_names;
        for (const auto& road : cfg_.roads) road_names.push_back(road.name);
        std::vector<std::string> grid_elements = block_names;
        grid_elements.push_back("community");

        for (const char* q : {"pv_power", "wind_power", "ev_power", "comm_power", "building_load",
                              "general_load", "soc", "battery_power", "parked", "charging"}) {
            trace.channels[q].elements = block_names;
        }
        trace.channels["grid_power"].elements = grid_elements;
        for (const char* q : {"inflow", "outflow", "velocity", "traffic_flow", "travel_time",
                              "vehicles", "throughput", "packet_loss"}) {
            trace.channels[q].elements = road_names;
        }
        trace.channels["bus_voltage_pu"].elements = bus_names_;
        trace.channels["line_power"].elements = line_names_;
        trace.channels["coupling_iters"].elements = {"engine"};
        trace.channels["coupling_residual"].elements = {"engine"};
        return trace;
    }

    static void append_record(TraceSet& trace, const StepRecord& rec) {
        trace.times_s.push_back(rec.t_s);
        trace.channels["pv_power"].rows.push_back(rec.pv_w);
        trace.channels["wind_power"].rows.push_back(rec.wind_w);
        trace.channels["ev_power"].rows.push_back(rec.ev_w);
        trace.channels["comm_power"].rows.push_back(rec.comm_w);
        trace.channels["building_load"].rows.push_back(rec.building_w);
        trace.channels["general_load"].rows.push_back(rec.general_w);
        trace.channels["soc"].rows.push_back(rec.soc);
        trace.channels["battery_power"].rows.push_back(rec.battery_w);
        trace.channels["parked"].rows.push_back(rec.parked);
        trace.channels["charging"].rows.push_back(rec.charging);
        std::vector<double> grid = rec.block_grid_w;
        grid.push_back(rec.community_grid_w);
        trace.channels["grid_power"].rows.push_back(std::move(grid));
        trace.channels["inflow"].rows.push_back(rec.inflow_veh_h);
        trace.channels["outflow"].rows.push_back(rec.outflow_veh_h);
        trace.channels["velocity"].rows.push_back(rec.velocity_mps);
        trace.channels["traffic_flow"].rows.push_back(rec.traffic_flow_veh_h);
        trace.channels["travel_time"].rows.push_back(rec.travel_time_s);
        trace.channels["vehicles"].rows.push_back(rec.vehicles);
        trace.channels["throughput"].rows.push_back(rec.throughput_pps);
        trace.channels["packet_loss"].rows.push_back(rec.packet_loss_rate);
        trace.channels["bus_voltage_pu"].rows.push_back(rec.bus_voltage_pu);
        trace.channels["line_power"].rows.push_back(rec.line_power_w);
        trace.channels["coupling_iters"].rows.push_back(
            {static_cast<double>(rec.coupling_iterations)});
        trace.channels["coupling_residual"].rows.push_back({rec.coupling_residual});
    }

    ScenarioConfig cfg_;
    CouplingMode mode_;
    FeederNetwork net_;
    std::vector<std::string> bus_names_;
    std::vector<std::string> line_names_;
    int grid_bus_ = -1;
    std::vector<int> block_root_bus_;
    std::vector<std::pair<int, int>> block_bus_range_;
    std::vector<std::pair<int, int>> block_line_range_;
    std::vector<std::map<int, std::vector<int>>> block_load_buses_;
    std::vector<std::vector<int>> roads_into_block_;
    std::vector<std::vector<int>> roads_out_of_block_;
    std::vector<const TimeSeriesProfile*> road_inflow_series_;
};

// Convenience wrapper matching the run(config, mode) operation.
inline TraceSet run(const ScenarioConfig& cfg, CouplingMode mode) {
    return Engine(cfg, mode).run();
}

} // namespace gridmesh

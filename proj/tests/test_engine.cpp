#include "gridmesh/engine.hpp"

#include "support/fixtures.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace gridmesh;

namespace {

// Straight-line composition of the module operations for one step of the
// tiny one-block/one-road scenario, written independently of Engine::step.
struct HandStep {
    double parked, charging, p_pv, p_win, p_ev, p_com, p_bui;
    double battery_power, battery_soc;
    double road_vehicles, road_velocity_mps, road_travel_s, road_outflow_veh_h;
    double throughput, gamma;
    double grid_total;
};

HandStep hand_compose(const ScenarioConfig& cfg, double t, double dt) {
    const BlockSpec& blk = cfg.blocks[0];
    const RoadSpec& road = cfg.roads[0];

    // transport
    RoadState road0 = RoadState::initial(road);
    double q_in = blk.traffic_out_veh_h.at("loop").value_at(t);
    RoadState road1 = road_step(road0, q_in, 1.0, road, t, dt);
    double q_out = road_outflow(road1, t);
    BlockParking parking0{blk.initial_ev_count, 0.0};
    BlockParking parking1 = parking_step(parking0, std::vector<double>{q_out},
                                         std::vector<double>{q_in}, dt);
    double n_char = charging_count(parking1.n_parked, blk.charge_probability.value_at(t));

    // comms
    double qc = throughput_from_traffic(road1.vehicles, road.comm.packets_per_vehicle_pps);
    double gamma = packet_loss(qc, road.comm.kappa, road.comm.threshold_pps);

    // energy
    WeatherPoint w = cfg.weather.at(t);
    double p_pv = pv_power(pv_irradiance(w), blk.pv);
    double p_win = wind_power(cfg.weather.wind_speed_mps.value_at(t), blk.wind);
    double p_bui = blk.building_load_w.value_at(t);
    double p_ev = ev_charging_power(n_char, blk.ev_charge_power_w);
    double p_com = comm_tower_power(qc, blk.comm);
    double demand = p_bui + p_ev + p_com;
    BatteryState battery0{blk.battery.initial_soc, BatteryMode::standby, 0.0};
    BatteryState battery1 = battery_step(battery0, p_pv + p_win, demand, blk.battery, dt);

    FeederNetwork net;
    net.buses = {{"n0", BusLoad::none}, {"n1", BusLoad::building}, {"n2", BusLoad::ev}};
    net.lines = {{0, 1, {0.01, 0.01}, 1e5}, {0, 2, {0.01, 0.0}, 1e5}};
    net.slack = 0;
    net.nominal_voltage_v = cfg.nominal_voltage_v;
    net.power_base_w = cfg.power_base_w;
    net.finalize();
    std::vector<double> injections(3, 0.0);
    injections[1] = p_bui;
    injections[2] = p_ev;
    injections[0] = p_com + battery1.power_w - p_pv - p_win;  // no comm bus: root carries it
    PowerFlowSolution sol = solve_power_flow(net, injections, cfg.nominal_voltage_v);

    HandStep h;
    h.parked = parking1.n_parked;
    h.charging = n_char;
    h.p_pv = p_pv;
    h.p_win = p_win;
    h.p_ev = p_ev;
    h.p_com = p_com;
    h.p_bui = p_bui;
    h.battery_power = battery1.power_w;
    h.battery_soc = battery1.soc;
    h.road_vehicles = road1.vehicles;
    h.road_velocity_mps = road1.u_ave_mps;
    h.road_travel_s = road1.t_travel_s;
    h.road_outflow_veh_h = q_out;
    h.throughput = qc;
    h.gamma = gamma;
    h.grid_total = sol.grid_power_w;
    return h;
}

} // namespace

TEST_CASE("one engine step matches the hand-composed module sequence") {
    ScenarioConfig cfg = fixtures::tiny_scenario();
    Engine engine(cfg, CouplingMode::energy_transport);
    auto [state, record] = engine.step(engine.initial_state(), 0.0);

    HandStep h = hand_compose(cfg, 0.0, cfg.dt_s);
    auto close = [](double a, double b) {
        return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
    };
    REQUIRE(close(record.parked[0], h.parked));
    REQUIRE(close(record.charging[0], h.charging));
    REQUIRE(close(record.pv_w[0], h.p_pv));
    REQUIRE(close(record.wind_w[0], h.p_win));
    REQUIRE(close(record.ev_w[0], h.p_ev));
    REQUIRE(close(record.comm_w[0], h.p_com));
    REQUIRE(close(record.building_w[0], h.p_bui));
    REQUIRE(close(record.battery_w[0], h.battery_power));
    REQUIRE(close(record.soc[0], h.battery_soc));
    REQUIRE(close(record.vehicles[0], h.road_vehicles));
    REQUIRE(close(record.velocity_mps[0], h.road_velocity_mps));
    REQUIRE(close(record.travel_time_s[0], h.road_travel_s));
    REQUIRE(close(record.outflow_veh_h[0], h.road_outflow_veh_h));
    REQUIRE(close(record.throughput_pps[0], h.throughput));
    REQUIRE(close(record.packet_loss_rate[0], h.gamma));
    REQUIRE(close(record.community_grid_w, h.grid_total));
    REQUIRE(record.coupling_residual < cfg.coupling_tolerance);
}

TEST_CASE("energy-only mode with zero inputs draws the negated generation") {
    ScenarioConfig cfg = fixtures::tiny_scenario();
    cfg.blocks[0].building_load_w = TimeSeriesProfile::constant(0.0);
    cfg.blocks[0].prescribed_ev_power_w = TimeSeriesProfile::constant(0.0);
    cfg.blocks[0].prescribed_throughput_pps = TimeSeriesProfile::constant(0.0);
    cfg.sim_end_s = 600.0;

    TraceSet trace = run(cfg, CouplingMode::energy_only);
    const TraceChannel& grid = trace.channel("grid_power");
    const TraceChannel& battery = trace.channel("battery_power");
    const TraceChannel& pv = trace.channel("pv_power");
    const TraceChannel& wind = trace.channel("wind_power");
    for (std::size_t i = 0; i < trace.times_s.size(); ++i) {
        double expected = battery.rows[i][0] - pv.rows[i][0] - wind.rows[i][0];
        REQUIRE(grid.column("community")[i] == Catch::Approx(expected).margin(1e-9));
        REQUIRE(grid.column("community")[i] < 0.0);
    }
}

TEST_CASE("energy-only mode requires the prescribed series") {
    ScenarioConfig cfg = fixtures::tiny_scenario();
    cfg.blocks[0].prescribed_ev_power_w.reset();
    REQUIRE_THROWS_AS(Engine(cfg, CouplingMode::energy_only), EngineError);
    REQUIRE_NOTHROW(Engine(cfg, CouplingMode::energy_transport));
}

TEST_CASE("full coupling with zero kappa reproduces the transport mode bit for bit") {
    ScenarioConfig cfg = fixtures::tiny_scenario();
    // drive the road hard enough that gamma would matter if kappa were nonzero
    cfg.blocks[0].traffic_out_veh_h["loop"] = TimeSeriesProfile::constant(300.0);
    for (auto& road : cfg.roads) road.comm.kappa = 0.0;

    TraceSet et = run(cfg, CouplingMode::energy_transport);
    TraceSet etc = run(cfg, CouplingMode::energy_transport_comm);
    REQUIRE(et == etc);
}

TEST_CASE("nonzero kappa separates the coupling modes") {
    ScenarioConfig cfg = fixtures::tiny_scenario();
    cfg.blocks[0].traffic_out_veh_h["loop"] = TimeSeriesProfile::constant(300.0);
    cfg.roads[0].comm.threshold_pps = 15.0;  // loaded road sits above this
    cfg.sim_end_s = 7200.0;

    TraceSet et = run(cfg, CouplingMode::energy_transport);
    TraceSet etc = run(cfg, CouplingMode::energy_transport_comm);
    REQUIRE(!(et.channel("packet_loss") == etc.channel("packet_loss")));
    // communication degradation can only slow the road down
    auto u_et = et.channel("velocity").column("loop");
    auto u_etc = etc.channel("velocity").column("loop");
    bool strictly_slower = false;
    for (std::size_t i = 0; i < u_et.size(); ++i) {
        REQUIRE(u_etc[i] <= u_et[i] + 1e-9);
        if (u_etc[i] < u_et[i] - 1e-9) strictly_slower = true;
    }
    REQUIRE(strictly_slower);
}

TEST_CASE("repeated runs are bit-identical") {
    ScenarioConfig cfg = fixtures::tiny_scenario();
    TraceSet a = run(cfg, CouplingMode::energy_transport_comm);
    TraceSet b = run(cfg, CouplingMode::energy_transport_comm);
    REQUIRE(a == b);
}

TEST_CASE("coupling non-convergence is reported with the residual") {
    ScenarioConfig cfg = fixtures::tiny_scenario();
    cfg.coupling_max_iters = 1;  // the first step cannot settle in one sweep
    Engine engine(cfg, CouplingMode::energy_transport);
    try {
        engine.step(engine.initial_state(), 0.0);
        FAIL("expected EngineError");
    } catch (const EngineError& e) {
        REQUIRE(std::string(e.what()).find("residual") != std::string::npos);
    }
}

TEST_CASE("a zero-length window produces an empty trace without error") {
    ScenarioConfig cfg = fixtures::tiny_scenario();
    cfg.sim_end_s = cfg.sim_start_s;
    TraceSet trace = run(cfg, CouplingMode::energy_transport);
    REQUIRE(trace.times_s.empty());
    REQUIRE(trace.channel("grid_power").rows.empty());
}

TEST_CASE("coupling residual is recorded and below tolerance at every step") {
    ScenarioConfig cfg = fixtures::tiny_scenario();
    cfg.blocks[0].traffic_out_veh_h["loop"] = TimeSeriesProfile::constant(250.0);
    TraceSet trace = run(cfg, CouplingMode::energy_transport_comm);
    for (const auto& row : trace.channel("coupling_residual").rows) {
        REQUIRE(row[0] < cfg.coupling_tolerance);
    }
    for (const auto& row : trace.channel("coupling_iters").rows) {
        REQUIRE(row[0] <= cfg.coupling_max_iters);
    }
}

TEST_CASE("freezing transport inputs to a prescribed series reproduces energy-only") {
    ScenarioConfig cfg = fixtures::tiny_scenario();
    cfg.blocks[0].traffic_out_veh_h["loop"] = TimeSeriesProfile::constant(120.0);
    TraceSet et = run(cfg, CouplingMode::energy_transport);

    // Freeze the closed-loop charging and throughput trajectories as the
    // prescribed inputs of the energy-only mode.
    ScenarioConfig frozen = cfg;
    TimeSeriesProfile ev_power;
    ev_power.interp = Interp::step_hold;
    ev_power.times = et.times_s;
    ev_power.values = et.channel("ev_power").column("blk");
    TimeSeriesProfile throughput;
    throughput.interp = Interp::step_hold;
    throughput.times = et.times_s;
    auto tower = et.channel("throughput").column("loop");
    throughput.values = tower;  // single self-loop road feeds the tower
    frozen.blocks[0].prescribed_ev_power_w = ev_power;
    frozen.blocks[0].prescribed_throughput_pps = throughput;

    TraceSet e = run(frozen, CouplingMode::energy_only);
    auto grid_et = et.channel("grid_power").column("community");
    auto grid_e = e.channel("grid_power").column("community");
    for (std::size_t i = 0; i < grid_et.size(); ++i) {
        REQUIRE(std::abs(grid_e[i] - grid_et[i]) <=
                cfg.coupling_tolerance * std::max(1.0, std::abs(grid_et[i])));
    }
}

TEST_CASE("trace comparison flags deviations with timestamps") {
    ScenarioConfig cfg = fixtures::tiny_scenario();
    TraceSet a = run(cfg, CouplingMode::energy_transport);
    DeviationReport self = compare(a, a, "grid_power");
    REQUIRE(self.mean_pct == 0.0);
    REQUIRE(self.peak_pct == 0.0);
}

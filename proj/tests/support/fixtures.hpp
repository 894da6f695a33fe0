#pragma once

// Shared test helpers: source-tree paths, unique temp directories, and a
// minimal in-code scenario used by the engine tests.

#include "gridmesh/scenario.hpp"

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

#ifndef GRIDMESH_SOURCE_DIR
#define GRIDMESH_SOURCE_DIR "."
#endif

namespace fixtures {

inline std::filesystem::path source_dir() { return GRIDMESH_SOURCE_DIR; }
inline std::filesystem::path scenarios_dir() { return source_dir() / "scenarios"; }

inline std::filesystem::path fresh_temp_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("gridmesh_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(dir);
    return dir;
}

// One block with a three-bus feeder and a self-loop road; constant inputs.
// Valid for every coupling mode.
inline gridmesh::ScenarioConfig tiny_scenario() {
    using namespace gridmesh;
    ScenarioConfig cfg;
    cfg.sim_start_s = 0.0;
    cfg.sim_end_s = 3600.0;
    cfg.dt_s = 60.0;
    cfg.coupling_tolerance = 1e-8;
    cfg.coupling_max_iters = 50;
    cfg.nominal_voltage_v = 1000.0;
    cfg.power_base_w = 1000.0;

    cfg.weather.direct_normal_w_m2 = TimeSeriesProfile::constant(500.0);
    cfg.weather.sky_diffuse_w_m2 = TimeSeriesProfile::constant(100.0);
    cfg.weather.ground_diffuse_w_m2 = TimeSeriesProfile::constant(50.0);
    cfg.weather.wind_speed_mps = TimeSeriesProfile::constant(6.0);
    cfg.weather.cos_incidence = TimeSeriesProfile::constant(0.8);

    BlockSpec block;
    block.name = "blk";
    block.pv.arrays.push_back({10.0, 1.0, 0.2, 0.95});
    block.wind.count = 1;
    block.wind.scale = 1.0;
    block.wind.inverter_efficiency = 1.0;
    block.wind.curve_speed_mps = {3.0, 12.0, 25.0};
    block.wind.curve_power_w = {0.0, 900.0, 900.0};
    block.battery = BatteryParams{1000.0, 500.0, 500.0, 0.0, 0.0, 0.5};
    block.initial_ev_count = 50.0;
    block.ev_charge_power_w = 10.0;
    block.charge_probability = TimeSeriesProfile::constant(0.1);
    block.building_load_w = TimeSeriesProfile::constant(800.0);
    block.general_load_w = TimeSeriesProfile::constant(0.0);
    block.comm = CommTowerParams{1, 0.4, 1e-7, 100.0, 2.0};
    block.feeder.slack_bus = "n0";
    block.feeder.buses = {{"n0", BusLoad::none}, {"n1", BusLoad::building}, {"n2", BusLoad::ev}};
    block.feeder.lines = {{"n0", "n1", 0.01, 0.01, 1e5}, {"n0", "n2", 0.01, 0.0, 1e5}};
    block.traffic_out_veh_h["loop"] = TimeSeriesProfile::constant(30.0);
    block.prescribed_ev_power_w = TimeSeriesProfile::constant(100.0);
    block.prescribed_throughput_pps = TimeSeriesProfile::constant(50.0);
    cfg.blocks.push_back(std::move(block));

    RoadSpec road;
    road.name = "loop";
    road.from_block = "blk";
    road.to_block = "blk";
    road.length_m = 1000.0;
    road.capacity_veh_h = 350.0;
    road.design_speed_mps = 30.0;
    road.alpha1 = 1.0;
    road.alpha2 = 1.88;
    road.alpha3 = 4.85;
    road.comm = CommLinkParams{0.03, 80.0, 5.0};
    cfg.roads.push_back(std::move(road));
    return cfg;
}

} // namespace fixtures

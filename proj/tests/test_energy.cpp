#include "gridmesh/energy.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace gridmesh;

TEST_CASE("pv irradiance sums clamped direct and diffuse components") {
    // 0.8 * 500 + 100 + 50
    REQUIRE(pv_irradiance({500.0, 100.0, 50.0, 0.8}) == Catch::Approx(550.0));
    REQUIRE(pv_irradiance({500.0, 100.0, 50.0, -0.2}) == Catch::Approx(150.0));
    REQUIRE(pv_irradiance({0.0, 0.0, 0.0, 1.0}) == 0.0);
}

TEST_CASE("pv power follows the array parameters") {
    PvParams params;
    params.arrays.push_back({100.0, 1.0, 0.2, 0.95});
    REQUIRE(pv_power(1000.0, params) == Catch::Approx(19000.0));
    REQUIRE(pv_power(0.0, params) == 0.0);

    PvParams two = params;
    two.arrays.push_back(params.arrays[0]);
    REQUIRE(pv_power(1000.0, two) == Catch::Approx(2.0 * pv_power(1000.0, params)));
}

TEST_CASE("pv power is monotone in irradiance") {
    PvParams params;
    params.arrays.push_back({40.0, 0.9, 0.18, 0.97});
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> g(0.0, 1200.0);
    for (int i = 0; i < 200; ++i) {
        double a = g(rng), b = g(rng);
        if (a > b) std::swap(a, b);
        REQUIRE(pv_power(a, params) <= pv_power(b, params));
    }
}

TEST_CASE("wind power interpolates the curve and is zero outside it") {
    WindParams params;
    params.count = 1;
    params.scale = 1.0;
    params.inverter_efficiency = 0.9;
    params.curve_speed_mps = {3.0, 12.0, 25.0};
    params.curve_power_w = {0.0, 1e6, 1e6};

    REQUIRE(wind_power(1.0, params) == 0.0);   // below cut-in
    REQUIRE(wind_power(30.0, params) == 0.0);  // above cut-out
    REQUIRE(wind_power(12.0, params) == Catch::Approx(900000.0));
    REQUIRE(wind_power(7.5, params) == Catch::Approx(0.5 * 1e6 * 0.9));

    WindParams two = params;
    two.count = 2;
    REQUIRE(wind_power(9.0, two) == Catch::Approx(2.0 * wind_power(9.0, params)));
}

TEST_CASE("wind power is monotone for a nondecreasing curve") {
    WindParams params;
    params.count = 3;
    params.inverter_efficiency = 0.95;
    params.curve_speed_mps = {3.0, 8.0, 12.0, 25.0};
    params.curve_power_w = {0.0, 4e5, 1e6, 1e6};
    std::mt19937 rng(12);
    std::uniform_real_distribution<double> s(3.0, 25.0);
    for (int i = 0; i < 200; ++i) {
        double a = s(rng), b = s(rng);
        if (a > b) std::swap(a, b);
        REQUIRE(wind_power(a, params) <= wind_power(b, params));
    }
}

TEST_CASE("battery respects SOC bounds at the rails") {
    BatteryParams params{10000.0, 3000.0, 3000.0, 0.0, 0.0, 0.5};

    BatteryState full{1.0, BatteryMode::standby, 0.0};
    BatteryState next = battery_step(full, 5000.0, 0.0, params, 3600.0);
    REQUIRE(next.mode == BatteryMode::standby);
    REQUIRE(next.power_w == 0.0);

    BatteryState empty{0.0, BatteryMode::standby, 0.0};
    next = battery_step(empty, 0.0, 5000.0, params, 3600.0);
    REQUIRE(next.mode == BatteryMode::standby);
    REQUIRE(next.power_w == 0.0);
}

TEST_CASE("battery charges at the rated limit and integrates SOC") {
    BatteryParams params{10000.0, 3000.0, 3000.0, 0.0, 0.0, 0.5};
    BatteryState state{0.5, BatteryMode::standby, 0.0};
    BatteryState next = battery_step(state, 4000.0, 0.0, params, 3600.0);
    REQUIRE(next.mode == BatteryMode::charging);
    REQUIRE(next.power_w == Catch::Approx(3000.0));
    REQUIRE(next.soc == Catch::Approx(0.8));
}

TEST_CASE("battery SOC stays in bounds over random sequences") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> power(-8000.0, 8000.0);
    std::uniform_real_distribution<double> capacity(500.0, 20000.0);
    std::uniform_real_distribution<double> soc0(0.0, 1.0);
    std::uniform_real_distribution<double> dt(30.0, 7200.0);
    for (int trial = 0; trial < 500; ++trial) {
        BatteryParams params{capacity(rng), 3000.0, 2500.0, 0.0, 0.0, 0.5};
        BatteryState state{soc0(rng), BatteryMode::standby, 0.0};
        for (int step = 0; step < 40; ++step) {
            double renewable = std::max(0.0, power(rng));
            double demand = std::max(0.0, power(rng));
            state = battery_step(state, renewable, demand, params, dt(rng));
            REQUIRE(state.soc >= 0.0);
            REQUIRE(state.soc <= 1.0);
            REQUIRE(std::abs(state.power_w) <= 3000.0);
            if (state.mode == BatteryMode::standby) REQUIRE(state.power_w == 0.0);
            if (state.mode == BatteryMode::charging) REQUIRE(state.power_w > 0.0);
            if (state.mode == BatteryMode::discharging) REQUIRE(state.power_w < 0.0);
        }
    }
}

TEST_CASE("battery hysteresis thresholds gate both directions") {
    BatteryParams params{10000.0, 3000.0, 3000.0, 500.0, 800.0, 0.5};
    BatteryState state{0.5, BatteryMode::standby, 0.0};
    // surplus below the charge threshold: stand by
    REQUIRE(battery_step(state, 1000.0, 600.0, params, 60.0).mode == BatteryMode::standby);
    // deficit below the discharge threshold: stand by
    REQUIRE(battery_step(state, 0.0, 700.0, params, 60.0).mode == BatteryMode::standby);
    REQUIRE(battery_step(state, 2000.0, 600.0, params, 60.0).mode == BatteryMode::charging);
    REQUIRE(battery_step(state, 0.0, 900.0, params, 60.0).mode == BatteryMode::discharging);
}

TEST_CASE("ev charging power is linear in the charging count") {
    REQUIRE(ev_charging_power(40.0, 7000.0) == Catch::Approx(280000.0));
    REQUIRE(ev_charging_power(0.0, 7000.0) == 0.0);
    REQUIRE(ev_charging_power(80.0, 7000.0) == Catch::Approx(2.0 * ev_charging_power(40.0, 7000.0)));
}

TEST_CASE("comm tower power matches the transmission model") {
    CommTowerParams params{1, 2.0, 0.01, 10.0, 2.0};
    REQUIRE(comm_tower_power(100.0, params) == Catch::Approx(500.0));
    REQUIRE(comm_tower_power(0.0, params) == 0.0);

    CommTowerParams alpha0 = params;
    alpha0.path_loss_exponent = 0.0;
    alpha0.distance_m = 12345.0;
    REQUIRE(comm_tower_power(100.0, alpha0) ==
            Catch::Approx(2.0 * 100.0 * 2.0 + 100.0 * 0.01));
}

TEST_CASE("comm tower power is linear in throughput") {
    CommTowerParams params{2, 0.5, 1e-4, 200.0, 2.3};
    double p1 = comm_tower_power(123.0, params);
    double p2 = comm_tower_power(246.0, params);
    REQUIRE(p2 == Catch::Approx(2.0 * p1));
}

#include "gridmesh/powerflow.hpp"

#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <random>

using namespace gridmesh;
using cd = std::complex<double>;

namespace {

FeederNetwork chain(const std::vector<cd>& impedances) {
    FeederNetwork net;
    net.buses.push_back({"b0", BusLoad::none});
    for (std::size_t i = 0; i < impedances.size(); ++i) {
        net.buses.push_back({"b" + std::to_string(i + 1), BusLoad::general});
        net.lines.push_back(
            {static_cast<int>(i), static_cast<int>(i + 1), impedances[i], 1e9});
    }
    net.slack = 0;
    net.nominal_voltage_v = 1.0;
    net.power_base_w = 1.0;
    net.finalize();
    return net;
}

// KCL residual at every non-slack bus, recomputed from the returned
// solution only.
double worst_kcl_residual(const FeederNetwork& net, const std::vector<double>& injections,
                          const PowerFlowSolution& sol) {
    double worst = 0.0;
    for (std::size_t bus = 0; bus < net.buses.size(); ++bus) {
        if (static_cast<int>(bus) == net.slack) continue;
        cd into{0.0, 0.0};
        for (std::size_t l = 0; l < net.lines.size(); ++l) {
            if (net.lines[l].to == static_cast<int>(bus)) into += sol.line_current_a[l];
            if (net.lines[l].from == static_cast<int>(bus)) into -= sol.line_current_a[l];
        }
        cd load = std::conj(cd{injections[bus], 0.0} / sol.bus_voltage_v[bus]);
        worst = std::max(worst, std::abs(into - load));
    }
    return worst * net.nominal_voltage_v / net.power_base_w;  // amps -> pu
}

double worst_line_equation_residual(const FeederNetwork& net, const PowerFlowSolution& sol) {
    double worst = 0.0;
    for (std::size_t l = 0; l < net.lines.size(); ++l) {
        cd lhs = sol.bus_voltage_v[static_cast<std::size_t>(net.lines[l].from)] -
                 sol.bus_voltage_v[static_cast<std::size_t>(net.lines[l].to)];
        cd rhs = net.lines[l].impedance_ohm * sol.line_current_a[l];
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst / net.nominal_voltage_v;
}

double loss_sum(const FeederNetwork& net, const PowerFlowSolution& sol) {
    double total = 0.0;
    for (std::size_t l = 0; l < net.lines.size(); ++l) {
        total += std::norm(sol.line_current_a[l]) * net.lines[l].impedance_ohm.real();
    }
    return total;
}

} // namespace

TEST_CASE("unloaded network stays at the slack voltage") {
    FeederNetwork net = chain({cd{0.01, 0.02}, cd{0.02, 0.01}, cd{0.01, 0.0}});
    std::vector<double> injections(net.buses.size(), 0.0);
    PowerFlowSolution sol = solve_power_flow(net, injections, 1.0);
    for (const auto& v : sol.bus_voltage_v) REQUIRE(v == cd{1.0, 0.0});
    for (const auto& i : sol.line_current_a) REQUIRE(std::abs(i) == 0.0);
    REQUIRE(sol.grid_power_w == 0.0);
}

TEST_CASE("doubling impedances changes nothing when no load flows") {
    FeederNetwork net = chain({cd{0.01, 0.0}, cd{0.03, 0.01}});
    FeederNetwork doubled = chain({cd{0.02, 0.0}, cd{0.06, 0.02}});
    std::vector<double> injections(net.buses.size(), 0.0);
    PowerFlowSolution a = solve_power_flow(net, injections, 1.0);
    PowerFlowSolution b = solve_power_flow(doubled, injections, 1.0);
    REQUIRE(a.bus_voltage_v == b.bus_voltage_v);
    REQUIRE(a.grid_power_w == b.grid_power_w);
}

TEST_CASE("two-bus load matches the scalar bisection oracle") {
    FeederNetwork net = chain({cd{0.01, 0.0}});
    std::vector<double> injections{0.0, 0.1};
    PowerFlowSolution sol = solve_power_flow(net, injections, 1.0);

    oracles::TwoBusResult expected = oracles::two_bus_bisection(0.01, 0.1, 1.0);
    REQUIRE(std::abs(sol.bus_voltage_v[1].real() - expected.v2) < 1e-8);
    REQUIRE(std::abs(sol.bus_voltage_v[1].imag()) < 1e-10);
    REQUIRE(std::abs(sol.grid_power_w - expected.grid_power) < 1e-8);
    // grid draw = load + I^2 R line loss, within the sweep's 1e-8 voltage tolerance
    REQUIRE(sol.grid_power_w == Catch::Approx(0.1 + loss_sum(net, sol)).margin(1e-8));
}

TEST_CASE("random small radial networks match the Newton oracle") {
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> bus_count(2, 4);
    std::uniform_real_distribution<double> resistance(0.002, 0.03);
    std::uniform_real_distribution<double> reactance(0.0, 0.03);
    std::uniform_real_distribution<double> load(0.0, 0.15);
    std::uniform_int_distribution<int> parent_pick(0, 10);

    for (int trial = 0; trial < 25; ++trial) {
        int n = bus_count(rng);
        FeederNetwork net;
        net.nominal_voltage_v = 1.0;
        net.power_base_w = 1.0;
        net.slack = 0;
        net.buses.push_back({"b0", BusLoad::none});
        for (int i = 1; i < n; ++i) {
            net.buses.push_back({"b" + std::to_string(i), BusLoad::general});
            int parent = parent_pick(rng) % i;
            net.lines.push_back({parent, i, cd{resistance(rng), reactance(rng)}, 1e9});
        }
        net.finalize();
        std::vector<double> injections(static_cast<std::size_t>(n), 0.0);
        for (int i = 1; i < n; ++i) injections[static_cast<std::size_t>(i)] = load(rng);

        PowerFlowSolution sweep = solve_power_flow(net, injections, 1.0);
        oracles::NewtonResult newton = oracles::newton_power_flow(net, injections, 1.0);
        REQUIRE(newton.converged);
        for (std::size_t i = 0; i < net.buses.size(); ++i) {
            REQUIRE(std::abs(sweep.bus_voltage_v[i] - newton.voltage[i]) < 1e-8);
        }
        REQUIRE(std::abs(sweep.grid_power_w - newton.grid_power) < 1e-8);
    }
}

TEST_CASE("solution satisfies KCL, the line equation, and power balance") {
    std::mt19937 rng(123);
    std::uniform_real_distribution<double> load(0.0, 0.12);
    FeederNetwork net = chain({cd{0.01, 0.02}, cd{0.015, 0.01}, cd{0.02, 0.0}});
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> injections(net.buses.size(), 0.0);
        double total = 0.0;
        for (std::size_t i = 1; i < injections.size(); ++i) {
            injections[i] = load(rng);
            total += injections[i];
        }
        PowerFlowSolution sol = solve_power_flow(net, injections, 1.0);
        REQUIRE(worst_kcl_residual(net, injections, sol) < 1e-6);
        REQUIRE(worst_line_equation_residual(net, sol) < 1e-9);
        REQUIRE(std::abs(sol.grid_power_w - (total + loss_sum(net, sol))) < 1e-6);
    }
}

TEST_CASE("generation at a bus lowers the grid draw") {
    FeederNetwork net = chain({cd{0.01, 0.0}, cd{0.01, 0.0}});
    std::vector<double> injections{0.0, 0.05, -0.02};
    PowerFlowSolution sol = solve_power_flow(net, injections, 1.0);
    REQUIRE(sol.grid_power_w < 0.05);
    REQUIRE(sol.grid_power_w == Catch::Approx(0.03 + loss_sum(net, sol)).margin(1e-9));
}

TEST_CASE("non-radial networks are rejected at construction") {
    FeederNetwork loop;
    loop.buses = {{"a", BusLoad::none}, {"b", BusLoad::none}, {"c", BusLoad::none}};
    loop.lines = {{0, 1, cd{0.01, 0.0}, 1e9},
                  {1, 2, cd{0.01, 0.0}, 1e9},
                  {2, 0, cd{0.01, 0.0}, 1e9}};
    loop.slack = 0;
    REQUIRE_THROWS_AS(loop.finalize(), PowerFlowError);

    FeederNetwork disconnected;
    disconnected.buses = {{"a", BusLoad::none}, {"b", BusLoad::none}, {"c", BusLoad::none}};
    disconnected.lines = {{0, 1, cd{0.01, 0.0}, 1e9}, {0, 1, cd{0.02, 0.0}, 1e9}};
    disconnected.slack = 0;
    REQUIRE_THROWS_AS(disconnected.finalize(), PowerFlowError);
}

TEST_CASE("infeasible loading reports non-convergence") {
    FeederNetwork net = chain({cd{0.1, 0.0}});
    std::vector<double> injections{0.0, 10.0};  // far beyond maximum transferable power
    REQUIRE_THROWS_AS(solve_power_flow(net, injections, 1.0), PowerFlowError);
}

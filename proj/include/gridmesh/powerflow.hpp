#pragma once

// Radial distribution power flow by backward-forward sweep.
//
// Buses carry constant active-power injections (positive = consumption);
// the slack bus holds a fixed voltage and supplies the remainder. The
// backward pass accumulates branch currents from the leaves with each load
// current re-evaluated at the latest voltage; the forward pass updates
// voltages over each line's impedance. Converged when the largest voltage
// change falls below 1e-8 of the voltage base.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridmesh {

enum class BusLoad { none, building, ev, general, comm };

inline const char* to_string(BusLoad k) {
    switch (k) {
        case BusLoad::building: return "building";
        case BusLoad::ev: return "ev";
        case BusLoad::general: return "general";
        case BusLoad::comm: return "comm";
        default: return "none";
    }
}

struct PowerFlowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FeederNetwork {
    struct Bus {
        std::string id;
        BusLoad load = BusLoad::none;
    };
    struct Line {
        int from = -1;
        int to = -1;
        std::complex<double> impedance_ohm{0.0, 0.0};
        double limit_w = 0.0;  // active-power rating P*
    };

    std::vector<Bus> buses;
    std::vector<Line> lines;
    int slack = 0;
    double nominal_voltage_v = 1.0;  // voltage base
    double power_base_w = 1.0;       // power base for residual thresholds

    // Derived by finalize(): traversal order from the slack plus, for each
    // bus, its parent bus and the line reaching it (-1 at the slack). Lines
    // are reoriented parent -> child.
    std::vector<int> order;
    std::vector<int> parent_bus;
    std::vector<int> parent_line;

    int bus_index(const std::string& id) const {
        for (std::size_t i = 0; i < buses.size(); ++i) {
            if (buses[i].id == id) return static_cast<int>(i);
        }
        return -1;
    }

    // Validates the radial structure and builds the traversal arrays.
    // Throws PowerFlowError if the graph is not a tree rooted at the slack.
    void finalize() {
        const std::size_t n = buses.size();
        if (n == 0) throw PowerFlowError("feeder: no buses");
        if (slack < 0 || slack >= static_cast<int>(n)) {
            throw PowerFlowError("feeder: slack bus index out of range");
        }
        if (lines.size() != n - 1) {
            throw PowerFlowError("feeder: not radial (" + std::to_string(lines.size()) +
                                 " lines for " + std::to_string(n) + " buses)");
        }
        for (const auto& line : lines) {
            if (line.from < 0 || line.from >= static_cast<int>(n) || line.to < 0 ||
                line.to >= static_cast<int>(n)) {
                throw PowerFlowError("feeder: line references unknown bus");
            }
            if (line.impedance_ohm.real() < 0.0) {
                throw PowerFlowError("feeder: line resistance must be >= 0");
            }
        }
        std::vector<std::vector<std::pair<int, int>>> adjacency(n);  // (other bus, line)
        for (std::size_t l = 0; l < lines.size(); ++l) {
            adjacency[lines[l].from].push_back({lines[l].to, static_cast<int>(l)});
            adjacency[lines[l].to].push_back({lines[l].from, static_cast<int>(l)});
        }
        order.assign(1, slack);
        parent_bus.assign(n, -1);
        parent_line.assign(n, -1);
        std::vector<bool> seen(n, false);
        seen[slack] = true;
        for (std::size_t head = 0; head < order.size(); ++head) {
            int bus = order[head];
            for (auto [other, l] : adjacency[bus]) {
                if (seen[other]) continue;
                seen[other] = true;
                parent_bus[other] = bus;
                parent_line[other] = l;
                if (lines[l].to != other) std::swap(lines[l].from, lines[l].to);
                order.push_back(other);
            }
        }
        if (order.size() != n) {
            throw PowerFlowError("feeder: not radial (disconnected from slack)");
        }
    }
};

struct PowerFlowSolution {
    std::vector<std::complex<double>> bus_voltage_v;
    std::vector<std::complex<double>> line_current_a;  // oriented parent -> child
    std::vector<double> line_active_power_w;           // sending (parent) end
    double grid_power_w = 0.0;  // positive = consumed from the grid
    int iterations = 0;
};

// Net active power at the slack bus, sign per the grid-draw convention.
inline double grid_draw(const PowerFlowSolution& solution) { return solution.grid_power_w; }

inline PowerFlowSolution solve_power_flow(const FeederNetwork& net,
                                          const std::vector<double>& injections_w,
                                          double slack_voltage_v, int max_iters = 200) {
    const std::size_t n = net.buses.size();
    if (net.order.size() != n) {
        throw PowerFlowError("feeder: finalize() must be called before solving");
    }
    if (injections_w.size() != n) {
        throw PowerFlowError("power flow: injection vector size mismatch");
    }
    const double v_base = net.nominal_voltage_v;
    const double v_tol = 1e-8 * v_base;

    std::vector<std::complex<double>> voltage(n, std::complex<double>(slack_voltage_v, 0.0));
    std::vector<std::complex<double>> subtree_current(n);
    std::vector<std::complex<double>> line_current(net.lines.size());

    int iter = 0;
    bool converged = false;
    for (iter = 1; iter <= max_iters; ++iter) {
        // Backward: leaf-to-root current accumulation, loads at latest voltage.
        for (std::size_t i = 0; i < n; ++i) {
            int bus = net.order[i];
            subtree_current[bus] = std::conj(std::complex<double>(injections_w[bus], 0.0) / voltage[bus]);
        }
        for (std::size_t i = n; i-- > 1;) {
            int bus = net.order[i];
            int line = net.parent_line[bus];
            line_current[line] = subtree_current[bus];
            subtree_current[net.parent_bus[bus]] += subtree_current[bus];
        }
        // Forward: root-to-leaf voltage update across each line impedance.
        double dv_max = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            int bus = net.order[i];
            int line = net.parent_line[bus];
            std::complex<double> v_new =
                voltage[net.parent_bus[bus]] - net.lines[line].impedance_ohm * line_current[line];
            dv_max = std::max(dv_max, std::abs(v_new - voltage[bus]));
            voltage[bus] = v_new;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(voltage[i].real()) || !std::isfinite(voltage[i].imag()) ||
                std::abs(voltage[i]) < 1e-3 * v_base) {
                throw PowerFlowError("power flow: diverged (infeasible loading) at bus '" +
                                     net.buses[i].id + "'");
            }
        }
        if (dv_max < v_tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw PowerFlowError("power flow: no convergence after " + std::to_string(max_iters) +
                             " iterations (infeasible loading)");
    }

    PowerFlowSolution solution;
    solution.bus_voltage_v = voltage;
    solution.line_current_a = line_current;
    solution.line_active_power_w.resize(net.lines.size());
    for (std::size_t l = 0; l < net.lines.size(); ++l) {
        solution.line_active_power_w[l] =
            (voltage[net.lines[l].from] * std::conj(line_current[l])).real();
    }
    solution.grid_power_w =
        (voltage[net.slack] * std::conj(subtree_current[net.slack])).real();
    solution.iterations = iter;
    return solution;
}

} // namespace gridmesh

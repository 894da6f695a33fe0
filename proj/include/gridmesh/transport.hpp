#pragma once

// Macroscopic road dynamics. Average velocity follows an empirical
// flow-velocity correlation; outflow reproduces inflow delayed by the
// current travel time via a history-buffer lookup; block parking integrates
// the arrival/departure balance. Vehicle counts are continuous throughout.

#include "gridmesh/log.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridmesh {

struct CommLinkParams {
    double kappa = 0.0;                  // loss-rate coefficient
    double threshold_pps = 0.0;          // transmission threshold C_c
    double packets_per_vehicle_pps = 0.0;

    bool operator==(const CommLinkParams&) const = default;
};

struct RoadSpec {
    std::string name;
    std::string from_block;
    std::string to_block;
    double length_m = 0.0;
    double capacity_veh_h = 0.0;
    double design_speed_mps = 0.0;
    double alpha1 = 1.0;  // free-flow factor
    double alpha2 = 0.0;  // congestion exponent, constant term
    double alpha3 = 0.0;  // congestion exponent, cubic term
    CommLinkParams comm;

    bool operator==(const RoadSpec&) const = default;

    double free_flow_speed_mps() const { return alpha1 * design_speed_mps; }
    double free_flow_travel_time_s() const { return length_m / free_flow_speed_mps(); }
};

struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Average velocity at a given average flow. Strictly decreasing in the flow;
// exactly alpha1 * design speed at zero flow.
inline double road_velocity(double v_ave_veh_h, const RoadSpec& spec) {
    double load = v_ave_veh_h / spec.capacity_veh_h;
    double beta = spec.alpha2 + spec.alpha3 * load * load * load;
    return spec.free_flow_speed_mps() / (1.0 + std::pow(load, beta));
}

struct RoadState {
    std::vector<double> inflow_times_s;    // history buffer, strictly increasing
    std::vector<double> inflow_veh_h;
    double vehicles = 0.0;
    double u_ave_mps = 0.0;     // average velocity
    double v_ave_veh_h = 0.0;   // average flow
    double t_travel_s = 0.0;

    static RoadState initial(const RoadSpec& spec) {
        RoadState s;
        s.u_ave_mps = spec.free_flow_speed_mps();
        s.t_travel_s = spec.free_flow_travel_time_s();
        return s;
    }
};

namespace detail {

// Velocity consistent with both the flow-velocity correlation and
// flow = velocity * density for the given vehicle count. The residual
// u - velocity(flow(u)) is strictly increasing, so the root is bracketed in
// (0, free-flow speed] and bisection always lands it.
inline double solve_road_velocity(double vehicles, const RoadSpec& spec, int max_iters = 100) {
    const double u_free = spec.free_flow_speed_mps();
    if (vehicles <= 0.0) return u_free;
    const double flow_per_speed = 3600.0 * vehicles / spec.length_m;  // (veh/h) per (m/s)
    auto residual = [&](double u) { return u - road_velocity(u * flow_per_speed, spec); };
    if (residual(u_free) <= 0.0) return u_free;
    double lo = 0.0, hi = u_free;
    const double tol = 1e-10 * u_free;
    for (int i = 0; i < max_iters; ++i) {
        double mid = 0.5 * (lo + hi);
        if (residual(mid) > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo <= tol) return 0.5 * (lo + hi);
    }
    throw TransportError("road '" + spec.name +
                         "': velocity fixed point did not converge (pathological parameters)");
}

// Linear interpolation in the inflow history; times before the buffer are
// quiescent (zero inflow).
inline double history_lookup(const std::vector<double>& times, const std::vector<double>& flows,
                             double t) {
    if (times.empty() || t < times.front()) return 0.0;
    if (t >= times.back()) return flows.back();
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - times.begin());
    std::size_t lo = hi - 1;
    double w = (t - times[lo]) / (times[hi] - times[lo]);
    return flows[lo] + w * (flows[hi] - flows[lo]);
}

} // namespace detail

// Advances one road by dt. delay_factor >= 1 scales the travel time (1 means
// no communication degradation). The new inflow sample is appended before
// the outflow lookup so delays shorter than dt still resolve.
inline RoadState road_step(const RoadState& state, double q_in_veh_h, double delay_factor,
                           const RoadSpec& spec, double t_s, double dt_s) {
    if (dt_s <= 0.0) throw std::invalid_argument("road_step: dt must be > 0");
    if (delay_factor < 1.0) throw std::invalid_argument("road_step: delay factor must be >= 1");

    RoadState next = state;
    next.u_ave_mps = detail::solve_road_velocity(state.vehicles, spec);
    next.v_ave_veh_h = 3600.0 * next.u_ave_mps * state.vehicles / spec.length_m;
    next.t_travel_s = delay_factor * spec.length_m / next.u_ave_mps;

    next.inflow_times_s.push_back(t_s);
    next.inflow_veh_h.push_back(q_in_veh_h);

    double q_out = detail::history_lookup(next.inflow_times_s, next.inflow_veh_h,
                                          t_s - next.t_travel_s);
    next.vehicles = std::max(0.0, state.vehicles + (q_in_veh_h - q_out) * dt_s / 3600.0);

    // Retain 4x the free-flow travel time times the worst delay factor (2),
    // stretched when congestion pushes the current travel time beyond that.
    double keep_span = std::max(8.0 * spec.free_flow_travel_time_s(), 4.0 * next.t_travel_s);
    double cutoff = t_s - keep_span;
    std::size_t drop = 0;
    while (drop + 1 < next.inflow_times_s.size() && next.inflow_times_s[drop + 1] < cutoff) {
        ++drop;
    }
    if (drop > 0) {
        next.inflow_times_s.erase(next.inflow_times_s.begin(),
                                  next.inflow_times_s.begin() + static_cast<long>(drop));
        next.inflow_veh_h.erase(next.inflow_veh_h.begin(),
                                next.inflow_veh_h.begin() + static_cast<long>(drop));
    }
    return next;
}

// Outflow the road would publish for this step; recomputed from the stepped
// state so callers can read it without re-running the lookup.
inline double road_outflow(const RoadState& stepped, double t_s) {
    return detail::history_lookup(stepped.inflow_times_s, stepped.inflow_veh_h,
                                  t_s - stepped.t_travel_s);
}

struct BlockParking {
    double n_parked = 0.0;
    double n_charging = 0.0;
};

// Integrates the parking balance over dt; rates are veh/h. Flooring at zero
// is logged because it breaks vehicle conservation.
inline BlockParking parking_step(const BlockParking& parking, std::span<const double> inflows_veh_h,
                                 std::span<const double> outflows_veh_h, double dt_s) {
    if (dt_s <= 0.0) throw std::invalid_argument("parking_step: dt must be > 0");
    double net_veh_h = 0.0;
    for (double q : inflows_veh_h) net_veh_h += q;
    for (double q : outflows_veh_h) net_veh_h -= q;
    BlockParking next = parking;
    next.n_parked = parking.n_parked + net_veh_h * dt_s / 3600.0;
    if (next.n_parked < 0.0) {
        logging::warn("parking balance floored at 0 (was " + std::to_string(next.n_parked) + ")");
        next.n_parked = 0.0;
    }
    return next;
}

// Expected number of charging vehicles among those parked.
inline double charging_count(double n_parked, double p_i) {
    return p_i * n_parked;
}

} // namespace gridmesh

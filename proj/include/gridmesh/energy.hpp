#pragma once

// Energy-agent component models: PV and wind generation, battery storage
// with its charge/discharge control sequence, EV charging load, and
// communication-tower load.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace gridmesh {

struct PvArray {
    double area_m2 = 0.0;
    double active_fraction = 1.0;    // usable share of the aperture area
    double efficiency = 0.0;         // panel efficiency
    double inverter_efficiency = 1.0;

    bool operator==(const PvArray&) const = default;
};

struct PvParams {
    std::vector<PvArray> arrays;

    bool operator==(const PvParams&) const = default;
};

struct WindParams {
    int count = 0;          // identical turbines
    double scale = 1.0;
    double inverter_efficiency = 1.0;
    std::vector<double> curve_speed_mps;  // strictly increasing; outside span => 0 W
    std::vector<double> curve_power_w;

    bool operator==(const WindParams&) const = default;
};

struct BatteryParams {
    double capacity_wh = 0.0;
    double max_charge_w = 0.0;
    double max_discharge_w = 0.0;
    double charge_threshold_w = 0.0;     // surplus must exceed this to charge
    double discharge_threshold_w = 0.0;  // deficit must exceed this to discharge
    double initial_soc = 0.5;

    bool operator==(const BatteryParams&) const = default;
};

struct CommTowerParams {
    int tower_count = 0;
    double e_elec_j_per_packet = 0.0;       // send/receive electronics energy
    double eps_elec_j_per_packet_m = 0.0;   // transmission coefficient
    double distance_m = 0.0;
    double path_loss_exponent = 2.0;

    bool operator==(const CommTowerParams&) const = default;
};

struct WeatherPoint {
    double direct_normal_w_m2 = 0.0;
    double sky_diffuse_w_m2 = 0.0;
    double ground_diffuse_w_m2 = 0.0;
    double cos_incidence = 1.0;
};

// Plane-of-array irradiance: clamped direct component plus sky and ground
// diffuse contributions.
inline double pv_irradiance(const WeatherPoint& w) {
    return std::max(0.0, w.cos_incidence * w.direct_normal_w_m2) + w.sky_diffuse_w_m2 +
           w.ground_diffuse_w_m2;
}

inline double pv_power(double irradiance_w_m2, const PvParams& params) {
    double total = 0.0;
    for (const auto& a : params.arrays) {
        total += a.area_m2 * a.active_fraction * a.efficiency * irradiance_w_m2 *
                 a.inverter_efficiency;
    }
    return total;
}

// Per-turbine output from the piecewise-linear power curve; zero outside the
// curve's speed span.
inline double wind_power(double wind_speed_mps, const WindParams& params) {
    if (params.count <= 0 || params.curve_speed_mps.empty()) return 0.0;
    const auto& s = params.curve_speed_mps;
    const auto& p = params.curve_power_w;
    double pt = 0.0;
    if (wind_speed_mps >= s.front() && wind_speed_mps <= s.back()) {
        auto it = std::upper_bound(s.begin(), s.end(), wind_speed_mps);
        if (it == s.end()) {
            pt = p.back();
        } else {
            std::size_t hi = static_cast<std::size_t>(it - s.begin());
            std::size_t lo = hi - 1;
            double w = (wind_speed_mps - s[lo]) / (s[hi] - s[lo]);
            pt = p[lo] + w * (p[hi] - p[lo]);
        }
    }
    return static_cast<double>(params.count) * pt * params.scale * params.inverter_efficiency;
}

enum class BatteryMode { charging, discharging, standby };

inline const char* to_string(BatteryMode m) {
    switch (m) {
        case BatteryMode::charging: return "charging";
        case BatteryMode::discharging: return "discharging";
        default: return "standby";
    }
}

struct BatteryState {
    double soc = 0.5;  // in [0, 1]
    BatteryMode mode = BatteryMode::standby;
    double power_w = 0.0;  // positive = charging
};

// One control step: charge on renewable surplus above the charge threshold,
// discharge on deficit above the discharge threshold, otherwise stand by.
// Power is limited by the rating and by the head/room left in the store, so
// the SOC never needs a post-hoc clamp.
inline BatteryState battery_step(const BatteryState& state, double p_renewable_w,
                                 double p_demand_w, const BatteryParams& params, double dt_s) {
    if (dt_s <= 0.0) throw std::invalid_argument("battery_step: dt must be > 0");
    BatteryState next = state;
    next.mode = BatteryMode::standby;
    next.power_w = 0.0;
    if (params.capacity_wh <= 0.0) return next;

    const double surplus_w = p_renewable_w - p_demand_w;
    const double deficit_w = -surplus_w;
    const double wh_per_step = dt_s / 3600.0;

    if (surplus_w > params.charge_threshold_w && state.soc < 1.0) {
        double fill_w = (1.0 - state.soc) * params.capacity_wh / wh_per_step;
        double power = std::min({surplus_w, params.max_charge_w, fill_w});
        if (power > 0.0) {
            next.mode = BatteryMode::charging;
            next.power_w = power;
            next.soc = (power == fill_w)
                           ? 1.0
                           : state.soc + power * wh_per_step / params.capacity_wh;
        }
    } else if (deficit_w > params.discharge_threshold_w && state.soc > 0.0) {
        double empty_w = state.soc * params.capacity_wh / wh_per_step;
        double magnitude = std::min({deficit_w, params.max_discharge_w, empty_w});
        if (magnitude > 0.0) {
            next.mode = BatteryMode::discharging;
            next.power_w = -magnitude;
            next.soc = (magnitude == empty_w)
                           ? 0.0
                           : state.soc - magnitude * wh_per_step / params.capacity_wh;
        }
    }
    next.soc = std::clamp(next.soc, 0.0, 1.0);  // absorbs last-ulp rounding only
    return next;
}

// Aggregate charging power of n_char vehicles drawing p_char each. Counts
// are continuous.
inline double ev_charging_power(double n_char, double p_char_w) {
    return n_char * p_char_w;
}

// Tower load for a given per-tower packet throughput.
inline double comm_tower_power(double throughput_pps, const CommTowerParams& params) {
    double per_tower = 2.0 * throughput_pps * params.e_elec_j_per_packet +
                       throughput_pps * params.eps_elec_j_per_packet_m *
                           std::pow(params.distance_m, params.path_loss_exponent);
    return static_cast<double>(params.tower_count) * per_tower;
}

} // namespace gridmesh

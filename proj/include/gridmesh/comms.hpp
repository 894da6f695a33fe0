#pragma once

// Communication-agent model: per-road routing throughput, the packet-loss
// rate above the transmission threshold, and the travel-time degradation
// factor fed back to the road model. Transmission delay is fixed at zero;
// retransmission is not modeled.

#include <algorithm>
#include <cmath>

namespace gridmesh {

struct CommState {
    double throughput_pps = 0.0;
    double packet_loss_rate = 0.0;  // gamma, in [0, 1]
    double delay_s = 0.0;           // fixed 0 in this implementation
};

inline double throughput_from_traffic(double vehicles_on_road, double packets_per_vehicle_pps) {
    return packets_per_vehicle_pps * vehicles_on_road;
}

// Loss rate above the transmission threshold; zero below it, capped at total
// loss.
inline double packet_loss(double throughput_pps, double kappa, double threshold_pps) {
    if (throughput_pps <= threshold_pps) return 0.0;
    return std::min(1.0, kappa * std::sqrt(throughput_pps - threshold_pps));
}

// Travel-time multiplier applied by the road model: 1 at perfect
// communication, up to 2 at total loss.
inline double delay_factor(double packet_loss_rate) {
    return 1.0 + packet_loss_rate;
}

} // namespace gridmesh

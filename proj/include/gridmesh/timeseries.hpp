#pragma once

// Time-indexed value profiles and resampling onto a simulation grid.
// Times are seconds; lookups outside the sampled span hold the boundary value.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridmesh {

enum class Interp { step_hold, linear };

inline const char* to_string(Interp i) {
    return i == Interp::step_hold ? "step" : "linear";
}

struct CoverageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TimeSeriesProfile {
    std::vector<double> times;  // strictly increasing, seconds
    std::vector<double> values;
    Interp interp = Interp::linear;

    bool operator==(const TimeSeriesProfile&) const = default;

    bool empty() const { return times.empty(); }
    std::size_t size() const { return times.size(); }

    static TimeSeriesProfile constant(double value) {
        return TimeSeriesProfile{{0.0}, {value}, Interp::step_hold};
    }

    // Value at time t, with boundary extension by hold on both sides.
    double value_at(double t) const {
        if (times.empty()) {
            throw CoverageError("time series: cannot evaluate an empty profile");
        }
        if (t <= times.front()) return values.front();
        if (t >= times.back()) return values.back();
        auto it = std::upper_bound(times.begin(), times.end(), t);
        std::size_t hi = static_cast<std::size_t>(it - times.begin());
        std::size_t lo = hi - 1;
        if (interp == Interp::step_hold) return values[lo];
        double w = (t - times[lo]) / (times[hi] - times[lo]);
        return values[lo] + w * (values[hi] - values[lo]);
    }

    double min_value() const {
        if (values.empty()) throw CoverageError("time series: empty profile");
        return *std::min_element(values.begin(), values.end());
    }
    double max_value() const {
        if (values.empty()) throw CoverageError("time series: empty profile");
        return *std::max_element(values.begin(), values.end());
    }
};

struct TimeGrid {
    double start_s = 0.0;
    double end_s = 0.0;
    double dt_s = 1.0;

    bool operator==(const TimeGrid&) const = default;

    // Number of grid points, end inclusive. The span must be a whole number
    // of steps (validated at scenario load).
    std::size_t points() const {
        if (dt_s <= 0.0) throw std::invalid_argument("time grid: dt must be > 0");
        if (end_s < start_s) throw std::invalid_argument("time grid: end before start");
        return static_cast<std::size_t>(std::llround((end_s - start_s) / dt_s)) + 1;
    }
    std::size_t steps() const { return points() - 1; }
    double time_at(std::size_t i) const { return start_s + static_cast<double>(i) * dt_s; }
};

// One sample per grid point; linear profiles interpolate, step profiles hold.
inline TimeSeriesProfile resample(const TimeSeriesProfile& profile, const TimeGrid& grid) {
    if (profile.empty()) {
        throw CoverageError("time series: empty profile cannot cover the grid");
    }
    TimeSeriesProfile out;
    out.interp = profile.interp;
    std::size_t n = grid.points();
    out.times.reserve(n);
    out.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double t = grid.time_at(i);
        out.times.push_back(t);
        out.values.push_back(profile.value_at(t));
    }
    return out;
}

} // namespace gridmesh

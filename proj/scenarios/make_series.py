#!/usr/bin/env python3
"""Generates the synthetic input series for the bundled case scenarios.

All data here is synthetic: shapes are plausible for a small community
(two residential blocks and one commercial block, two commute peaks) but
none of it is measured. Regenerate with:  python3 make_series.py
"""

import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "series")

DAY = 86400
STEP = 900  # 15-minute sampling for smooth profiles

MORNING = 8 * 3600
EVENING = 18 * 3600
SIGMA = 1800.0  # commute bump width


def bump(t, center, amplitude):
    return amplitude * math.exp(-0.5 * ((t - center) / SIGMA) ** 2)


def write_series(name, samples):
    path = os.path.join(OUT, name + ".csv")
    with open(path, "w", newline="\n") as f:
        f.write("time_s,value\n")
        for t, v in samples:
            f.write(f"{t:g},{v:.10g}\n")


def fine(fn):
    return [(t, fn(t)) for t in range(0, DAY + 1, STEP)]


def hourly(values24):
    samples = [(h * 3600, values24[h]) for h in range(24)]
    samples.append((DAY, values24[0]))
    return samples


def commute(baseline, morning_amp, evening_amp):
    return fine(lambda t: baseline + bump(t, MORNING, morning_amp) + bump(t, EVENING, evening_amp))


def main():
    os.makedirs(OUT, exist_ok=True)

    # ---- weather (synthetic winter coastal day) ----
    sunrise, sunset = 26400.0, 61800.0

    def daylight(t):
        if t <= sunrise or t >= sunset:
            return 0.0
        return math.sin(math.pi * (t - sunrise) / (sunset - sunrise))

    write_series("weather_dni", fine(lambda t: 750.0 * daylight(t)))
    write_series("weather_sky_diffuse", fine(lambda t: 90.0 * daylight(t) ** 0.7))
    write_series("weather_ground_diffuse", fine(lambda t: 22.0 * daylight(t)))
    write_series("weather_cos_incidence", fine(lambda t: 0.35 * daylight(t) + 0.45 * daylight(t) ** 2))
    wind24 = [2.5, 2.4, 2.3, 2.2, 2.3, 2.5, 2.8, 3.2, 3.8, 4.5, 5.2, 5.8,
              6.3, 6.6, 6.5, 6.0, 5.4, 4.8, 4.2, 3.8, 3.4, 3.0, 2.8, 2.6]
    write_series("weather_wind_speed", hourly(wind24))

    # ---- building loads, W ----
    res1_kw = [480, 460, 450, 445, 440, 450, 500, 650, 760, 700, 600, 560,
               540, 530, 540, 560, 620, 760, 950, 1080, 1050, 950, 760, 580]
    com_kw = [820, 800, 790, 790, 800, 850, 1000, 1500, 2400, 3200, 3500, 3600,
              3600, 3550, 3500, 3400, 3200, 2600, 2000, 1700, 1400, 1150, 1000, 880]
    write_series("load_res1_building", hourly([v * 1000.0 for v in res1_kw]))
    write_series("load_res2_building", hourly([v * 1000.0 * 7.0 / 6.0 for v in res1_kw]))
    write_series("load_com_building", hourly([v * 1000.0 for v in com_kw]))
    write_series("load_res_general", hourly([40e3] * 24))
    write_series("load_com_general", hourly([120e3] * 24))

    # ---- charging probability p_i (hourly, step-held) ----
    p_res = [0.30, 0.30, 0.28, 0.28, 0.26, 0.24, 0.20, 0.12, 0.08, 0.06, 0.06, 0.06,
             0.06, 0.06, 0.06, 0.08, 0.10, 0.16, 0.22, 0.26, 0.28, 0.30, 0.32, 0.32]
    p_com = [0.02, 0.02, 0.02, 0.02, 0.02, 0.02, 0.02, 0.05, 0.15, 0.22, 0.25, 0.25,
             0.25, 0.25, 0.25, 0.25, 0.22, 0.18, 0.12, 0.08, 0.05, 0.03, 0.02, 0.02]
    write_series("p_charge_res", hourly(p_res))
    write_series("p_charge_com", hourly(p_com))

    # ---- traffic departures per (block, road), veh/h ----
    # Morning flows head toward the commercial block, evening flows return.
    write_series("out_res1_road_1", commute(60.0, 180.0, 150.0))
    write_series("out_res2_road_2", commute(60.0, 180.0, 150.0))
    write_series("out_res1_road_3", commute(80.0, 480.0, 120.0))
    write_series("out_com_road_4", commute(80.0, 120.0, 460.0))
    write_series("out_res2_road_5", commute(120.0, 480.0, 120.0))
    write_series("out_com_road_6", commute(120.0, 120.0, 500.0))

    # ---- fixed inputs for the energy-only case ----
    # Approximate the closed-loop charging and throughput trajectories from
    # the same departure profiles: integrate the parking balance per block
    # (arrival delay neglected) and apply the hourly charging probability.
    departures = {
        "road_1": (60.0, 180.0, 150.0), "road_2": (60.0, 180.0, 150.0),
        "road_3": (80.0, 480.0, 120.0), "road_4": (80.0, 120.0, 460.0),
        "road_5": (120.0, 480.0, 120.0), "road_6": (120.0, 120.0, 500.0),
    }
    topology = {  # block -> (outgoing roads, incoming roads)
        "res1": (("road_1", "road_3"), ("road_2", "road_4")),
        "res2": (("road_2", "road_5"), ("road_1", "road_6")),
        "com": (("road_4", "road_6"), ("road_3", "road_5")),
    }
    initial = {"res1": 800.0, "res2": 800.0, "com": 200.0}
    probs = {"res1": p_res, "res2": p_res, "com": p_com}

    def rate(road, t):
        base, m, e = departures[road]
        return base + bump(t, MORNING, m) + bump(t, EVENING, e)

    parked = dict(initial)
    ev_samples = {name: [] for name in initial}
    for t in range(0, DAY + 1, STEP):
        for name, (out_roads, in_roads) in topology.items():
            p = probs[name][min(t // 3600, 23)]
            ev_samples[name].append((t, p * parked[name] * 7000.0))
        for name, (out_roads, in_roads) in topology.items():
            net = sum(rate(r, t) for r in in_roads) - sum(rate(r, t) for r in out_roads)
            parked[name] = max(0.0, parked[name] + net * STEP / 3600.0)
    for name, samples in ev_samples.items():
        write_series(f"prescribed_ev_{name}", samples)

    # Tower throughput: incoming-road vehicle counts at the free-flow
    # travel time, times the per-vehicle packet rate.
    road_lengths = {"road_1": 5000.0, "road_2": 5000.0, "road_3": 8000.0,
                    "road_4": 8000.0, "road_5": 8000.0, "road_6": 8000.0}
    free_speed = {"road_1": 30.0, "road_2": 30.0, "road_3": 60.0,
                  "road_4": 60.0, "road_5": 78.4, "road_6": 78.4}
    pkt_rate = {"road_1": 5.0, "road_2": 5.0, "road_3": 15.0,
                "road_4": 15.0, "road_5": 18.5, "road_6": 18.5}

    def tower(name):
        def value(t):
            total = 0.0
            for r in topology[name][1]:
                vehicles = rate(r, t) * road_lengths[r] / (3600.0 * free_speed[r])
                total += pkt_rate[r] * vehicles
            return total
        return value

    for name in initial:
        write_series(f"prescribed_throughput_{name}", fine(tower(name)))

    print(f"series written to {OUT}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Writes the bundled 41-bus low-voltage feeder fixture.

Trunk 1..16 from the substation (bus 1), lateral 17..28 off bus 5 and
lateral 29..41 off bus 10. Eighteen customers with 10 kWp rooftop PV each,
sixteen single-phase and two three-phase, loaded heavier on phase A.
Profiles are hourly net demand over one day.
"""

import json
import math
from pathlib import Path

HERE = Path(__file__).resolve().parent

V_BASE = 400.0 / math.sqrt(3.0)
S_BASE_KVA = 100.0

# Sequence impedances per km (ohm) of the two cable types.
TRUNK = {"z1": (0.206, 0.080), "z0": (0.824, 0.320), "s_max_kva": 80.0}
LATERAL = {"z1": (0.320, 0.080), "z0": (1.280, 0.320), "s_max_kva": 50.0}

# (from, to, length m, cable, rating override kVA per phase)
EDGES = []
for b in range(2, 17):
    EDGES.append((b - 1, b, 45.0, TRUNK, None))
EDGES.append((5, 17, 35.0, LATERAL, None))
for b in range(18, 29):
    EDGES.append((b - 1, b, 35.0, LATERAL, None))
EDGES.append((10, 29, 35.0, LATERAL, 18.0))
for b in range(30, 42):
    EDGES.append((b - 1, b, 35.0, LATERAL, None))

# (device id, bus, connection, evening peak kW, morning peak kW)
DEVICES = [
    ("d01", 4, "A", 4.0, 1.5),
    ("d02", 6, "B", 2.5, 1.0),
    ("d03", 8, "B", 2.5, 1.0),
    ("d04", 10, "A", 4.5, 1.5),
    ("d05", 11, "A", 5.0, 1.8),
    ("d06", 15, "C", 2.5, 1.0),
    ("d07", 17, "A", 5.0, 1.8),
    ("d08", 19, "C", 2.0, 0.8),
    ("d09", 23, "B", 2.5, 1.0),
    ("d10", 25, "C", 1.5, 0.6),
    ("d11", 25, "C", 1.5, 0.6),
    ("d12", 27, "C", 1.5, 0.6),
    ("d13", 30, "A", 6.0, 2.0),
    ("d14", 32, "B", 2.5, 1.0),
    ("d15", 34, "C", 2.0, 0.8),
    ("d16", 36, "ABC", 6.0, 2.5),
    ("d17", 38, "A", 6.5, 2.2),
    ("d18", 40, "ABC", 7.5, 3.0),
]

PV_KWP = 10.0
HORIZON = 24


def phase_matrix(z1, z0, length_m):
    km = length_m / 1000.0
    zs = [(2.0 * z1[k] + z0[k]) / 3.0 * km for k in range(2)]
    zm = [(z0[k] - z1[k]) / 3.0 * km for k in range(2)]
    r = [[zs[0] if i == j else zm[0] for j in range(3)] for i in range(3)]
    x = [[zs[1] if i == j else zm[1] for j in range(3)] for i in range(3)]
    return r, x


def load_shape(t, evening, morning):
    base = 0.35
    m = morning * math.exp(-0.5 * ((t - 7.5) / 1.2) ** 2)
    e = evening * math.exp(-0.5 * ((t - 19.5) / 1.6) ** 2)
    midday = 0.5 * math.exp(-0.5 * ((t - 13.0) / 3.0) ** 2)
    return base + m + e + midday


def pv_shape(t):
    if t < 6 or t > 20:
        return 0.0
    return max(0.0, math.sin(math.pi * (t - 6) / 14.0)) ** 1.5 * 0.85


def network():
    buses = [{"id": str(b), "phases": "ABC", "slack": b == 1, "v_base": V_BASE} for b in range(1, 42)]
    branches = []
    for i, (f, t, length, cable, rating) in enumerate(EDGES, start=1):
        r, x = phase_matrix(cable["z1"], cable["z0"], length)
        s_max = rating if rating is not None else cable["s_max_kva"]
        branches.append({
            "id": f"L{i:02d}",
            "from": str(f),
            "to": str(t),
            "r_ohm": [[round(v, 9) for v in row] for row in r],
            "x_ohm": [[round(v, 9) for v in row] for row in x],
            "ampacity_a": round(s_max * 1000.0 / V_BASE, 3),
            "s_max_kva": s_max,
        })
    devices = [{
        "id": d,
        "bus": str(bus),
        "connection": conn,
        "kind": "load",
        "p_profile": d,
        "q_profile": d,
        "pv_kwp": PV_KWP,
    } for d, bus, conn, _, _ in DEVICES]
    return {"name": "feeder41", "s_base_kva": S_BASE_KVA, "buses": buses, "branches": branches, "devices": devices}


def profiles():
    lines = ["# step_minutes=60", "device_id,t,p_kw,q_kvar"]
    for d, _, _, evening, morning in DEVICES:
        for t in range(HORIZON):
            load = load_shape(t, evening, morning)
            p = load - PV_KWP * pv_shape(t)
            q = 0.33 * load
            lines.append(f"{d},{t},{p:.6f},{q:.6f}")
    return "\n".join(lines) + "\n"


def main():
    (HERE / "network.json").write_text(json.dumps(network(), indent=1) + "\n")
    (HERE / "profiles.csv").write_text(profiles())


if __name__ == "__main__":
    main()

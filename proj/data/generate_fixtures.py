"""Writes the network and profile fixtures under data/.

    python3 data/generate_fixtures.py
"""

import json
import math
from pathlib import Path

HERE = Path(__file__).resolve().parent
KV = 8.4
DAY = "2014-01-01"


def breaker(vb_id):
    return {"id": vb_id, "switches": [f"{vb_id}a", f"{vb_id}b"]}


def write_network(name, doc):
    (HERE / name).write_text(json.dumps(doc, indent=2) + "\n")


def write_profiles(name, rows):
    lines = ["timestamp,element_id,p_kw,q_kvar"]
    lines += [f"{ts},{eid},{p:.3f},{q:.3f}" for ts, eid, p, q in rows]
    (HERE / name).write_text("\n".join(lines) + "\n")


def load_shape(hour):
    # residential/commercial blend, peak in the early afternoon
    return 0.55 + 0.45 * math.exp(-((hour - 13.0) / 5.0) ** 2)


def pv_shape(hour):
    return max(0.0, math.sin(math.pi * (hour - 6.0) / 14.0)) if 6 <= hour <= 20 else 0.0


def two_bus():
    # purely resistive line sized so that P * R = 0.01 pu on a 1 MVA base
    z_base = KV * KV / 1.0
    doc = {
        "buses": [
            {"id": "hv", "kind": "HV", "nominal_kv": KV},
            {"id": "mv", "kind": "MV", "nominal_kv": KV},
        ],
        "branches": [{"id": "line", "from": "hv", "to": "mv", "r_ohm": 0.01 * z_base, "x_ohm": 0.0, "imax_a": 500.0}],
        "generators": [],
        "loads": [{"id": "load1", "bus": "mv"}],
        "tvr": None,
        "virtual_breakers": [],
    }
    write_network("two_bus.json", doc)
    write_profiles("two_bus_profiles.csv", [(f"{DAY}T{h:02d}:00", "load1", 1000.0, 0.0) for h in range(24)])


def chain():
    names = ["hv1", "a", "b", "c", "hv2"]
    buses = [{"id": n, "kind": "HV" if n.startswith("hv") else "MV", "nominal_kv": KV} for n in names]
    branches, vbs = [], []
    for k in range(4):
        vb = f"s{k + 1}"
        vbs.append(breaker(vb))
        branches.append({"id": f"l{k + 1}", "from": names[k], "to": names[k + 1], "r_ohm": 0.3,
                         "x_ohm": 0.25, "imax_a": 300.0, "breaker": vb})
    doc = {"buses": buses, "branches": branches, "generators": [],
           "loads": [{"id": f"load_{n}", "bus": n} for n in ("a", "b", "c")], "tvr": None, "virtual_breakers": vbs}
    write_network("chain.json", doc)
    rows = []
    for h in range(24):
        for n, base in (("a", 300.0), ("b", 200.0), ("c", 250.0)):
            p = base * load_shape(h)
            rows.append((f"{DAY}T{h:02d}:00", f"load_{n}", p, 0.3 * p))
    write_profiles("chain_profiles.csv", rows)


# 16-bus fixture: two primary substation buses and fourteen MV buses, grouped
# into ten switchable nodes. The H2 feeder head (e6) is strangled.
GROUPS = {
    "A": ["A1", "A2"], "B": ["B"], "C": ["C"], "D": ["D1", "D2"], "E": ["E1", "E2"],
    "F": ["F"], "G": ["G1", "G2"], "J": ["J"], "K": ["K"], "L": ["L"],
}
SWITCHED = [
    ("e1", "H1", "A1", 0.40, 0.35),
    ("e2", "A2", "B", 0.55, 0.45),
    ("e3", "B", "C", 0.60, 0.50),
    ("e4", "C", "D1", 0.50, 0.40),
    ("e5", "D2", "E1", 0.55, 0.45),
    ("e6", "E2", "H2", 0.40, 0.35),
    ("e7", "A1", "F", 0.70, 0.55),
    ("e8", "F", "G1", 0.65, 0.50),
    ("e9", "G2", "J", 0.60, 0.50),
    ("e10", "J", "E1", 0.70, 0.55),
    ("e11", "B", "K", 0.80, 0.60),
    ("e12", "K", "L", 0.75, 0.60),
    ("e13", "L", "D2", 0.80, 0.65),
    ("e14", "G1", "K", 0.85, 0.65),
]
STRANGLED_IMAX_A = 120.0
IMAX_A = 320.0
LOADS_KW = {
    "A1": 260.0, "A2": 220.0, "B": 300.0, "C": 240.0, "D1": 280.0, "D2": 200.0, "E1": 260.0,
    "E2": 230.0, "F": 250.0, "G1": 270.0, "G2": 210.0, "J": 240.0, "K": 260.0, "L": 230.0,
}
CONTROLLABLE = [
    ("dg1", "F", -0.2, 0.45, 220.0),
    ("dg2", "C", -0.2, 0.45, 200.0),
    ("dg3", "J", -0.2, 0.55, 240.0),
    ("dg4", "L", 0.0, 0.64, 180.0),
    ("dg5", "G2", -0.32, 0.45, 210.0),
]
PV = ("pv1", "K", 300.0)


def feeder16():
    buses = [{"id": "H1", "kind": "HV", "nominal_kv": KV}, {"id": "H2", "kind": "HV", "nominal_kv": KV}]
    for members in GROUPS.values():
        buses += [{"id": b, "kind": "MV", "nominal_kv": KV, "vmin_frac": 0.95, "vmax_frac": 1.05} for b in members]
    branches, vbs = [], []
    for eid, a, b, r, x in SWITCHED:
        vb = f"vb_{eid}"
        vbs.append(breaker(vb))
        imax = STRANGLED_IMAX_A if eid == "e6" else IMAX_A
        branches.append({"id": eid, "from": a, "to": b, "r_ohm": r, "x_ohm": x, "imax_a": imax, "breaker": vb})
    for members in GROUPS.values():
        if len(members) == 2:
            branches.append({"id": f"{members[0]}_{members[1]}", "from": members[0], "to": members[1],
                             "r_ohm": 0.12, "x_ohm": 0.10, "imax_a": IMAX_A, "breaker": None})
    generators = [{"id": gid, "bus": bus, "phase_controllable": True, "phase_min_rad": lo, "phase_max_rad": hi}
                  for gid, bus, lo, hi, _ in CONTROLLABLE]
    generators.append({"id": PV[0], "bus": PV[1], "phase_controllable": False, "fixed_phase_rad": 0.0})
    doc = {
        "buses": buses,
        "branches": branches,
        "generators": generators,
        "loads": [{"id": f"ld_{b}", "bus": b} for b in LOADS_KW],
        "tvr": {"branch": "D1_D2", "delta_v_kv": 0.1, "taps": [-3, -2, -1, 0, 1, 2, 3], "nominal_v_in_kv": KV},
        "virtual_breakers": vbs,
    }
    write_network("feeder16.json", doc)
    rows = []
    for h in range(24):
        ts = f"{DAY}T{h:02d}:00"
        for b, p in LOADS_KW.items():
            p_h = p * load_shape(h)
            rows.append((ts, f"ld_{b}", p_h, 0.35 * p_h))
        for gid, _, _, _, p in CONTROLLABLE:
            rows.append((ts, gid, p * (0.8 + 0.2 * load_shape(h)), 0.0))
        rows.append((ts, PV[0], PV[2] * pv_shape(h), 0.0))
    write_profiles("feeder16_profiles.csv", rows)


if __name__ == "__main__":
    two_bus()
    chain()
    feeder16()

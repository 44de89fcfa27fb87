#!/usr/bin/env python3
"""Writes the synthetic wind cases and the scenario files under data/."""
import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data"

BUSES = 30
CHORDS = [(1, 10), (5, 20), (8, 25), (12, 28), (15, 30), (3, 17), (22, 29), (6, 14)]
TIGHT = {(8, 9): 120, (20, 21): 110, (5, 20): 90}
GEN_BUSES = [1, 5, 9, 13, 17, 21, 25, 29]
GEN_COSTS = [12, 15, 18, 21, 24, 27, 30, 35]
WIND_BUSES = [2, 4, 7, 10, 12, 15, 18, 20, 23, 26, 28, 30]
LOAD_BUSES = [b for b in range(1, BUSES + 1) if b not in GEN_BUSES][:20]


def wind_case(quadratic):
    lines = []
    edges = [(b, b % BUSES + 1) for b in range(1, BUSES + 1)] + CHORDS
    for k, (f, t) in enumerate(edges):
        x = 0.05 + 0.01 * ((7 * k) % 16)
        limit = TIGHT.get((f, t), 300)
        lines.append({"id": k + 1, "from": f, "to": t, "reactance": round(x, 3), "limit": limit})
    gens = []
    for k, (b, c) in enumerate(zip(GEN_BUSES, GEN_COSTS)):
        g = {"id": k + 1, "bus": b, "linear_cost": c, "p_min": 0, "p_max": 250}
        if quadratic:
            g["quadratic_cost"] = round(0.01 + 0.004 * k, 3)
        gens.append(g)
    loads = [{"bus": b, "mw": 60 + 10 * (k % 5)} for k, b in enumerate(LOAD_BUSES)]
    units = [{"id": k + 1, "bus": b, "kind": "generation", "min": 0, "max": 110} for k, b in enumerate(WIND_BUSES)]
    doc = {
        "name": "wind12_quadratic" if quadratic else "wind12",
        "base_mva": 100,
        "reference_bus": 1,
        "buses": list(range(1, BUSES + 1)),
        "lines": lines,
        "generators": gens,
        "loads": loads,
        "stochastic_units": units,
        "contingencies": [
            {"name": "gen2_derate", "probability": 0.01, "generator_limits": [{"generator": 2, "p_max": 150}]}
        ],
    }
    if quadratic:
        doc["cost_model"] = "quadratic"
    return doc


def wind_scenario():
    mean = []
    for t in range(21):
        level = 35.35 + (70.70 - 35.35) * min(t, 10) / 10
        mean.append([round(level * (0.9 + 0.02 * k), 4) for k in range(12)])
    return {"name": "wind12_ramp", "model": "rw", "mean_trajectory": mean, "sigma": 25.0, "seed": 2013}


def ramp_scenario(model):
    doc = {
        "name": "ramp_" + model,
        "model": model,
        "mean_trajectory": [110 + 2 * t for t in range(41)] + [190] * 8,
        "sigma": 1.0,
        "seed": 1,
    }
    if model == "ar1":
        doc["phi"] = 0.9
    return doc


def write(path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    write(ROOT / "cases" / "wind12.json", wind_case(False))
    write(ROOT / "cases" / "wind12_quadratic.json", wind_case(True))
    write(ROOT / "scenarios" / "wind12_ramp.json", wind_scenario())
    write(ROOT / "scenarios" / "ramp_rw.json", ramp_scenario("rw"))
    write(ROOT / "scenarios" / "ramp_ar1.json", ramp_scenario("ar1"))

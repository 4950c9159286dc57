#!/usr/bin/env python3
"""Recompute the metrics in an output directory's summary.json from its CSV files.

Usage: check_summary.py OUTPUT_DIR [OUTPUT_DIR ...]
Exits non-zero and prints the mismatches when any recomputed value disagrees.
"""

import bisect
import configparser
import csv
import json
import math
import sys
from pathlib import Path

REL_TOL = 1e-9


def fnv1a64(data: bytes) -> str:
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return f"{h:016x}"


def read_events(path: Path):
    with path.open(newline="") as f:
        rows = list(csv.DictReader(f))
    return [
        (float(r["t"]), int(r["cell_x"]), int(r["cell_y"]), int(r["device"]), int(r["new_state"]))
        for r in rows
    ]


def onsets_by_cell(events):
    onsets = {}
    for t, x, y, device, state in events:
        if device == 1 and state == 1:
            onsets.setdefault((x, y), []).append(t)
    return onsets


def mean_period(onsets):
    return (onsets[-1] - onsets[0]) / (len(onsets) - 1)


def phase_at(onsets, t):
    if t == onsets[-1]:
        return 0.0
    k = bisect.bisect_right(onsets, t)
    last, nxt = onsets[k - 1], onsets[k]
    phi = 2 * math.pi * (t - last) / (nxt - last)
    return phi if phi < 2 * math.pi else 0.0


def close(a, b):
    if a is None or b is None:
        return a is None and b is None
    return math.isclose(a, b, rel_tol=REL_TOL, abs_tol=1e-300)


def top_conductance(cfg, s1, s2):
    """Conductance from v_dd to the node for the configured cell and right-hand side."""
    paper = cfg["cell"]["rhs"] == "paper"
    d1 = cfg["device1"]
    g = lambda dev, s: 1.0 / float(dev["r_low"] if s == 1 else dev["r_high"])
    if cfg["cell"]["topology"] == "dr":
        if paper:
            return g(d1, 1) if s1 == 1 else 0.0
        return g(d1, s1)
    if paper and s1 != s2:
        return g(d1, 1) if s1 == 1 else 0.0
    return g(d1, s1)


def supply_current(cfg, trace, events, t_begin, t_end):
    v_dd = float(cfg["cell"]["v_dd"])
    ts, vs, s1s, s2s = trace
    integral = 0.0
    ev = 0
    while ev < len(events) and events[ev][0] <= ts[0]:
        ev += 1
    for k in range(len(ts) - 1):
        ta, tb, va, vb = ts[k], ts[k + 1], vs[k], vs[k + 1]
        s1, s2 = s1s[k], s2s[k]

        def v_at(t):
            return va + (vb - va) * (t - ta) / (tb - ta)

        def piece(lo, hi):
            lo, hi = max(lo, t_begin), min(hi, t_end)
            if hi <= lo:
                return 0.0
            g = top_conductance(cfg, s1, s2)
            return 0.5 * g * ((v_dd - v_at(lo)) + (v_dd - v_at(hi))) * (hi - lo)

        cursor = ta
        while ev < len(events) and events[ev][0] <= tb:
            t, _, _, device, state = events[ev]
            integral += piece(cursor, t)
            cursor = t
            if device == 1:
                s1 = state
            else:
                s2 = state
            ev += 1
        integral += piece(cursor, tb)
    return integral / (t_end - t_begin)


def read_trace(path: Path):
    ts, vs, s1, s2 = [], [], [], []
    with path.open(newline="") as f:
        for r in csv.DictReader(f):
            ts.append(float(r["t"]))
            vs.append(float(r["v"]))
            s1.append(int(r["state1"]))
            s2.append(int(r["state2"]) if r["state2"] != "" else 0)
    return ts, vs, s1, s2


def check(out_dir: Path):
    problems = []
    summary = json.loads((out_dir / "summary.json").read_text())
    cfg = configparser.ConfigParser()
    cfg.read_string(summary["config"])
    width, height = summary["grid"]

    def expect(name, got, want):
        if isinstance(want, float) or isinstance(got, float):
            ok = close(got, want)
        else:
            ok = got == want
        if not ok:
            problems.append(f"{out_dir}: {name}: summary {got!r}, recomputed {want!r}")

    events_path = out_dir / "events.csv"
    if not events_path.exists():
        return problems
    events = read_events(events_path)
    expect("event_count", summary["event_count"], len(events))
    expect("event_digest", summary["event_digest"], fnv1a64(events_path.read_bytes()))

    onsets = onsets_by_cell(events)
    for entry in summary["periods"]:
        cell = tuple(entry["cell"])
        cell_onsets = onsets.get(cell, [])
        expect(f"onsets {cell}", entry["onsets"], len(cell_onsets))
        expect(f"mean_period {cell}", entry["mean_period"],
               mean_period(cell_onsets) if len(cell_onsets) >= 2 else None)

    frames = out_dir / "frames"
    expect("frame_count", summary["frame_count"], len(list(frames.glob("*.csv"))) if frames.exists() else 0)

    if summary["command"] == "cell":
        if summary["supply_current"] is not None:
            cell_onsets = onsets.get((1, 1), [])
            trace = read_trace(out_dir / "trace.csv")
            expect("supply_current", summary["supply_current"],
                   supply_current(cfg, trace, events, cell_onsets[0], cell_onsets[-1]))
        return problems

    all_cells = [(x, y) for y in range(1, height + 1) for x in range(1, width + 1)]
    silent = sum(1 for c in all_cells if len(onsets.get(c, [])) < 2)
    expect("silent_cells", summary["silent_cells"], silent)
    order = summary["order_parameter"]
    if silent == 0:
        t_lo = max(onsets[c][0] for c in all_cells)
        t_hi = min(onsets[c][-1] for c in all_cells)
        if t_lo <= t_hi:
            phases = [phase_at(onsets[c], t_hi) for c in all_cells]
            r = math.hypot(sum(math.cos(p) for p in phases), sum(math.sin(p) for p in phases)) / len(phases)
            expect("order_parameter.t", order["t"], t_hi)
            if not math.isclose(order["r"], r, rel_tol=REL_TOL, abs_tol=1e-12):
                problems.append(f"{out_dir}: order_parameter.r: summary {order['r']!r}, recomputed {r!r}")
    else:
        expect("order_parameter.t", order["t"], None)
    return problems


def main(argv):
    if len(argv) < 2:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    problems = []
    for d in argv[1:]:
        problems += check(Path(d))
    for p in problems:
        print(p)
    print("summary check:", "ok" if not problems else f"{len(problems)} mismatches")
    return 1 if problems else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))

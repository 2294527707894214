"""Pulsed single-neuron traces for the three leak mechanisms.

Writes one trace CSV per mechanism plus a per-pulse summary (position at the
start and end of every on/off segment) so the sawtooth can be plotted or eyeballed.

    python3 scripts/sawtooth_traces.py --out out/sawtooth
"""

import argparse
from pathlib import Path

import numpy as np

from dwmtj.config import parse_config
from dwmtj.netsim import simulate_neuron
from dwmtj.traceio import write_events_csv, write_trace_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
MECHANISMS = ("dipolar", "anisotropy", "taper")


def segments(trace):
    on = np.array(trace.currents) > 0
    x = np.array(trace.positions)
    edges = np.flatnonzero(np.diff(on.astype(int))) + 1
    bounds = np.concatenate([[0], edges, [len(x) - 1]])
    for a, b in zip(bounds, bounds[1:]):
        yield trace.times[a], bool(on[a]), x[a], x[b]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("out/sawtooth"))
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    for name in MECHANISMS:
        cfg = parse_config(CONFIGS / f"neuron_{name}.json")
        sim = cfg.sim_config()
        # stride 1 so every step of the sawtooth is visible
        trace = simulate_neuron(cfg.neuron(), cfg.stimulus(), sim.dt, sim.t_end, 1)
        write_trace_csv(trace, args.out / f"{name}.csv")
        write_events_csv(trace, args.out / f"{name}_events.csv")
        lines = ["t_start_s,pulse_on,x_start_m,x_end_m"]
        lines += [f"{t:.6e},{int(on)},{x0:.6e},{x1:.6e}" for t, on, x0, x1 in segments(trace)]
        (args.out / f"{name}_segments.csv").write_text("\n".join(lines) + "\n")
        fires = ", ".join(f"{e.time_s * 1e9:.1f} ns" for e in trace.events) or "none"
        print(f"{name:10s} peak x = {max(trace.positions) * 1e6:.3f} um, fires: {fires}")


if __name__ == "__main__":
    main()

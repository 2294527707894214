"""CSV export of simulation traces and fire events."""

from __future__ import annotations

from pathlib import Path

from .netsim import SimTrace


def _fmt(x: float) -> str:
    return f"{x:.8e}"  # 9 significant digits


def trace_header(trace: SimTrace) -> list[str]:
    return (
        ["time_s"]
        + [f"pos_{l}_{n}" for l, n in trace.neuron_ids]
        + [f"mtj_{l}_{n}" for l, n in trace.neuron_ids]
        + [f"i_bit_{l}_{j}" for l, j in trace.bitline_ids]
    )


def write_trace_csv(trace: SimTrace, path) -> None:
    n_neurons, n_bits = len(trace.neuron_ids), len(trace.bitline_ids)
    lines = [",".join(trace_header(trace))]
    for k, t in enumerate(trace.times):
        pos = trace.positions[k * n_neurons:(k + 1) * n_neurons]
        mtj = trace.mtj[k * n_neurons:(k + 1) * n_neurons]
        cur = trace.currents[k * n_bits:(k + 1) * n_bits]
        lines.append(",".join([_fmt(t), *map(_fmt, pos), *map(str, mtj), *map(_fmt, cur)]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_events_csv(trace: SimTrace, path) -> None:
    lines = ["time_s,layer,neuron"]
    lines += [f"{_fmt(e.time_s)},{e.layer},{e.neuron}" for e in trace.events]
    Path(path).write_text("\n".join(lines) + "\n")

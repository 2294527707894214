"""``dwmtj`` command line: simulate-neuron, simulate-network, sweep, map-weights, verify.

Exit codes: 0 success, 1 usage or config validation error, 2 runtime error
(including a failed oracle verification).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigValidationError, ExperimentConfig, parse_config, validate, with_override
from .crossbar import read_matrix_csv, write_matrix_csv
from .mapping import UnsupportedConfiguration, map_weights, verify_against_oracle
from .netsim import run_network, simulate_neuron
from .traceio import _fmt, write_events_csv, write_trace_csv

log = logging.getLogger("dwmtj")

SUBCOMMANDS = ("simulate-neuron", "simulate-network", "sweep", "map-weights", "verify")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dwmtj", description="Behavioral DW-MTJ neuron and crossbar simulator.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, type=Path, help="experiment JSON")
        p.add_argument("--out", type=Path, help="output path")
        p.add_argument("--dump-config", action="store_true", help="print the fully defaulted config and exit")
        p.add_argument("--seed", type=int, help="override drive.seed")
        return p

    common(sub.add_parser("simulate-neuron", help="single-device trace under a current stimulus"))
    common(sub.add_parser("simulate-network", help="multilayer network trace"))
    p = common(sub.add_parser("sweep", help="vary one config parameter, write a summary CSV"))
    p.add_argument("--param", required=True, help="dotted config key, e.g. device.neuron.leak.drift_speed_mps")
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p = common(sub.add_parser("map-weights", help="weight CSV(s) to differential conductance CSVs"), False)
    p.add_argument("--weights", type=Path, help="single weight CSV (instead of network.weights)")
    common(sub.add_parser("verify", help="co-simulate against the abstract LIF oracle"))
    return parser


def _load(args) -> ExperimentConfig:
    cfg = parse_config(args.config) if args.config else validate({})
    if args.seed is not None:
        cfg = with_override(cfg, "drive.seed", args.seed)
    return cfg


def _outputs(cfg: ExperimentConfig, out):
    trace = out or cfg.data["output"]["trace"]
    if trace is None:
        raise ConfigValidationError(["output.trace: no output path (use --out)"])
    trace = Path(trace)
    events = cfg.data["output"]["events"]
    events = Path(events) if events and out is None else trace.with_name(trace.stem + "_events.csv")
    return trace, events


def _run_neuron(cfg: ExperimentConfig):
    sim = cfg.sim_config()
    return simulate_neuron(cfg.neuron(), cfg.stimulus(), sim.dt, sim.t_end, sim.sample_stride)


def _run_network(cfg: ExperimentConfig):
    if not cfg.has_network:
        raise ConfigValidationError(["network: section required for this subcommand"])
    return run_network(cfg.network(), cfg.drive(), cfg.sim_config())


def cmd_simulate(cfg, args, network: bool) -> int:
    trace_path, events_path = _outputs(cfg, args.out)
    trace = _run_network(cfg) if network else _run_neuron(cfg)
    for path in (trace_path, events_path):
        path.parent.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, trace_path)
    write_events_csv(trace, events_path)
    log.info("%d samples, %d fire events -> %s", len(trace.times), len(trace.events), trace_path)
    return 0


def _sweep_point(args):
    cfg, param, value = args
    point = with_override(cfg, param, value)
    trace = _run_network(point) if point.has_network else _run_neuron(point)
    times = sorted(e.time_s for e in trace.events)
    first = times[0] if times else float("nan")
    isi = float(np.mean(np.diff(times))) if len(times) > 1 else float("nan")
    return value, len(times), first, isi


def cmd_sweep(cfg, args) -> int:
    if args.steps < 1:
        raise ConfigValidationError(["--steps: must be >= 1"])
    if args.out is None:
        raise ConfigValidationError(["--out: sweep needs an output path"])
    values = [float(v) for v in np.linspace(args.start, args.stop, args.steps)]
    for v in values:  # validate every point before running any
        with_override(cfg, args.param, v)
    jobs = [(cfg, args.param, v) for v in values]
    workers = int(os.environ.get("DWMTJ_SIM_THREADS", os.cpu_count() or 1))
    workers = max(1, min(workers, len(jobs)))
    if workers == 1:
        rows = [_sweep_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    rows.sort(key=lambda r: r[0])
    lines = [f"{args.param},n_spikes,first_fire_s,mean_isi_s"]
    lines += [f"{_fmt(v)},{n},{_fmt(f)},{_fmt(i)}" for v, n, f, i in rows]
    args.out.write_text("\n".join(lines) + "\n")
    return 0


def cmd_map_weights(cfg, args) -> int:
    if args.out is None:
        raise ConfigValidationError(["--out: map-weights needs an output directory"])
    if args.weights is not None:
        weights = [read_matrix_csv(args.weights)]
    elif cfg.has_network:
        weights = cfg.weights()
    else:
        raise ConfigValidationError(["network.weights: give --weights or a config with a network"])
    barrier = cfg.synapse().barrier
    args.out.mkdir(parents=True, exist_ok=True)
    for k, W in enumerate(weights):
        G_plus, G_minus, mapping = map_weights(W, barrier.g_antiparallel_S, barrier.g_parallel_S)
        write_matrix_csv(G_plus, args.out / f"layer{k}_G_plus.csv")
        write_matrix_csv(G_minus, args.out / f"layer{k}_G_minus.csv")
        print(f"layer{k}: scale_S_per_unit={mapping.scale_S_per_unit:.9e} g_floor_S={mapping.g_floor_S:.9e}")
    return 0


def cmd_verify(cfg, args) -> int:
    if not cfg.has_network:
        raise ConfigValidationError(["network: section required for verify"])
    report = verify_against_oracle(cfg.network(), cfg.drive(), cfg.sim_config())
    text = report.to_text()
    sys.stdout.write(text)
    out = args.out or cfg.data["output"]["report"]
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    return 0 if report.spike_count_match else 2


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 1

    try:
        cfg = _load(args)
        if args.dump_config:
            text = cfg.to_json()
            if args.out:
                args.out.write_text(text)
            else:
                sys.stdout.write(text)
            return 0
        if args.command == "simulate-neuron":
            return cmd_simulate(cfg, args, network=False)
        if args.command == "simulate-network":
            return cmd_simulate(cfg, args, network=True)
        if args.command == "sweep":
            return cmd_sweep(cfg, args)
        if args.command == "map-weights":
            return cmd_map_weights(cfg, args)
        return cmd_verify(cfg, args)
    except ConfigValidationError as exc:
        for err in exc.errors:
            sys.stderr.write(f"config error: {err}\n")
        return 1
    except (OSError, ArithmeticError, np.linalg.LinAlgError, UnsupportedConfiguration, ValueError) as exc:
        sys.stderr.write(f"runtime error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

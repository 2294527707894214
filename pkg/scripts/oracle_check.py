"""Co-simulate a config's network against the abstract LIF oracle at several dt.

    python3 scripts/oracle_check.py --config configs/network_oracle.json --dt 1e-10 2e-10 5e-10
"""

import argparse
import time
from pathlib import Path

from dwmtj.config import parse_config, with_override
from dwmtj.mapping import verify_against_oracle


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, default=Path(__file__).resolve().parents[1] / "configs/network_oracle.json")
    parser.add_argument("--dt", type=float, nargs="+", default=[1e-10])
    args = parser.parse_args()

    base = parse_config(args.config)
    print("dt_s,spikes,spike_count_match,max_deviation_s,max_deviation_dt,seconds")
    for dt in args.dt:
        cfg = with_override(base, "simulation.dt_s", dt)
        start = time.perf_counter()
        report = verify_against_oracle(cfg.network(), cfg.drive(), cfg.sim_config())
        elapsed = time.perf_counter() - start
        spikes = sum(n for n, _, _ in report.per_neuron.values())
        print(f"{dt:.2e},{spikes},{str(report.spike_count_match).lower()},"
              f"{report.max_deviation_s:.3e},{report.max_deviation_s / dt:.2e},{elapsed:.2f}")


if __name__ == "__main__":
    main()

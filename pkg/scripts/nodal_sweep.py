"""IR-drop study: nodal vs ideal bit-line currents as wire resistance varies.

For each array size, draws random synapse positions and word-line voltages and
records the worst relative deviation at each R_seg. Output columns:
``size,r_seg_times_gP,min_dev,mean_dev,max_dev``.

    python3 scripts/nodal_sweep.py --sizes 2 4 8 16 --trials 20 --out out/nodal_sweep.csv
"""

import argparse
from pathlib import Path

import numpy as np

from dwmtj.crossbar import CrossbarLayer, conductance_matrix, transfer_matrix
from dwmtj.device import SynapseDevice


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[2, 4, 8, 16])
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--decades", type=float, nargs=2, default=[-5.0, 2.0], help="log10 range of R_seg*g_P")
    parser.add_argument("--points", type=int, default=15)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=Path("out/nodal_sweep.csv"))
    args = parser.parse_args()

    syn = SynapseDevice()
    g_p = syn.barrier.g_parallel_S
    factors = np.logspace(*args.decades, args.points)
    rng = np.random.default_rng(args.seed)
    rows = ["size,r_seg_times_gP,min_dev,mean_dev,max_dev"]
    for n in args.sizes:
        draws = [(rng.uniform(0, 1e-6, (n, n)), rng.uniform(0, 1, n)) for _ in range(args.trials)]
        for f in factors:
            devs = []
            for pos, V in draws:
                layer = CrossbarLayer.from_positions(syn, pos, f / g_p)
                ideal = V @ conductance_matrix(layer)
                devs.append(np.max(np.abs(V @ transfer_matrix(layer) - ideal) / ideal))
            rows.append(f"{n},{f:.4e},{min(devs):.4e},{np.mean(devs):.4e},{max(devs):.4e}")
        print(f"{n}x{n}: max deviation {rows[-args.points].split(',')[-1]} at R_seg*g_P={factors[0]:.0e}, "
              f"{rows[-1].split(',')[-1]} at {factors[-1]:.0e}")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()

"""L4 decay of single-block replica words x_sigma^n, fitted on a log-log scale.

    python3 scripts/decay_probe.py --q 0 0.5 --ns 2 4 8 16
"""
import argparse
from dataclasses import dataclass, field

import numpy as np

from qgauss.partitions import Partition
from qgauss.wick import decay_probe, l2_norm, x_sigma_n
from qgauss.qfock import FockSpace


@dataclass
class DecayConfig:
    qs: list = field(default_factory=lambda: [0.0, 0.5])
    ns: list = field(default_factory=lambda: [2, 4, 8, 16])
    blocks: list = field(default_factory=lambda: [[1, 2, 3]])


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--q", type=float, nargs="+", default=DecayConfig().qs)
    p.add_argument("--ns", type=int, nargs="+", default=DecayConfig().ns)
    args = p.parse_args()
    cfg = DecayConfig(qs=args.q, ns=args.ns)
    sigma = Partition.from_blocks(cfg.blocks)
    hs = [np.array([1.0])] * sigma.m
    print("q,slope_l4,slope_l2," + ",".join(f"l4_n{n}" for n in cfg.ns))
    for q in cfg.qs:
        slope, norms = decay_probe(sigma, hs, q, ns=tuple(cfg.ns))
        dummy = FockSpace(1, 0, q)
        l2 = [l2_norm(x_sigma_n(dummy, sigma, hs, n, build_operator=False), q) for n in cfg.ns]
        slope2 = float(np.polyfit(np.log(cfg.ns), np.log(l2), 1)[0])
        print(f"{q},{slope:.4f},{slope2:.4f}," + ",".join(f"{v:.6g}" for v in norms))


if __name__ == "__main__":
    main()

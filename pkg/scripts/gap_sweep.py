"""Smallest eigenvalue of the gap operator over |F| and q, written as CSV.

    python3 scripts/gap_sweep.py --fsizes 1 2 3 4 --q 0 0.3 0.6 0.9 --cutoff 3
"""
import argparse
import csv
import sys
from dataclasses import dataclass, field

from qgauss.gqg import spectral_gap
from qgauss.qfock import ResourceGuardError


@dataclass
class SweepConfig:
    fsizes: list = field(default_factory=lambda: [1, 2, 3, 4])
    qs: list = field(default_factory=lambda: [0.0, 0.3, 0.6, 0.9])
    cutoff: int = 3


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--fsizes", type=int, nargs="+", default=SweepConfig().fsizes)
    p.add_argument("--q", type=float, nargs="+", default=SweepConfig().qs)
    p.add_argument("--cutoff", type=int, default=SweepConfig.cutoff)
    args = p.parse_args()
    cfg = SweepConfig(args.fsizes, args.q, args.cutoff)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["q", "F", "cutoff", "lambda_min", "leading_term"])
    for q in cfg.qs:
        for f in cfg.fsizes:
            try:
                rep = spectral_gap(f, q, cfg.cutoff)
            except ResourceGuardError as exc:
                print(f"# skipped q={q} |F|={f}: {exc}", file=sys.stderr)
                continue
            out.writerow([q, f, cfg.cutoff, f"{rep.lam_min:.10g}", f"{rep.leading_term:.6g}"])
            sys.stdout.flush()


if __name__ == "__main__":
    main()

"""Adversarial search for almost-invariant torus measures with no mass at the origin.

    python3 scripts/rigidity_search.py --resolutions 8 16 32 --seeds 0 1 2 --trials 10000
"""
import argparse
import json
from dataclasses import dataclass, field

from qgauss.rigidity import lemma55_adversary, write_measure_csv


@dataclass
class SearchConfig:
    resolutions: list = field(default_factory=lambda: [8, 16, 32])
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    trials: int = 10_000
    save_best: str | None = None


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--resolutions", type=int, nargs="+", default=SearchConfig().resolutions)
    p.add_argument("--seeds", type=int, nargs="+", default=SearchConfig().seeds)
    p.add_argument("--trials", type=int, default=SearchConfig.trials)
    p.add_argument("--save-best", help="CSV path for the lowest-defect measure found")
    args = p.parse_args()
    cfg = SearchConfig(args.resolutions, args.seeds, args.trials, args.save_best)
    best = None
    for L in cfg.resolutions:
        for seed in cfg.seeds:
            res = lemma55_adversary(L, cfg.trials, seed, certificate=(seed == cfg.seeds[0]))
            print(json.dumps(res.to_dict(), sort_keys=True))
            if best is None or res.minimum < best.minimum:
                best = res
    if cfg.save_best and best is not None:
        write_measure_csv(cfg.save_best, best.best)


if __name__ == "__main__":
    main()

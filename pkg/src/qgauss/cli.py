"""Command line: ``qgauss {moments,verify,gap,rigidity}``.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config error,
3 resource guard refused the run.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from . import rigidity as rg
from .gqg import GroupError, guard_coordinates, load_group, spectral_gap
from .qfock import FockSpace, ResourceGuardError, field_moment, moment_combinatorial
from .suites import SUITE_FUNCS, SUITES, Record, SuiteConfig, at_least, close, derive_seed

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_GUARD = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    q: float = 0.3
    dim: int = 2
    cutoff: int | None = None  # per-command default when omitted
    group: str = "S3"
    seed: int = 0
    suite: str = "all"
    out: str | None = None
    format: str = "json"
    trials: int = 10_000
    resolution: int = 16
    maxlen: int = 4
    fsizes: list[int] = field(default_factory=lambda: [1, 2, 4])
    timing: bool = False

    def validate(self, command: str):
        if self.format not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        if command in ("moments", "verify", "gap") and not -1 < self.q < 1:
            raise ConfigError("matrix suites need |q| < 1")
        if self.dim < 1:
            raise ConfigError("dim must be positive")
        if self.cutoff is not None and self.cutoff < 0:
            raise ConfigError("cutoff must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if self.resolution < 4:
            raise ConfigError("resolution must be at least 4")
        if self.maxlen < 0:
            raise ConfigError("maxlen must be nonnegative")
        if command == "gap" and (not self.fsizes or any(f < 1 for f in self.fsizes)):
            raise ConfigError("fsizes must be a nonempty list of positive integers")
        if command == "verify" and self.suite not in SUITES + ("all",):
            raise ConfigError(f"suite must be one of {SUITES + ('all',)}")


# -- commands ---------------------------------------------------------------

def cmd_moments(cfg: RunConfig):
    dim = max(cfg.dim, 2)
    cutoff = cfg.cutoff if cfg.cutoff is not None else (cfg.maxlen + 1) // 2
    if 2 * cutoff < cfg.maxlen:
        raise ConfigError("cutoff must be at least maxlen / 2 for exact vacuum moments")
    size = sum(dim**n for n in range(cutoff + 1))
    if size > guard_coordinates():
        raise ResourceGuardError(f"Fock basis of size {size} exceeds guard {guard_coordinates()}")
    space = FockSpace(dim, cutoff, cfg.q)
    basis = np.eye(dim)
    rows, records = [], []
    for m in range(1, cfg.maxlen + 1):
        for word in itertools.product((0, 1), repeat=m):
            hs = [basis[i] for i in word]
            tr = float(np.real(field_moment(space, hs)))
            comb = float(moment_combinatorial(hs, cfg.q))
            label = "".join("hk"[i] for i in word)
            rows.append({"word": label, "vacuum_trace": tr, "combinatorial": comb, "delta": abs(tr - comb)})
            records.append(close(f"moments.{label}", comb, tr, 1e-10, "vacuum moments as pair-partition sums"))
    return records, rows, {"dim": dim, "cutoff": cutoff}


def cmd_verify(cfg: RunConfig):
    scfg = SuiteConfig(q=cfg.q, dim=cfg.dim, cutoff=4 if cfg.cutoff is None else cfg.cutoff, group=cfg.group,
                       seed=cfg.seed, trials=cfg.trials, resolution=cfg.resolution)
    if scfg.cutoff < 1:
        raise ConfigError("verify needs cutoff >= 1")
    load_group(cfg.group)  # config errors before any work
    names = SUITES if cfg.suite == "all" else (cfg.suite,)
    records = []
    for name in names:
        records.extend(SUITE_FUNCS[name](scfg))
    return records, None, {"seeds": scfg.seeds}


def cmd_gap(cfg: RunConfig):
    cutoff = 3 if cfg.cutoff is None else cfg.cutoff
    if cutoff < 1:
        raise ConfigError("gap needs cutoff >= 1")
    rows, records = [], []
    for f in cfg.fsizes:
        rep = spectral_gap(f, cfg.q, cutoff)
        rows.append({"F": f, "lambda_min": rep.lam_min})
        records.append(at_least(f"gap.positive.F{f:03d}", rep.lam_min, 1e-9, "spectral gap on the vacuum complement"))
        records.append(close(f"gap.normalization.F{f:03d}", 0.0, max(abs(t) for t in rep.trace_x), 1e-12,
                             "tau(x_g) = 0"))
    if len(rows) > 1:
        lam = [r["lambda_min"] for r in sorted(rows, key=lambda r: r["F"])]
        inc = all(b > a for a, b in zip(lam, lam[1:]))
        records.append(Record("gap.monotone_in_F", "strictly increasing", lam, None, inc,
                              "gap grows with the number of generators"))
    return records, rows, {"cutoff": cutoff}


def cmd_rigidity(cfg: RunConfig):
    L = cfg.resolution
    seed = derive_seed(cfg.seed, "rigidity.adversary")
    res = rg.lemma55_adversary(L, cfg.trials, seed)
    records = [
        Record("rigidity.dirac.defect", 0.0, rg.default_defect(rg.GridMeasure.dirac0(L)), 0.0,
               rg.default_defect(rg.GridMeasure.dirac0(L)) == 0.0, "fixed point has zero defect"),
        at_least("rigidity.adversary.min_defect", res.minimum, rg.LEMMA_THRESHOLD,
                 "no almost-invariant measure away from the origin"),
    ]
    rows = []
    if L % 2 == 0:
        for beta in (1e-3, 1e-2, 0.1, 0.5):
            rep = rg.tpp_concentration(rg.mu_beta(L, beta))
            rows.append({"family": "mu_beta", **rep})
            records.append(Record(f"rigidity.mu_beta.{beta:g}", f"l1 <= {rg.TPP_CONSTANT} * defect",
                                  rep["l1_distance"], None, rep["pass"], "concentration constant 40"))
    cells = L * L - 1
    off = np.full((L, L), 1.0 / cells)
    off[0, 0] = 0.0
    mix = rg.GridMeasure.dirac0(L).mix(rg.GridMeasure(off), 1e-3)
    rep = rg.tpp_concentration(mix)
    rows.append({"family": "near_dirac", **rep})
    records.append(Record("rigidity.near_dirac", f"l1 <= {rg.TPP_CONSTANT} * defect", rep["l1_distance"], None,
                          rep["pass"], "concentration constant 40"))
    return records, rows, {"adversary": res.to_dict(), "seeds": {"rigidity.adversary": seed}}


COMMANDS = {"moments": cmd_moments, "verify": cmd_verify, "gap": cmd_gap, "rigidity": cmd_rigidity}


# -- plumbing ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    common.add_argument("--q", type=float)
    common.add_argument("--dim", type=int)
    common.add_argument("--cutoff", type=int)
    common.add_argument("--group", help="builtin name (S3, D4, Z2xZ2, Zn) or JSON path")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output path (stdout when omitted)")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--trials", type=int)
    common.add_argument("--resolution", type=int)
    common.add_argument("--timing", action="store_true", default=None, help="record wall-clock seconds")
    p = argparse.ArgumentParser(prog="qgauss", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    m = sub.add_parser("moments", parents=[common], help="vacuum moments, matrix and combinatorial")
    m.add_argument("--maxlen", type=int)
    v = sub.add_parser("verify", parents=[common], help="run invariant suites")
    v.add_argument("--suite", choices=SUITES + ("all",))
    g = sub.add_parser("gap", parents=[common], help="spectral-gap sweep over |F|")
    g.add_argument("--fsizes", type=lambda s: [int(x) for x in s.split(",") if x.strip()],
                   help="comma-separated |F| values")
    sub.add_parser("rigidity", parents=[common], help="torus rigidity experiments")
    return p


def load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    names = {f.name for f in fields(RunConfig)}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for k, v in data.items():
            setattr(cfg, k, v)
    for k in names:
        v = getattr(args, k, None)
        if v is not None:
            setattr(cfg, k, v)
    return cfg


def make_report(command: str, cfg: RunConfig, records: list[Record], extra: dict, elapsed: float | None) -> dict:
    recs = sorted((r.to_dict() for r in records), key=lambda r: r["name"])
    conf = asdict(cfg)
    conf.pop("out")
    return {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "command": command,
        "suite": cfg.suite if command == "verify" else command,
        "config": conf,
        **extra,
        "records": recs,
        "pass": all(r["pass"] for r in recs),
        "wall_clock_s": elapsed,
    }


def render(report: dict, rows, fmt: str) -> str:
    if fmt == "json":
        if rows is not None:
            report = {**report, "table": rows}
        return json.dumps(report, indent=2, sort_keys=True, default=float) + "\n"
    buf = io.StringIO()
    table = rows if rows else report["records"]
    cols = list(table[0].keys()) if table else []
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in table:
        w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
    return buf.getvalue()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = load_config(args)
        cfg.validate(args.command)
        start = time.perf_counter()
        records, rows, extra = COMMANDS[args.command](cfg)
        elapsed = round(time.perf_counter() - start, 3) if cfg.timing else None
    except (ConfigError, GroupError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceGuardError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    report = make_report(args.command, cfg, records, extra, elapsed)
    text = render(report, rows, cfg.format)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if report["pass"] else EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())

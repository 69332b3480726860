"""Grid measures on the torus under the dual SL2(Z) action: invariance defects and concentration.

Cell ``(i, j)`` of an ``L x L`` grid is the character ``chi = (i/L, j/L) mod 1``;
its representative in ``(-1/2, 1/2]^2`` is used whenever a signed coordinate is
needed.  All norms between measures are L1 (twice total variation).
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix, hstack, vstack, identity

MASS_TOL = 1e-12
LEMMA_THRESHOLD = 1 / 20
TPP_CONSTANT = 40


@dataclass(frozen=True, eq=False)
class GridMeasure:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise ValueError("weights must be a square L x L array")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def L(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def normalized(cls, weights) -> "GridMeasure":
        w = np.asarray(weights, dtype=float)
        return cls(w / w.sum())

    @classmethod
    def point(cls, L: int, i: int, j: int) -> "GridMeasure":
        w = np.zeros((L, L))
        w[i % L, j % L] = 1.0
        return cls(w)

    @classmethod
    def dirac0(cls, L: int) -> "GridMeasure":
        return cls.point(L, 0, 0)

    @classmethod
    def uniform(cls, L: int) -> "GridMeasure":
        return cls(np.full((L, L), 1.0 / L**2))

    def mix(self, other: "GridMeasure", beta: float) -> "GridMeasure":
        """``(1 - beta) self + beta other``."""
        return GridMeasure((1 - beta) * self.weights + beta * other.weights)

    def l1(self, other: "GridMeasure") -> float:
        return float(np.abs(self.weights - other.weights).sum())

    def __eq__(self, other):
        return isinstance(other, GridMeasure) and np.array_equal(self.weights, other.weights)

    __hash__ = None


@dataclass(frozen=True)
class IntMatrix:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for v in (self.a, self.b, self.c, self.d):
            if int(v) != v:
                raise ValueError("entries must be integers")
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError("determinant must be 1")

    @classmethod
    def from_array(cls, m) -> "IntMatrix":
        m = np.asarray(m)
        return cls(int(m[0, 0]), int(m[0, 1]), int(m[1, 0]), int(m[1, 1]))

    def array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=np.int64)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        return IntMatrix.from_array(self.array() @ other.array())

    def inverse(self) -> "IntMatrix":
        return IntMatrix(self.d, -self.b, -self.c, self.a)

    def dual(self) -> np.ndarray:
        """``(A^T)^-1``, the matrix acting on characters."""
        return self.inverse().array().T


@dataclass(frozen=True)
class Character:
    m1: int
    m2: int

    def vector(self) -> np.ndarray:
        return np.array([self.m1, self.m2], dtype=np.int64)


def lower(r: int) -> IntMatrix:
    return IntMatrix(1, 0, r, 1)


def upper(r: int) -> IntMatrix:
    return IntMatrix(1, r, 0, 1)


def F1(r: int = 1) -> tuple[IntMatrix, ...]:
    return (lower(r), lower(-r), upper(r), upper(-r))


def F2() -> tuple[Character, ...]:
    return (Character(1, 0), Character(-1, 0), Character(0, 1), Character(0, -1))


def signed_coordinates(L: int) -> np.ndarray:
    """Representatives of ``k / L`` in ``(-1/2, 1/2]``."""
    k = np.arange(L)
    return np.where(k <= L // 2, k, k - L) / L


def in_central_window(L: int) -> np.ndarray:
    """Mask of cells with both coordinates in the open window ``(-1/4, 1/4)``."""
    t = np.abs(signed_coordinates(L)) < 0.25
    return t[:, None] & t[None, :]


# -- dynamics and defects ---------------------------------------------------

def _dual_index(A: IntMatrix, L: int) -> np.ndarray:
    """Flat target index of every cell under ``chi -> (A^T)^-1 chi mod 1``."""
    M = A.dual()
    i, j = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
    ti = (M[0, 0] * i + M[0, 1] * j) % L
    tj = (M[1, 0] * i + M[1, 1] * j) % L
    return (ti * L + tj).ravel()


def dual_action(A: IntMatrix, mu: GridMeasure) -> GridMeasure:
    L = mu.L
    out = np.zeros(L * L)
    np.add.at(out, _dual_index(A, L), mu.weights.ravel())
    return GridMeasure(out.reshape(L, L))


def _character_factor(h: Character, L: int) -> np.ndarray:
    i, j = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
    phase = 2 * np.pi * (((h.m1 * i + h.m2 * j) % L) / L)
    return np.abs(np.exp(1j * phase) - 1).ravel()


def character_defect(h: Character, mu: GridMeasure) -> float:
    return float(_character_factor(h, mu.L) @ mu.weights.ravel())


def action_defect(A: IntMatrix, mu: GridMeasure) -> float:
    return dual_action(A, mu).l1(mu)


def invariance_defect(F1s, F2s, mu: GridMeasure) -> float:
    vals = [character_defect(h, mu) for h in F2s] + [action_defect(A, mu) for A in F1s]
    return float(max(vals, default=0.0))


def default_defect(mu: GridMeasure) -> float:
    return invariance_defect(F1(1), F2(), mu)


class DefectEvaluator:
    """Vectorized ``F1(1) u F2`` defect for batches of flattened weight vectors."""

    def __init__(self, L: int, F1s=None, F2s=None):
        self.L = L
        self.F1s = F1(1) if F1s is None else tuple(F1s)
        self.F2s = F2() if F2s is None else tuple(F2s)
        self.chars = np.stack([_character_factor(h, L) for h in self.F2s]) if self.F2s else np.zeros((0, L * L))
        # pushforward of w is w[preimage]; dual maps are bijections of the grid
        self.pre = []
        for A in self.F1s:
            idx = _dual_index(A, L)
            inv = np.empty_like(idx)
            inv[idx] = np.arange(L * L)
            self.pre.append(inv)

    def __call__(self, W: np.ndarray) -> np.ndarray:
        W = np.atleast_2d(W)
        vals = [W @ self.chars.T] if len(self.chars) else []
        for inv in self.pre:
            vals.append(np.abs(W[:, inv] - W).sum(axis=1)[:, None])
        return np.max(np.hstack(vals), axis=1)


# -- adversarial search -----------------------------------------------------

@dataclass
class AdversaryResult:
    L: int
    trials: int
    seed: int
    random_min: float
    descent_min: float
    lp_min: float | None
    best: GridMeasure

    @property
    def minimum(self) -> float:
        vals = [self.random_min, self.descent_min] + ([self.lp_min] if self.lp_min is not None else [])
        return float(min(vals))

    @property
    def passed(self) -> bool:
        return self.minimum >= LEMMA_THRESHOLD

    def to_dict(self) -> dict:
        return {"L": self.L, "trials": self.trials, "seed": self.seed, "random_min": self.random_min,
                "descent_min": self.descent_min, "lp_min": self.lp_min, "min_defect": self.minimum,
                "threshold": LEMMA_THRESHOLD, "pass": self.passed}


def _random_batch(rng: np.random.Generator, n: int, L: int) -> np.ndarray:
    """Mixed families: dense Dirichlet, sparse supports, and mass hugging the origin."""
    cells = L * L
    W = np.zeros((n, cells))
    kind = rng.integers(0, 3, size=n)
    for r in range(n):
        if kind[r] == 0:
            W[r] = rng.dirichlet(np.full(cells, rng.choice([0.05, 0.3, 1.0, 5.0])))
        elif kind[r] == 1:
            k = int(rng.integers(1, 6))
            W[r, rng.choice(np.arange(1, cells), size=k, replace=False)] = rng.dirichlet(np.ones(k))
        else:
            s = signed_coordinates(L)
            r2 = s[:, None] ** 2 + s[None, :] ** 2
            logits = -r2.ravel() / rng.uniform(0.002, 0.05) + rng.normal(0, 0.5, cells)
            p = np.exp(logits - logits.max())
            W[r] = p
    W[:, 0] = 0.0
    return W / W.sum(axis=1, keepdims=True)


def _descent(ev: DefectEvaluator, w: np.ndarray, rng: np.random.Generator, steps: int) -> np.ndarray:
    """Pairwise mass transfers accepted when the defect drops; origin stays empty."""
    cells = w.size
    best = ev(w)[0]
    fracs = np.array([1.0, 0.5, 0.1, 0.01])
    batch = 64
    for _ in range(steps):
        src = rng.choice(np.nonzero(w > 0)[0], size=batch)
        dst = rng.integers(1, cells, size=batch)
        frac = rng.choice(fracs, size=batch)
        cand = np.repeat(w[None], batch, axis=0)
        moved = cand[np.arange(batch), src] * frac
        cand[np.arange(batch), src] -= moved
        cand[np.arange(batch), dst] += moved
        vals = ev(cand)
        k = int(np.argmin(vals))
        if vals[k] < best - 1e-15:
            best, w = vals[k], cand[k]
    return w


def lp_minimum(L: int, F1s=None, F2s=None) -> tuple[float, np.ndarray]:
    """Exact minimum of the defect over grid measures with no mass at the origin (linear program).

    Variables ``w`` (cells), ``s_k`` (cells, one block per matrix) and ``t``;
    minimize ``t`` with ``char_h . w <= t``, ``|P_k w - w| <= s_k``, ``sum s_k <= t``.
    """
    ev = DefectEvaluator(L, F1s, F2s)
    n = L * L
    nk = len(ev.pre)
    nvar = n + nk * n + 1
    rows = []
    b = []
    t_col = coo_matrix(np.ones((1, 1)))
    for c in ev.chars:
        rows.append(hstack([coo_matrix(c[None]), coo_matrix((1, nk * n)), -t_col]))
        b.append(np.zeros(1))
    I = identity(n, format="csr")
    for k, inv in enumerate(ev.pre):
        P = coo_matrix((np.ones(n), (np.arange(n), inv)), shape=(n, n)).tocsr() - I
        pad_l = coo_matrix((n, k * n))
        pad_r = coo_matrix((n, (nk - k - 1) * n))
        for sign in (1, -1):
            rows.append(hstack([sign * P, pad_l, -I, pad_r, coo_matrix((n, 1))]))
            b.append(np.zeros(n))
        sel = np.zeros((1, nk * n))
        sel[0, k * n:(k + 1) * n] = 1
        rows.append(hstack([coo_matrix((1, n)), coo_matrix(sel), -t_col]))
        b.append(np.zeros(1))
    A_ub = vstack(rows).tocsr()
    b_ub = np.concatenate(b)
    A_eq = np.zeros((1, nvar))
    A_eq[0, :n] = 1
    bounds = [(0, 0)] + [(0, None)] * (nvar - 1)
    cost = np.zeros(nvar)
    cost[-1] = 1
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"linear program failed: {res.message}")
    w = np.clip(res.x[:n], 0, None)
    return float(res.fun), w / w.sum()


def lemma55_adversary(L: int = 16, trials: int = 10_000, seed: int = 0, descent_steps: int = 300,
                      restarts: int = 4, certificate: bool = True) -> AdversaryResult:
    """Search for a measure with no mass at the origin and small ``F1(1) u F2`` defect."""
    if L < 4:
        raise ValueError("resolution must be at least 4")
    ev = DefectEvaluator(L)
    ss = np.random.SeedSequence(seed)
    block = 1000
    best_vals, best_ws = [], []
    for child, start in zip(ss.spawn((trials + block - 1) // block), range(0, trials, block)):
        rng = np.random.default_rng(child)
        W = _random_batch(rng, min(block, trials - start), L)
        vals = ev(W)
        order = np.argsort(vals)[:restarts]
        best_vals.extend(vals[order])
        best_ws.extend(W[order])
    best_vals = np.array(best_vals)
    top = np.argsort(best_vals)[:restarts]
    random_min = float(best_vals[top[0]])
    rng = np.random.default_rng(ss.spawn(1)[0])
    refined = [_descent(ev, best_ws[k].copy(), rng, descent_steps) for k in top]
    rvals = ev(np.array(refined))
    k = int(np.argmin(rvals))
    best = refined[k]
    lp = None
    if certificate:
        lp, w_lp = lp_minimum(L)
        if lp < rvals[k]:
            best = w_lp
    return AdversaryResult(L, trials, seed, random_min, float(rvals[k]), lp,
                           GridMeasure.normalized(best.reshape(L, L)))


# -- concentration ----------------------------------------------------------

def tpp_concentration(mu: GridMeasure, eps: float | None = None, F1s=None, F2s=None) -> dict:
    """Check ``||mu - delta_0|| <= 40 * defect`` together with ``||mu - delta_0|| <= 2 (1 - beta)``."""
    F1s = F1(1) if F1s is None else F1s
    F2s = F2() if F2s is None else F2s
    beta = float(mu.weights[0, 0])
    defect = invariance_defect(F1s, F2s, mu)
    dist = mu.l1(GridMeasure.dirac0(mu.L))
    report = {
        "beta": beta,
        "defect": defect,
        "l1_distance": dist,
        "bound_40delta": TPP_CONSTANT * defect,
        "pass": bool(dist <= TPP_CONSTANT * defect + 1e-12 and dist <= 2 * (1 - beta) + 1e-12),
    }
    if eps is not None:
        report["eps"] = eps
        if defect < eps / TPP_CONSTANT:
            report["pass"] = report["pass"] and dist < eps
    return report


def mu_beta(L: int, beta: float) -> GridMeasure:
    """``(1 - beta) delta_0 + beta delta_{(1/2, 1/2)}``; needs even ``L``."""
    if L % 2:
        raise ValueError("the point (1/2, 1/2) needs an even resolution")
    return GridMeasure.dirac0(L).mix(GridMeasure.point(L, L // 2, L // 2), beta)


# -- I/O --------------------------------------------------------------------

def write_measure_csv(path, mu: GridMeasure) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "weight"])
        for i in range(mu.L):
            for j in range(mu.L):
                w.writerow([i, j, repr(float(mu.weights[i, j]))])


def read_measure_csv(path, L: int | None = None) -> GridMeasure:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append((int(rec["i"]), int(rec["j"]), float(rec["weight"])))
    if not rows:
        raise ValueError(f"{path}: no measure rows")
    L = max(max(i, j) for i, j, _ in rows) + 1 if L is None else L
    w = np.zeros((L, L))
    for i, j, x in rows:
        if not (0 <= i < L and 0 <= j < L):
            raise ValueError(f"cell ({i}, {j}) outside a {L} x {L} grid")
        w[i, j] += x
    return GridMeasure(w)


def save_report(path, report: dict) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")

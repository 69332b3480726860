"""Spectral-gap operator ``T = sum_g |L(x_g) - R(x_g*)|^2`` on ``L2(Gamma_q) minus C Omega``.

``x_g = s(a_g)^2 + s(b_g)^2 - c`` with ``a_g = e_{2g}``, ``b_g = e_{2g+1}``
orthonormal and ``c = 2`` so that ``tau(x_g) = 0``.  Right multiplication is
``R(x) = J L(x*) J`` with ``J`` word reversal; ``x_g`` is self-adjoint with
real coefficients, so ``R(x_g) = J L(x_g) J``.

Vectors of degree ``1..N`` map into degree ``<= N + 2``, so on a Fock space
with cutoff ``N + 2`` every matrix element of ``T`` on the input block is exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.linalg as sla

from ..qfock import FockSpace, ResourceGuardError, field, reversal, vacuum_trace
from .model import guard_bytes

COLUMN_CHUNK = 128


def gap_bytes(nf: int, cutoff: int) -> int:
    """Rough peak memory: the dense forms ``Q``, ``G_in`` and one densified column chunk."""
    dim = 2 * nf
    m = sum(dim**n for n in range(1, cutoff + 1))
    top = dim ** (cutoff + 2)
    return 8 * (3 * m * m + 3 * top * COLUMN_CHUNK) + 200 * sum(dim**n for n in range(cutoff + 3))


@dataclass
class GapReport:
    nf: int
    q: float
    cutoff: int
    lam_min: float
    trace_x: list[float] = dc_field(default_factory=list)
    leading_term: float = 0.0

    @property
    def positive(self) -> bool:
        return self.lam_min > 1e-9

    def to_dict(self) -> dict:
        return {"F": self.nf, "q": self.q, "cutoff": self.cutoff, "lambda_min": self.lam_min,
                "tau_x": self.trace_x, "leading_term": self.leading_term, "positive": self.positive}


def _x_operator(space: FockSpace, g: int, c: float = 2.0):
    a = np.eye(space.dim)[2 * g]
    b = np.eye(space.dim)[2 * g + 1]
    sa, sb = field(space, a), field(space, b)
    return sa @ sa + sb @ sb - space.identity() * c


def gap_operator(nf: int, q: float, cutoff: int, c: float = 2.0):
    """Returns ``(Q, G_in, space, taus)`` with ``Q`` the Gram-weighted form of ``T``
    on degrees ``1..cutoff`` and ``G_in`` the q-Gram of that block."""
    if nf < 1:
        raise ValueError("F must be nonempty")
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    dim = 2 * nf
    need, limit = gap_bytes(nf, cutoff), guard_bytes()
    if need > limit:
        raise ResourceGuardError(f"gap operator needs about {need} bytes, guard allows {limit}")
    space = FockSpace(dim, cutoff + 2, q)
    J = reversal(space)
    cols = np.arange(space.offsets[1], space.offsets[cutoff + 1])
    m = len(cols)
    Q = np.zeros((m, m))
    taus = []
    for g in range(nf):
        X = _x_operator(space, g, c)
        taus.append(float(np.real(vacuum_trace(X))))
        L = X.mat
        D = (L - J @ L @ J)[:, cols].tocsc()
        for n in range(space.cutoff + 1):
            blk = D[space.degree_slice(n)].tocsc()
            if blk.nnz == 0:
                continue
            blk_t = blk.T.tocsr()
            for start in range(0, m, COLUMN_CHUNK):
                part = blk[:, start:start + COLUMN_CHUNK].toarray()
                Q[:, start:start + COLUMN_CHUNK] += blk_t @ space.gram_apply(n, part)
    G_in = sla.block_diag(*(space.gram(n) for n in range(1, cutoff + 1)))
    return (Q + Q.T) / 2, G_in, space, taus


def spectral_gap(nf: int, q: float, cutoff: int = 3, c: float = 2.0) -> GapReport:
    """Smallest eigenvalue of ``T`` restricted to ``Omega-perp`` at the given cutoff."""
    Q, G_in, _, taus = gap_operator(nf, q, cutoff, c)
    lam = float(sla.eigh(Q, G_in, eigvals_only=True, subset_by_index=[0, 0])[0])
    return GapReport(nf, float(q), cutoff, lam, taus, 4 * (1 + q) * (1 - q * q) * nf)


def right_multiplication_defect(nf: int, q: float, cutoff: int = 4, seed: int = 0) -> float:
    """``max |R(y) x Omega - x y Omega|`` for ``x = x_g``, ``y`` a random polynomial of degree 2."""
    rng = np.random.default_rng(seed)
    space = FockSpace(2 * nf, cutoff, q)
    J = reversal(space)
    worst = 0.0
    for g in range(nf):
        X = _x_operator(space, g).mat
        hs = rng.normal(size=(2, space.dim))
        Y = (field(space, hs[0]) @ field(space, hs[1])).mat
        # R(y) = J L(y*) J; y* = s(h1) s(h0) for real h
        Ystar = (field(space, hs[1]) @ field(space, hs[0])).mat
        lhs = J @ Ystar @ J @ (X @ space.vacuum())
        rhs = X @ (Y @ space.vacuum())
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst

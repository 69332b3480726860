"""Algebraic relations checked on the crossed-product model."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..partitions import Partition
from .model import CrossedProductModel


class RelationError(ValueError):
    pass


def word_operator(model: CrossedProductModel, gs, ks=None, coeffs=None) -> sp.csr_matrix:
    """``S(g1 (x) k1) a1 S(g2 (x) k2) a2 ... S(gm (x) km) am`` (``a_j = 1`` when omitted)."""
    ks = [0] * len(gs) if ks is None else ks
    out = sp.identity(model.size, format="csr")
    for j, (g, k) in enumerate(zip(gs, ks)):
        out = out @ model.generator(g, k)
        if coeffs is not None:
            out = out @ model.multiplier(coeffs[j])
    return out.tocsr()


def word_vector(model: CrossedProductModel, gs, ks=None, coeffs=None) -> np.ndarray:
    """The same word applied to the trace vector, right to left."""
    ks = [0] * len(gs) if ks is None else ks
    v = model.cyclic_vector().astype(complex)
    for j in reversed(range(len(gs))):
        if coeffs is not None:
            v = model.multiplier(coeffs[j]) @ v
        v = model.generator(gs[j], ks[j]) @ v
    return v


def commutator_extraction(model: CrossedProductModel, g1: int, g2: int, h1, h2):
    """``P_0(S(g1 h1) S(g2 h2) S(g1^-1 h1) S(g2^-1 h2))`` as an operator.

    Returns ``(operator, expected)`` where ``expected = q u_{[g1,g2]}``.
    """
    if model.rep != "trivial":
        raise RelationError("commutator extraction is stated for the trivial representation")
    if model.cutoff < 4:
        raise RelationError("commutator extraction needs cutoff >= 4")
    G = model.group
    if np.any(model.action.perm != model.action.perm[G.identity]):
        raise RelationError("commutator extraction needs a trivial action on A")
    h1, h2 = (np.eye(model.kdim)[h] if np.isscalar(h) else np.asarray(h, float) for h in (h1, h2))
    if abs(np.dot(h1, h2)) > 1e-12 or abs(np.dot(h1, h1) - 1) > 1e-12 or abs(np.dot(h2, h2) - 1) > 1e-12:
        raise RelationError("h1, h2 must be orthonormal")
    gs = [g1, g2, int(G.inv[g1]), int(G.inv[g2])]
    vec = word_vector(model, gs, [h1, h2, h1, h2])
    op = model.crossed_operator(model.degree_zero_coefficients(vec))
    expected = model.q * model.u(G.commutator(g1, g2))
    return op, expected


def c0_element(model: CrossedProductModel, gs, ks=None) -> sp.csr_matrix:
    """``S(g1 k1)...S(gm km)`` with ``g1...gm = e``; such words commute with ``A``."""
    G = model.group
    if G.prod(*gs) != G.identity:
        raise RelationError("group labels must multiply to the identity")
    return word_operator(model, gs, ks)


def centrality_defect(model: CrossedProductModel, x) -> float:
    worst = 0.0
    for pt in range(model.nx):
        a = np.zeros(model.nx)
        a[pt] = 1.0
        A = model.multiplier(a)
        diff = x @ A - A @ x
        worst = max(worst, float(abs(diff).max()) if diff.nnz else 0.0)
    return worst


def covariance_defect(model: CrossedProductModel, g: int, k=0) -> float:
    """``max over indicator a of |S(g k) a - sigma_g(a) S(g k)|``."""
    S = model.generator(g, k)
    worst = 0.0
    for pt in range(model.nx):
        a = np.zeros(model.nx)
        a[pt] = 1.0
        diff = S @ model.multiplier(a) - model.multiplier(model.action.act(g, a)) @ S
        worst = max(worst, float(abs(diff).max()) if diff.nnz else 0.0)
    return worst


# -- q = 0 noncrossing rule -------------------------------------------------

def _erasures(items: tuple) -> set:
    """All noncrossing pairings of ``items`` reached by repeatedly erasing neighbouring pairs."""
    if not items:
        return {frozenset()}
    out = set()
    for j in range(len(items) - 1):
        rest = items[:j] + items[j + 2 :]
        pair = (items[j], items[j + 1])
        for tail in _erasures(rest):
            out.add(tail | {pair})
    return out


_erasure_cache: dict[int, list] = {}


def noncrossing_by_erasure(m: int) -> list[Partition]:
    if m not in _erasure_cache:
        found = _erasures(tuple(range(1, m + 1))) if m % 2 == 0 else set()
        _erasure_cache[m] = sorted((Partition(m, tuple(p)) for p in found), key=lambda s: s.blocks)
    return _erasure_cache[m]


def free_moment_nc(model: CrossedProductModel, gs, ks=None, coeffs=None) -> np.ndarray:
    """``E_A(S_0(g1) a1 ... S_0(gm) am)`` at ``q = 0`` with the trivial representation.

    Sums over noncrossing pairings produced by neighbouring-pair erasure; an
    erased pair ``S_0(g k) ... S_0(g' k')`` contributes ``(k, k')`` when
    ``g' = g^-1`` and zero otherwise.  The A-part is
    ``sigma_{g1}(a1) sigma_{g1 g2}(a2) ...`` when ``g1...gm = e``.
    """
    if model.q != 0.0:
        raise RelationError("the noncrossing rule holds only at q = 0")
    if model.rep != "trivial":
        raise RelationError("the noncrossing rule is stated for the trivial representation")
    G, m = model.group, len(gs)
    ks = [0] * m if ks is None else ks
    kvecs = [np.eye(model.kdim)[k] if np.isscalar(k) else np.asarray(k, float) for k in ks]
    coeffs = [np.ones(model.nx)] * m if coeffs is None else [np.asarray(a) for a in coeffs]
    zero = np.zeros(model.nx)
    if m % 2 or G.prod(*gs) != G.identity:
        return zero
    total = 0.0
    for sigma in noncrossing_by_erasure(m):
        phi = 1.0
        for l, r in sigma.blocks:
            if gs[r - 1] != G.inv[gs[l - 1]]:
                phi = 0.0
                break
            phi *= float(np.dot(kvecs[l - 1], kvecs[r - 1]))
        total += phi
    if total == 0.0:
        return zero
    a_part = np.ones(model.nx)
    prefix = G.identity
    for g, a in zip(gs, coeffs):
        prefix = G.prod(prefix, g)
        a_part = a_part * model.action.act(prefix, a)
    return total * a_part

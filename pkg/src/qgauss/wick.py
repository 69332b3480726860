"""Wick words, the Wick product expansion, and finite replica surrogates.

``W(xi)`` is the element of the field algebra with ``W(xi) Omega = xi``.  It
is built per basis word by

    W(e_i (x) w) = s(e_i) W(w) - W(l*(e_i) w),

which follows from ``s(e_i) W(w) Omega = e_i (x) w + l*(e_i) w``.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from itertools import combinations, permutations, product

import numpy as np
import scipy.sparse as sp

from .partitions import Partition, classify_indices, crossings, enumerate_p12
from .qfock import FockOperator, FockSpace, ResourceGuardError, dict_field, dict_norm_sq, field, number_semigroup


class MarginError(ValueError):
    """The cutoff leaves too little room for the requested identity to be exact."""


@dataclass
class WickWord:
    xi: np.ndarray
    operator: FockOperator


def _wick_cache(space: FockSpace) -> dict:
    cache = getattr(space, "_wick_cache", None)
    if cache is None:
        cache = {(): space.identity().mat}
        space._wick_cache = cache
    return cache


def wick_basis(space: FockSpace, word: tuple) -> sp.csr_matrix:
    """Sparse matrix of ``W(e_{w1} (x) ... (x) e_{wn})``."""
    cache = _wick_cache(space)
    word = tuple(int(w) for w in word)
    if word in cache:
        return cache[word]
    head, tail = word[0], word[1:]
    s_head = space.creation_letter(head) + space.annihilation_letter(head)
    mat = s_head @ wick_basis(space, tail)
    for k, letter in enumerate(tail):
        if letter == head:
            mat = mat - space.q**k * wick_basis(space, tail[:k] + tail[k + 1 :])
    mat = mat.tocsr()
    cache[word] = mat
    return mat


def wick_word(space: FockSpace, xi, margin: int = 0) -> WickWord:
    xi = np.asarray(xi)
    if xi.shape != (space.size,):
        raise ValueError("xi must be a vector in tensor-word coordinates")
    nz = np.nonzero(xi)[0]
    top = max((len(space.word(i)) for i in nz), default=0)
    if top + margin > space.cutoff:
        raise MarginError(f"degree {top} plus margin {margin} exceeds cutoff {space.cutoff}")
    mat = sp.csr_matrix((space.size, space.size), dtype=np.result_type(xi.dtype, float))
    for i in nz:
        mat = mat + xi[i] * wick_basis(space, space.word(i))
    return WickWord(xi, FockOperator(space, mat))


def bilinear(h, k):
    return np.dot(np.asarray(h), np.asarray(k))


def f_sigma(sigma: Partition, hs, q: float):
    """``q^cr(sigma) * prod over pairs (h_l, h_r)``; equals 1 for all-singleton sigma."""
    if sigma.m != len(hs):
        raise ValueError("partition size does not match number of vectors")
    val = q ** crossings(sigma)
    for l, r in sigma.pairs:
        val = val * bilinear(hs[l - 1], hs[r - 1])
    return val


def cross_marker_pairings(m: int, mp: int):
    """P_{1,2}(m + m') partitions whose pairs all join ``1..m`` to ``m+1..m+m'``."""
    for k in range(min(m, mp) + 1):
        for left in combinations(range(1, m + 1), k):
            for right in permutations(range(m + 1, m + mp + 1), k):
                pairs = list(zip(left, right))
                used = set(left) | set(right)
                singles = [(i,) for i in range(1, m + mp + 1) if i not in used]
                yield Partition(m + mp, tuple(pairs) + tuple(singles))


def _word_terms(space: FockSpace, vec, degree: int):
    s = space.degree_slice(degree)
    block = np.asarray(vec)[s]
    other = np.delete(np.asarray(vec), np.arange(s.start, s.stop))
    if np.any(other != 0):
        raise ValueError(f"vector is not homogeneous of degree {degree}")
    letters = space.letters(degree)
    return [(block[i], tuple(letters[i])) for i in np.nonzero(block)[0]]


def vector_degree(space: FockSpace, vec) -> int:
    nz = np.nonzero(np.asarray(vec))[0]
    degs = {len(space.word(i)) for i in nz}
    if len(degs) > 1:
        raise ValueError("vector is not homogeneous")
    return degs.pop() if degs else 0


def wick_product_expansion(space: FockSpace, xi, eta, margin: int = 0):
    """Coefficients of ``W(xi) W(eta)`` in Wick words.

    Returns a list of ``(coefficient, word)`` with ``word`` a letter tuple:
    ``W(xi) W(eta) = sum coefficient * W(word)``.
    """
    m, mp = vector_degree(space, xi), vector_degree(space, eta)
    if m + mp + margin > space.cutoff:
        raise MarginError(f"degrees {m}+{mp} plus margin {margin} exceed cutoff {space.cutoff}")
    pairings = [(s, s.pairs, crossings(s)) for s in cross_marker_pairings(m, mp)]
    out: dict = {}
    for a, u in _word_terms(space, xi, m):
        for b, v in _word_terms(space, eta, mp):
            joined = u + v
            for sigma, pairs, cr in pairings:
                if any(joined[l - 1] != joined[r - 1] for l, r in pairs):
                    continue
                paired = {i for p in pairs for i in p}
                word = tuple(joined[i - 1] for i in range(1, m + mp + 1) if i not in paired)
                out[word] = out.get(word, 0.0) + a * b * space.q**cr
    return [(c, w) for w, c in sorted(out.items()) if c != 0]


def reassemble(space: FockSpace, terms) -> FockOperator:
    mat = sp.csr_matrix((space.size, space.size), dtype=complex if any(np.iscomplex(c) for c, _ in terms) else float)
    for c, w in terms:
        mat = mat + c * wick_basis(space, w)
    return FockOperator(space, mat)


def triple_product_expansion(space: FockSpace, xi, eta, zeta):
    """``W(xi) W(eta) W(zeta)`` by expanding the left pair first, then each term against ``zeta``."""
    out: dict = {}
    for c, w in wick_product_expansion(space, xi, eta):
        vec = space.basis_vector(w) if w else space.vacuum()
        for c2, w2 in wick_product_expansion(space, vec, zeta):
            out[w2] = out.get(w2, 0.0) + c * c2
    return [(c, w) for w, c in sorted(out.items()) if c != 0]


def field_product_decomposition(space: FockSpace, hs) -> FockOperator:
    """``sum over sigma in P_{1,2}(m) of f_sigma(h) W(h_singletons)``.

    Equals ``s(h1)...s(hm)`` on the full field algebra.
    """
    m = len(hs)
    mat = sp.csr_matrix((space.size, space.size), dtype=np.result_type(*hs, float))
    for sigma in enumerate_p12(m):
        coef = f_sigma(sigma, hs, space.q)
        if coef == 0:
            continue
        singles = [hs[i - 1] for i in sigma.singletons]
        xi = space.tensor(*singles)
        mat = mat + coef * wick_word(space, xi).operator.mat
    return FockOperator(space, mat)


# -- replicas -------------------------------------------------------------

def replica_vector(h, j: int, n: int) -> np.ndarray:
    e = np.zeros(n)
    e[j] = 1.0
    return np.kron(np.asarray(h), e)


def replica_space(space: FockSpace, n: int, max_size: int | None = 200_000) -> FockSpace:
    return FockSpace(space.dim * n, space.cutoff, space.q, max_size=max_size)


def un_embed(space: FockSpace, hs, n: int, max_size: int | None = 200_000) -> FockOperator:
    """``u_n(s(h1)...s(hm))`` with ``u_n(s(h)) = n^{-1/2} sum_j s(h (x) e_j)``."""
    big = replica_space(space, n, max_size=max_size)
    out = big.identity()
    for h in hs:
        avg = sum((field(big, replica_vector(h, j, n)) for j in range(n)), start=0 * big.identity())
        out = out @ (avg * (1.0 / np.sqrt(n)))
    return out


def _sigma_tuples(sigma: Partition, n: int):
    nb = len(sigma.blocks)
    for colors in permutations(range(n), nb):
        js = [0] * sigma.m
        for color, block in zip(colors, sigma.blocks):
            for i in block:
                js[i - 1] = color
        yield tuple(js)


@dataclass
class SigmaWord:
    sigma: Partition
    hs: list
    n: int
    operator: FockOperator | None = None
    terms: list = dc_field(default_factory=list)


def _letter_terms(hs, js, n):
    """Expand ``s(h1 (x) e_j1)...s(hm (x) e_jm)`` into (coefficient, letter tuple) terms."""
    supports = [[(i, c) for i, c in enumerate(np.asarray(h)) if c != 0] for h in hs]
    for choice in product(*supports):
        coef = np.prod([c for _, c in choice])
        yield coef, tuple(i * n + j for (i, _), j in zip(choice, js))


def x_sigma_n(space: FockSpace, sigma: Partition, hs, n: int, build_operator: bool = True, max_size: int | None = 200_000) -> SigmaWord:
    """``n^{-m/2} sum_{<j> = sigma} s(h1 (x) e_j1) ... s(hm (x) e_jm)``."""
    m = len(hs)
    if sigma.m != m:
        raise ValueError("partition size does not match number of vectors")
    scale = n ** (-m / 2)
    terms = []
    for js in _sigma_tuples(sigma, n):
        for coef, letters in _letter_terms(hs, js, n):
            terms.append((scale * coef, letters))
    op = None
    if build_operator:
        big = replica_space(space, n, max_size=max_size)
        mat = sp.csr_matrix((big.size, big.size))
        cache: dict = {}
        for coef, letters in terms:
            prod_mat = big.identity().mat
            for L in letters:
                if L not in cache:
                    cache[L] = big.creation_letter(L) + big.annihilation_letter(L)
                prod_mat = prod_mat @ cache[L]
            mat = mat + coef * prod_mat
        op = FockOperator(big, mat)
    return SigmaWord(sigma, list(hs), n, op, terms)


def _apply_terms(terms, vec: dict, q: float, adjoint: bool = False) -> dict:
    out: dict = {}
    for coef, letters in terms:
        word_letters = letters[::-1] if adjoint else letters
        c = np.conj(coef) if adjoint else coef
        cur = vec
        for L in reversed(word_letters):
            cur = dict_field(cur, L, q)
        for w, v in cur.items():
            out[w] = out.get(w, 0.0) + c * v
    return out


def l4_norm(word: SigmaWord, q: float) -> float:
    """``||x||_4 = tau((x* x)^2)^{1/4} = ||x* x Omega||^{1/2}``, on word dictionaries."""
    x_omega = _apply_terms(word.terms, {(): 1.0}, q)
    xsx = _apply_terms(word.terms, x_omega, q, adjoint=True)
    return dict_norm_sq(xsx, q) ** 0.25


def l2_norm(word: SigmaWord, q: float) -> float:
    return dict_norm_sq(_apply_terms(word.terms, {(): 1.0}, q), q) ** 0.5


def decay_probe(sigma: Partition, hs, q: float, ns=(2, 4, 8, 16)):
    """Least-squares slope of ``log ||x_sigma^n||_4`` against ``log n``.

    Returns ``(slope, norms)``.
    """
    if sigma.max_block() < 3:
        raise ValueError("decay_probe needs a partition with a block of size >= 3")
    dummy = FockSpace(len(hs[0]), 0, q)
    norms = [l4_norm(x_sigma_n(dummy, sigma, hs, n, build_operator=False), q) for n in ns]
    slope = float(np.polyfit(np.log(ns), np.log(norms), 1)[0])
    return slope, norms


def eigenvector_check(space: FockSpace, sigma: Partition, hs, t: float, tol: float = 1e-12) -> bool:
    """``T_t`` scales the vacuum vector of ``f_sigma W(h_singletons)`` by ``exp(-t * #singletons)``."""
    if not sigma.is_p12():
        raise ValueError("sigma must consist of singletons and pairs")
    singles = [hs[i - 1] for i in sigma.singletons]
    coef = f_sigma(sigma, hs, space.q)
    w = wick_word(space, space.tensor(*singles)).operator
    vec = coef * (w @ space.vacuum())
    scaled = number_semigroup(space, t) @ vec
    return bool(np.max(np.abs(scaled - np.exp(-t * len(singles)) * vec), initial=0.0) <= tol)


def kernel_partition(js) -> Partition:
    return classify_indices(list(js))

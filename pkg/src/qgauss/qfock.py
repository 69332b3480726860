"""Truncated q-Fock space over a finite-dimensional real Hilbert space.

Vectors are stored in raw tensor-word coordinates: the degree-``n`` block of
a vector is a flattened ``(d,)*n`` array indexed row-major by the letters of
the word.  The q-inner product lives in the per-degree Gram matrices and is
applied either densely (small blocks) or through the one-step recursion

    G_n = sum_k q^(k-1) * move_axis_0_to_k( (I_d (x) G_{n-1}) x )

which is the matrix form of the annihilation formula.  Operators are scipy
sparse matrices over the full truncated basis; creation maps top-degree
words to zero.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import permutations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .partitions import crossings, enumerate_pair_partitions, inversions

DENSE_LIMIT = 20_000
ORTHO_TOL = 1e-10


class ResourceGuardError(RuntimeError):
    """Raised before allocating something larger than the configured guard."""


def _check_q(q, strict=True):
    if not -1.0 < q <= 1.0:
        raise ValueError(f"q={q} outside (-1, 1]")
    if strict and q == 1.0:
        raise ValueError("q=1 has a degenerate Gram form; use |q| < 1 here")


class FockSpace:
    """Basis bookkeeping plus the q-Gram form for ``F_q^{<=N}(R^d)``."""

    def __init__(self, dim: int, cutoff: int, q: float, max_size: int | None = None):
        if dim < 1 or cutoff < 0:
            raise ValueError("need dim >= 1 and cutoff >= 0")
        _check_q(q, strict=False)
        self.dim = int(dim)
        self.cutoff = int(cutoff)
        self.q = float(q)
        self.sizes = [self.dim**n for n in range(self.cutoff + 1)]
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)]).astype(np.int64)
        self.size = int(self.offsets[-1])
        if max_size is not None and self.size > max_size:
            raise ResourceGuardError(
                f"Fock basis of size {self.size} (d={dim}, N={cutoff}) exceeds guard {max_size}"
            )
        self._create_cache: dict[int, sp.csr_matrix] = {}
        self._annihilate_cache: dict[int, sp.csr_matrix] = {}
        self._gram_cache: dict[int, np.ndarray] = {}
        self._chol_cache: dict[int, tuple] = {}

    def __repr__(self):
        return f"FockSpace(dim={self.dim}, cutoff={self.cutoff}, q={self.q})"

    # -- basis ------------------------------------------------------------
    def degree_slice(self, n: int) -> slice:
        return slice(int(self.offsets[n]), int(self.offsets[n + 1]))

    def index(self, word) -> int:
        n = len(word)
        if n > self.cutoff:
            raise IndexError(f"word of degree {n} above cutoff {self.cutoff}")
        local = 0
        for letter in word:
            if not 0 <= letter < self.dim:
                raise IndexError(f"letter {letter} outside 0..{self.dim - 1}")
            local = local * self.dim + int(letter)
        return int(self.offsets[n]) + local

    def word(self, index: int) -> tuple[int, ...]:
        n = int(np.searchsorted(self.offsets, index, side="right") - 1)
        local = index - int(self.offsets[n])
        letters = []
        for _ in range(n):
            local, r = divmod(local, self.dim)
            letters.append(r)
        return tuple(reversed(letters))

    def letters(self, n: int) -> np.ndarray:
        """``(d**n, n)`` array of the degree-n words in basis order."""
        if n == 0:
            return np.zeros((1, 0), dtype=np.int64)
        grids = np.indices((self.dim,) * n).reshape(n, -1).T
        return grids.astype(np.int64)

    def degrees(self) -> np.ndarray:
        return np.repeat(np.arange(self.cutoff + 1), self.sizes)

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.size)
        v[0] = 1.0
        return v

    def basis_vector(self, word) -> np.ndarray:
        v = np.zeros(self.size)
        v[self.index(word)] = 1.0
        return v

    def tensor(self, *hs) -> np.ndarray:
        """Embed ``h1 (x) ... (x) hn`` (ambient vectors) as a Fock vector."""
        n = len(hs)
        out = np.zeros(self.size, dtype=np.result_type(*hs) if hs else float)
        if n == 0:
            out[0] = 1.0
            return out
        block = hs[0]
        for h in hs[1:]:
            block = np.kron(block, h)
        out[self.degree_slice(n)] = block
        return out

    def _word_index_array(self, letters: np.ndarray) -> np.ndarray:
        n = letters.shape[1]
        if n == 0:
            return np.zeros(letters.shape[0], dtype=np.int64)
        weights = self.dim ** np.arange(n - 1, -1, -1, dtype=np.int64)
        return letters @ weights + self.offsets[n]

    # -- letter operators -------------------------------------------------
    def creation_letter(self, i: int) -> sp.csr_matrix:
        if i not in self._create_cache:
            rows, cols = [], []
            for n in range(self.cutoff):
                src = np.arange(self.offsets[n], self.offsets[n + 1])
                local = src - self.offsets[n]
                rows.append(self.offsets[n + 1] + i * self.sizes[n] + local)
                cols.append(src)
            rows = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
            cols = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
            mat = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.size, self.size))
            self._create_cache[i] = mat
        return self._create_cache[i]

    def annihilation_letter(self, i: int) -> sp.csr_matrix:
        if i not in self._annihilate_cache:
            rows, cols, vals = [], [], []
            for n in range(1, self.cutoff + 1):
                letters = self.letters(n)
                src = np.arange(self.offsets[n], self.offsets[n + 1])
                for k in range(n):
                    sel = letters[:, k] == i
                    if not sel.any():
                        continue
                    reduced = np.delete(letters[sel], k, axis=1)
                    rows.append(self._word_index_array(reduced))
                    cols.append(src[sel])
                    vals.append(np.full(int(sel.sum()), self.q**k))
            if rows:
                rows, cols, vals = map(np.concatenate, (rows, cols, vals))
            mat = sp.csr_matrix((vals, (rows, cols)), shape=(self.size, self.size))
            self._annihilate_cache[i] = mat
        return self._annihilate_cache[i]

    # -- q-Gram -----------------------------------------------------------
    def gram_apply(self, n: int, x: np.ndarray) -> np.ndarray:
        """``G_n @ x`` for a degree-n block ``x`` of shape ``(d**n,)`` or ``(d**n, B)``."""
        x = np.asarray(x)
        vec = x.ndim == 1
        if vec:
            x = x[:, None]
        out = self._gram_apply(n, x)
        return out[:, 0] if vec else out

    def _gram_apply(self, n, x):
        if n <= 1 or self.q == 0.0:
            return x.copy()
        d, batch = self.dim, x.shape[1]
        rest = d ** (n - 1)
        inner = x.reshape(d, rest, batch).transpose(1, 0, 2).reshape(rest, d * batch)
        y = self._gram_apply(n - 1, inner).reshape(rest, d, batch).transpose(1, 0, 2)
        y = y.reshape((d,) * n + (batch,))
        out = np.zeros_like(y)
        for k in range(n):
            out += self.q**k * np.moveaxis(y, 0, k)
        return out.reshape(d**n, batch)

    def gram(self, n: int) -> np.ndarray:
        if n not in self._gram_cache:
            size = self.dim**n
            if size > DENSE_LIMIT:
                raise ResourceGuardError(f"dense Gram block of size {size} exceeds {DENSE_LIMIT}")
            self._gram_cache[n] = self.gram_apply(n, np.eye(size))
        return self._gram_cache[n]

    def cholesky(self, n: int):
        _check_q(self.q)
        if n not in self._chol_cache:
            self._chol_cache[n] = sla.cho_factor(self.gram(n), lower=True)
        return self._chol_cache[n]

    def gram_full_apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        out = np.empty_like(v, dtype=np.result_type(v, float))
        for n in range(self.cutoff + 1):
            s = self.degree_slice(n)
            out[s] = self.gram_apply(n, v[s])
        return out

    def inner(self, u: np.ndarray, v: np.ndarray):
        """``<u, v>_q``, conjugate-linear in ``u``; distinct degrees are orthogonal."""
        return np.vdot(u, self.gram_full_apply(v))

    def norm(self, v: np.ndarray) -> float:
        return float(np.sqrt(max(np.real(self.inner(v, v)), 0.0)))

    def orthonormal_factor(self) -> np.ndarray:
        """Dense upper factor ``C`` with ``G = C^T C``, so ``C v`` are orthonormal coordinates."""
        if self.size > DENSE_LIMIT:
            raise ResourceGuardError(f"basis size {self.size} exceeds dense limit {DENSE_LIMIT}")
        blocks = []
        for n in range(self.cutoff + 1):
            c, _ = self.cholesky(n)
            blocks.append(np.triu(c.T))
        return sla.block_diag(*blocks)

    def operator(self, mat) -> "FockOperator":
        return FockOperator(self, mat)

    def identity(self) -> "FockOperator":
        return FockOperator(self, sp.identity(self.size, format="csr"))


class FockOperator:
    """A linear operator on a truncated Fock space, stored as a sparse matrix."""

    __array_priority__ = 100

    def __init__(self, space: FockSpace, mat):
        self.space = space
        self.mat = sp.csr_matrix(mat)
        if self.mat.shape != (space.size, space.size):
            raise ValueError(f"matrix shape {self.mat.shape} does not match basis size {space.size}")

    def __repr__(self):
        return f"FockOperator({self.space}, nnz={self.mat.nnz})"

    def _wrap(self, mat):
        return FockOperator(self.space, mat)

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            return self._wrap(self.mat @ other.mat)
        return self.mat @ other

    def __add__(self, other):
        if isinstance(other, FockOperator):
            return self._wrap(self.mat + other.mat)
        if np.isscalar(other):
            return self._wrap(self.mat + other * sp.identity(self.space.size))
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1) * other

    def __rsub__(self, other):
        return (-1) * self + other

    def __mul__(self, c):
        if np.isscalar(c):
            return self._wrap(self.mat * c)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return self._wrap(-self.mat)

    def __pow__(self, k: int):
        out = self.space.identity()
        for _ in range(k):
            out = out @ self
        return out

    def dense(self) -> np.ndarray:
        if self.space.size > DENSE_LIMIT:
            raise ResourceGuardError(f"dense materialization of size {self.space.size} refused")
        return self.mat.toarray()

    def block(self, n_out: int, n_in: int) -> np.ndarray:
        s = self.space
        return self.mat[s.degree_slice(n_out), s.degree_slice(n_in)].toarray()

    def adjoint(self) -> "FockOperator":
        """Adjoint for the q-inner product, ``G^{-1} X^H G`` degree by degree."""
        s = self.space
        xh = self.mat.conj().T.tocsr()
        out = sp.lil_matrix((s.size, s.size), dtype=np.result_type(self.mat.dtype, float))
        for n_in in range(s.cutoff + 1):
            for n_out in range(s.cutoff + 1):
                blk = xh[s.degree_slice(n_in), s.degree_slice(n_out)]
                if blk.nnz == 0:
                    continue
                dense = s.gram_apply(n_out, blk.toarray().T).T
                dense = sla.cho_solve(s.cholesky(n_in), dense)
                out[s.degree_slice(n_in), s.degree_slice(n_out)] = dense
        mat = out.tocsr()
        mat.eliminate_zeros()
        return self._wrap(mat)

    def adjoint_defect(self, other: "FockOperator") -> float:
        """``max |<X u, v>_q - <u, Y v>_q|`` over basis pairs; zero iff ``Y = X*``."""
        s = self.space
        worst = 0.0
        for n in range(s.cutoff + 1):
            for m in range(s.cutoff + 1):
                xb = self.mat[s.degree_slice(m), s.degree_slice(n)]
                yb = other.mat[s.degree_slice(n), s.degree_slice(m)]
                if xb.nnz == 0 and yb.nnz == 0:
                    continue
                lhs = s.gram_apply(m, xb.toarray()).conj().T  # rows u (deg n), cols v (deg m)
                rhs = s.gram_apply(n, yb.toarray())
                worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        return worst

    def is_self_adjoint(self, tol=1e-10) -> bool:
        return self.adjoint_defect(self) <= tol


def _combine(space: FockSpace, coeffs, getter) -> sp.csr_matrix:
    coeffs = np.asarray(coeffs)
    if coeffs.shape != (space.dim,):
        raise ValueError(f"vector of length {space.dim} expected, got shape {coeffs.shape}")
    dtype = np.result_type(coeffs.dtype, float)
    mat = sp.csr_matrix((space.size, space.size), dtype=dtype)
    for i, c in enumerate(coeffs):
        if c != 0:
            mat = mat + c * getter(i)
    return mat


def creation(space: FockSpace, h) -> FockOperator:
    """``l(h)``: prepend ``h``; complex-linear in ``h``."""
    if space.cutoff < 1:
        raise ValueError("creation needs cutoff >= 1")
    return FockOperator(space, _combine(space, h, space.creation_letter))


def annihilation(space: FockSpace, h) -> FockOperator:
    """``l(h)* (h1..hn) = sum_j q^(j-1) <h, h_j> (h1..^hj..hn)``; conjugate-linear in ``h``."""
    return FockOperator(space, _combine(space, np.conj(h), space.annihilation_letter))


def field(space: FockSpace, h) -> FockOperator:
    """``s(h) = l(h) + l(h)*`` extended complex-linearly: ``s(h1 + i h2) = s(h1) + i s(h2)``."""
    h = np.asarray(h)
    lets = lambda i: space.creation_letter(i) + space.annihilation_letter(i)
    return FockOperator(space, _combine(space, h, lets))


def gram(n: int, d: int, q: float) -> np.ndarray:
    return FockSpace(d, n, q).gram(n)


def q_inner(u, v, space: FockSpace):
    return space.inner(u, v)


def vacuum_trace(x: FockOperator):
    """``tau(x) = <Omega, x Omega>_q``."""
    val = x.mat[0, 0]
    return val.real if np.isrealobj(val) or val.imag == 0 else val


def moment_combinatorial(hs, q: float):
    """``sum over pair partitions of q^cr * prod (h_l, h_r)`` with the bilinear pairing."""
    _check_q(q, strict=False)
    m = len(hs)
    if m % 2:
        return 0.0
    hs = [np.asarray(h) for h in hs]
    total = 0.0
    for sigma in enumerate_pair_partitions(m):
        term = q ** crossings(sigma)
        for l, r in sigma.blocks:
            term = term * np.dot(hs[l - 1], hs[r - 1])
            if term == 0:
                break
        total = total + term
    return total


def field_moment(space: FockSpace, hs):
    """``tau(s(h1)...s(hm))`` by applying fields to the vacuum right to left."""
    v = space.vacuum().astype(np.result_type(*hs, float))
    for h in reversed(hs):
        v = field(space, h) @ v
    return v[0]


def _tensor_power(o, n: int) -> sp.csr_matrix:
    out = sp.csr_matrix(np.ones((1, 1)))
    osp = sp.csr_matrix(o)
    for _ in range(n):
        out = sp.kron(out, osp, format="csr")
    out.eliminate_zeros()
    return out


def _direct_sum_powers(space: FockSpace, o) -> FockOperator:
    blocks = [_tensor_power(o, n) for n in range(space.cutoff + 1)]
    return FockOperator(space, sp.block_diag(blocks, format="csr"))


def second_quantize_orthogonal(space: FockSpace, o) -> FockOperator:
    """``Gamma_q(o) = (+)_n o^(x)n`` for orthogonal (or unitary) ``o``."""
    o = np.asarray(o)
    if o.shape != (space.dim, space.dim):
        raise ValueError("matrix does not act on the ambient space")
    if np.max(np.abs(o @ o.conj().T - np.eye(space.dim))) > ORTHO_TOL:
        raise ValueError("second_quantize_orthogonal needs an orthogonal matrix")
    return _direct_sum_powers(space, o)


def second_quantize_contraction(space: FockSpace, v) -> FockOperator:
    """``Gamma_q(v)`` for a contraction, acting as ``v^(x)n`` on degree ``n``."""
    v = np.asarray(v)
    if v.shape != (space.dim, space.dim):
        raise ValueError("matrix does not act on the ambient space")
    if np.linalg.norm(v, 2) > 1 + ORTHO_TOL:
        raise ValueError("second_quantize_contraction needs ||v|| <= 1")
    return _direct_sum_powers(space, v)


def _psd_sqrt(a):
    w, u = np.linalg.eigh(a)
    return (u * np.sqrt(np.clip(w, 0, None))) @ u.conj().T


def dilation(v) -> np.ndarray:
    """Orthogonal ``[[v, sqrt(1-vv*)], [-sqrt(1-v*v), v*]]`` on the doubled space."""
    v = np.asarray(v)
    d = v.shape[0]
    eye = np.eye(d)
    vs = v.conj().T
    return np.block([[v, _psd_sqrt(eye - v @ vs)], [-_psd_sqrt(eye - vs @ v), vs]])


def embedding_indices(small: FockSpace, big: FockSpace, letter_map=None) -> np.ndarray:
    """Indices in ``big`` of the words of ``small`` under an injective letter map.

    The default map is the identity, i.e. ``small``'s letters are the first
    ``small.dim`` letters of ``big``.
    """
    if big.cutoff < small.cutoff or big.dim < small.dim:
        raise ValueError("big space must contain small space")
    lm = np.arange(small.dim) if letter_map is None else np.asarray(letter_map, dtype=np.int64)
    idx = [big._word_index_array(lm[small.letters(n)]) for n in range(small.cutoff + 1)]
    return np.concatenate(idx)


def compress(big_op: FockOperator, small: FockSpace, letter_map=None) -> FockOperator:
    """``E o X o iota``: restrict ``X`` to the words spelled with the embedded letters.

    Words containing any other letter are q-orthogonal to every word in the
    embedded letters, so the orthogonal projection is coordinate restriction.
    """
    idx = embedding_indices(small, big_op.space, letter_map)
    return FockOperator(small, big_op.mat[idx][:, idx])


def contraction_by_dilation(space: FockSpace, v) -> FockOperator:
    big = FockSpace(2 * space.dim, space.cutoff, space.q)
    return compress(second_quantize_orthogonal(big, dilation(v)), space)


def conditional_expectation(space: FockSpace, p) -> FockOperator:
    """``E = Gamma_q(P)`` for an orthogonal projection ``P`` of the ambient space."""
    p = np.asarray(p)
    if np.max(np.abs(p @ p - p)) > ORTHO_TOL or np.max(np.abs(p - p.conj().T)) > ORTHO_TOL:
        raise ValueError("conditional_expectation needs a symmetric idempotent")
    return _direct_sum_powers(space, p)


def number_semigroup(space: FockSpace, t: float) -> FockOperator:
    """``T_t = exp(-t N)``."""
    return FockOperator(space, sp.diags(np.exp(-t * space.degrees())).tocsr())


def number_projection(space: FockSpace, n: int) -> FockOperator:
    return FockOperator(space, sp.diags((space.degrees() == n).astype(float)).tocsr())


def rotation(theta: float, d: int) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    eye = np.eye(d)
    return np.block([[c * eye, s * eye], [-s * eye, c * eye]])


def rotation_dilation(space: FockSpace, theta: float) -> FockOperator:
    """``alpha_theta = Gamma_q(o_theta (x) id)`` on a doubled space ``H (+) H``."""
    if space.dim % 2:
        raise ValueError("rotation_dilation needs a doubled ambient space")
    return second_quantize_orthogonal(space, rotation(theta, space.dim // 2))


def flip(space: FockSpace) -> FockOperator:
    """``beta``: negate the second summand of ``H (+) H``."""
    if space.dim % 2:
        raise ValueError("flip needs a doubled ambient space")
    d = space.dim // 2
    return second_quantize_orthogonal(space, np.diag([1.0] * d + [-1.0] * d))


def reversal(space: FockSpace) -> sp.csr_matrix:
    """Word reversal ``h1..hn -> hn..h1`` (the real part of the modular conjugation)."""
    rows = []
    for n in range(space.cutoff + 1):
        rows.append(space._word_index_array(space.letters(n)[:, ::-1]))
    cols = np.concatenate(rows)
    return sp.csr_matrix((np.ones(space.size), (np.arange(space.size), cols)), shape=(space.size,) * 2)


# -- word-level (dictionary) vectors, for replica spaces too large for matrices --

def gram_bruteforce(n: int, d: int, q: float) -> np.ndarray:
    """``G_n`` by summing ``q^inv(sigma)`` over all of ``S_n``; an independent oracle."""
    space = FockSpace(d, n, q)
    words = [tuple(w) for w in space.letters(n)]
    out = np.zeros((len(words), len(words)))
    perms = [(p, q ** inversions([i + 1 for i in p])) for p in permutations(range(n))]
    for a, u in enumerate(words):
        for b, v in enumerate(words):
            out[a, b] = sum(w for p, w in perms if all(u[p[i]] == v[i] for i in range(n)))
    return out


@lru_cache(maxsize=None)
def word_q_inner(u: tuple, v: tuple, q: float) -> float:
    """q-inner product of two basis words with orthonormal letters."""
    if len(u) != len(v):
        return 0.0
    if not u:
        return 1.0
    if sorted(u) != sorted(v):
        return 0.0
    first, rest = v[0], v[1:]
    total = 0.0
    for k, letter in enumerate(u):
        if letter == first:
            total += q**k * word_q_inner(u[:k] + u[k + 1 :], rest, q)
    return total


def dict_field(vec: dict, letter, q: float) -> dict:
    """Apply ``s(e_letter)`` to a word-dictionary vector."""
    out: dict = {}
    for word, c in vec.items():
        key = (letter,) + word
        out[key] = out.get(key, 0.0) + c
        for k, w in enumerate(word):
            if w == letter:
                key = word[:k] + word[k + 1 :]
                out[key] = out.get(key, 0.0) + c * q**k
    return out


def dict_norm_sq(vec: dict, q: float) -> float:
    groups: dict = {}
    for word, c in vec.items():
        if c != 0:
            groups.setdefault(tuple(sorted(word)), []).append((word, c))
    total = 0.0
    for items in groups.values():
        for u, a in items:
            for v, b in items:
                total += np.conj(a) * b * word_q_inner(u, v, q)
    return float(np.real(total))


__all__ = [
    "FockSpace",
    "FockOperator",
    "ResourceGuardError",
    "creation",
    "annihilation",
    "field",
    "gram",
    "q_inner",
    "vacuum_trace",
    "moment_combinatorial",
    "field_moment",
    "second_quantize_orthogonal",
    "second_quantize_contraction",
    "contraction_by_dilation",
    "conditional_expectation",
    "number_semigroup",
    "number_projection",
    "rotation_dilation",
    "flip",
    "compress",
    "dilation",
    "reversal",
    "gram_bruteforce",
    "word_q_inner",
]

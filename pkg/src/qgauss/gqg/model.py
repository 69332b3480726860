"""Finite matrix model of the generalized q-Gaussian crossed product.

Hilbert space: ``l2(X) (x) F_q^{<=N}(H_R (x) R^d) (x) l2(G)`` with ``X`` a finite
G-set (``A = functions on X`` with normalized counting trace) and ``H_R`` the
real form of ``l2(G)`` made of functions with ``f(g^-1) = conj f(g)``.  In that
real structure ``delta_g = R_g + i I_g`` and ``s(delta_g)* = s(delta_{g^-1})``.

Operators (scipy sparse, Kronecker order A, Fock, G):

* ``a``   -> ``diag(a) (x) 1 (x) 1``
* ``u_g`` -> ``koopman(g) (x) Gamma_q(pi_g (x) 1) (x) lambda(g)``
* ``S_q(g (x) k) = (1 (x) s(delta_g (x) k) (x) 1) u_g``

The trace vector is ``1_A (x) Omega (x) delta_e`` and ``a W(xi) u_g`` maps it
to ``a (x) xi (x) delta_g``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from ..qfock import FockSpace, ResourceGuardError, embedding_indices, field, second_quantize_orthogonal
from .groups import FiniteGroup, GroupAction, commutator_subgroup

REPS = ("trivial", "conjugation")
DEFAULT_GUARD_BYTES = 1 << 30
BYTES_PER_COORD = 512  # sparse operators and a few work vectors per coordinate


def guard_bytes() -> int:
    return int(os.environ.get("QFOCK_GUARD_BYTES", DEFAULT_GUARD_BYTES))


def guard_coordinates() -> int:
    return guard_bytes() // BYTES_PER_COORD


def model_coordinates(npoints: int, order: int, kdim: int, cutoff: int) -> int:
    dprime = order * kdim
    return npoints * sum(dprime**n for n in range(cutoff + 1)) * order


def real_basis(G: FiniteGroup) -> np.ndarray:
    """Columns: orthonormal basis of the real form of ``l2(G)`` in delta coordinates.

    Involutions contribute ``delta_g``; each pair ``{g, g^-1}`` contributes
    ``(delta_g + delta_{g^-1})/sqrt2`` and ``(delta_g - delta_{g^-1})/(i sqrt2)``.
    """
    n = G.order
    B = np.zeros((n, n), dtype=complex)
    col = 0
    done = set()
    for g in range(n):
        if g in done:
            continue
        gi = int(G.inv[g])
        if gi == g:
            B[g, col] = 1.0
            col += 1
        else:
            B[g, col] = B[gi, col] = 1 / np.sqrt(2)
            B[g, col + 1] = -1j / np.sqrt(2)
            B[gi, col + 1] = 1j / np.sqrt(2)
            col += 2
        done |= {g, gi}
    return B


def _real_matrix(m, what):
    if np.max(np.abs(np.imag(m))) > 1e-12:
        raise ValueError(f"{what} is not real in the real basis")
    out = np.real(m).copy()
    out[np.abs(out) < 1e-14] = 0.0
    return out


@dataclass
class ModelSpec:
    action: GroupAction
    rep: str = "trivial"
    kdim: int = 2
    cutoff: int = 3
    q: float = 0.0


class CrossedProductModel:
    def __init__(self, action: GroupAction, rep: str = "trivial", kdim: int = 2, cutoff: int = 3, q: float = 0.0,
                 max_coords: int | None = None):
        if rep not in REPS:
            raise ValueError(f"rep must be one of {REPS}")
        self.action = action
        self.group = G = action.group
        self.rep = rep
        self.kdim = int(kdim)
        self.cutoff = int(cutoff)
        self.q = float(q)
        limit = guard_coordinates() if max_coords is None else max_coords
        coords = model_coordinates(action.npoints, G.order, kdim, cutoff)
        if coords > limit:
            raise ResourceGuardError(f"model needs {coords} coordinates, guard allows {limit}")
        self.fock = FockSpace(G.order * self.kdim, self.cutoff, self.q)
        self.nx, self.nf, self.ng = action.npoints, self.fock.size, G.order
        self.size = self.nx * self.nf * self.ng
        self.basis = real_basis(G)
        # coefficients of delta_g in the real basis
        self.delta_coeffs = self.basis.conj().T
        self._u_cache: dict[int, sp.csr_matrix] = {}
        self._pi_cache: dict[int, np.ndarray] = {}
        self._gen_cache: dict[tuple, sp.csr_matrix] = {}

    def __repr__(self):
        return (f"CrossedProductModel({self.group.name}, |X|={self.nx}, rep={self.rep}, "
                f"d={self.kdim}, N={self.cutoff}, q={self.q}, size={self.size})")

    # -- building blocks ----------------------------------------------------
    def pi(self, g: int) -> np.ndarray:
        """Real orthogonal matrix of ``pi_g`` on ``H_R`` (identity for the trivial rep)."""
        if g not in self._pi_cache:
            n = self.group.order
            if self.rep == "trivial":
                m = np.eye(n)
            else:
                P = np.zeros((n, n))
                for h in range(n):
                    P[self.group.conj(g, h), h] = 1.0
                m = _real_matrix(self.basis.conj().T @ P @ self.basis, "conjugation")
                # conjugation permutes the real basis up to sign
                snapped = np.round(m)
                if np.max(np.abs(m - snapped)) > 1e-12:
                    raise ValueError("conjugation is not a signed permutation of the real basis")
                m = snapped + 0.0
            self._pi_cache[g] = m
        return self._pi_cache[g]

    def ambient_rep(self, g: int) -> np.ndarray:
        return np.kron(self.pi(g), np.eye(self.kdim))

    def delta_vector(self, g: int, k) -> np.ndarray:
        """Ambient coordinates of ``delta_g (x) k``; ``k`` an index or a vector in ``R^d``."""
        kv = np.eye(self.kdim)[k] if np.isscalar(k) else np.asarray(k, dtype=float)
        return np.kron(self.delta_coeffs[:, g], kv)

    def lift_fock(self, op) -> sp.csr_matrix:
        mat = op.mat if hasattr(op, "mat") else op
        return sp.kron(sp.kron(sp.identity(self.nx), mat), sp.identity(self.ng), format="csr")

    def multiplier(self, a) -> sp.csr_matrix:
        a = np.asarray(a)
        if a.shape != (self.nx,):
            raise ValueError("a must be a function on X")
        return sp.kron(sp.diags(a), sp.identity(self.nf * self.ng), format="csr")

    def u(self, g: int) -> sp.csr_matrix:
        if g not in self._u_cache:
            lam = np.zeros((self.ng, self.ng))
            lam[self.group.mul[g], np.arange(self.ng)] = 1.0
            gam = second_quantize_orthogonal(self.fock, self.ambient_rep(g)).mat
            mat = sp.kron(sp.kron(sp.csr_matrix(self.action.koopman(g)), gam), sp.csr_matrix(lam), format="csr")
            mat.eliminate_zeros()
            self._u_cache[g] = mat
        return self._u_cache[g]

    def fock_field(self, xi) -> sp.csr_matrix:
        return self.lift_fock(field(self.fock, xi))

    def generator(self, g: int, k=0) -> sp.csr_matrix:
        """``S_q(g (x) k) = s_q(delta_g (x) k) u_g``."""
        key = (g, int(k)) if np.isscalar(k) else None
        if key is not None and key in self._gen_cache:
            return self._gen_cache[key]
        out = (self.fock_field(self.delta_vector(g, k)) @ self.u(g)).tocsr()
        if key is not None:
            self._gen_cache[key] = out
        return out

    def cyclic_vector(self) -> np.ndarray:
        v = np.zeros((self.nx, self.nf, self.ng))
        v[:, 0, self.group.identity] = 1 / np.sqrt(self.nx)
        return v.ravel()

    def fock_degrees(self) -> np.ndarray:
        degs = self.fock.degrees()
        return np.broadcast_to(degs[None, :, None], (self.nx, self.nf, self.ng)).ravel()

    def number_projection(self, n: int) -> sp.csr_matrix:
        return sp.diags((self.fock_degrees() == n).astype(float)).tocsr()

    def semigroup(self, t: float) -> sp.csr_matrix:
        return sp.diags(np.exp(-t * self.fock_degrees())).tocsr()

    # -- metric -------------------------------------------------------------
    def gram_apply(self, v: np.ndarray) -> np.ndarray:
        """Model Gram ``1 (x) G_q (x) 1`` applied to vectors (columns) ``v``."""
        v = np.asarray(v)
        vec = v.ndim == 1
        if vec:
            v = v[:, None]
        batch = v.shape[1]
        t = v.reshape(self.nx, self.nf, self.ng, batch)
        out = np.empty_like(t, dtype=np.result_type(t, float))
        for n in range(self.cutoff + 1):
            s = self.fock.degree_slice(n)
            blk = np.moveaxis(t[:, s], 1, 0).reshape(s.stop - s.start, -1)
            res = self.fock.gram_apply(n, blk).reshape(s.stop - s.start, self.nx, self.ng, batch)
            out[:, s] = np.moveaxis(res, 0, 1)
        out = out.reshape(self.size, batch)
        return out[:, 0] if vec else out

    def inner(self, u, v):
        return np.vdot(u, self.gram_apply(v))

    def adjoint_defect(self, X, Y, chunk: int = 256) -> float:
        """``max |<X e_i, e_j> - <e_i, Y e_j>|`` over all basis pairs; zero iff ``Y = X*``."""
        X = sp.csr_matrix(X)
        Y = sp.csr_matrix(Y)
        XH = X.conj().T.tocsr()
        worst = 0.0
        for start in range(0, self.size, chunk):
            cols = np.arange(start, min(start + chunk, self.size))
            E = np.zeros((self.size, len(cols)))
            E[cols, np.arange(len(cols))] = 1.0
            lhs = XH @ self.gram_apply(E)
            rhs = self.gram_apply(Y[:, cols].toarray())
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        return worst

    def orthonormal_factor(self) -> np.ndarray:
        """Dense ``C`` with model Gram ``C^T C``."""
        fock_c = self.fock.orthonormal_factor()
        return np.kron(np.kron(np.eye(self.nx), fock_c), np.eye(self.ng))

    # -- reading vectors back as algebra elements ---------------------------
    def _as_tensor(self, v):
        return np.asarray(v).reshape(self.nx, self.nf, self.ng)

    def conditional_expectation_A(self, x) -> np.ndarray:
        """``E_A(x)`` as a function on X, read from ``x`` applied to the trace vector."""
        v = self._as_tensor(x @ self.cyclic_vector())
        return np.sqrt(self.nx) * v[:, 0, self.group.identity]

    def degree_zero_coefficients(self, vec) -> dict[int, np.ndarray]:
        """``P_0`` part of a vector ``x Omega``: ``{g: a_g}`` with ``P_0(x) = sum a_g u_g``."""
        v = self._as_tensor(vec)
        out = {}
        for g in range(self.ng):
            a = np.sqrt(self.nx) * v[:, 0, g]
            if np.any(a != 0):
                out[g] = a
        return out

    def crossed_operator(self, coeffs: dict[int, np.ndarray]) -> sp.csr_matrix:
        mat = sp.csr_matrix((self.size, self.size), dtype=complex)
        for g, a in coeffs.items():
            mat = mat + self.multiplier(a) @ self.u(g)
        return mat.tocsr()

    def delta_coordinates(self, vec, n: int) -> np.ndarray:
        """Degree-``n`` part of a vector with Fock letters rewritten as ``delta_h (x) e_k``.

        Returns an array of shape ``(nx, (|G| d)^n, ng)``.
        """
        v = self._as_tensor(vec)
        s = self.fock.degree_slice(n)
        blk = v[:, s]
        M = np.kron(self.basis, np.eye(self.kdim))  # real-basis letter -> delta letter
        dp = self.fock.dim
        t = blk.reshape((self.nx,) + (dp,) * n + (self.ng,))
        for axis in range(1, n + 1):
            t = np.moveaxis(np.tensordot(M, t, axes=([1], [axis])), 0, axis)
        return t.reshape(self.nx, dp**n, self.ng)

    def label_violations(self, vec, tol: float = 1e-10) -> list[tuple]:
        """Components ``a (x) (delta_h1 k1 ... delta_hn kn) (x) delta_g`` with ``h1...hn g^-1`` outside [G,G]."""
        G = self.group
        comm = commutator_subgroup(G)
        bad = []
        for n in range(self.cutoff + 1):
            t = self.delta_coordinates(vec, n)
            letters = self.fock.letters(n) // self.kdim
            for x, w, g in zip(*np.nonzero(np.abs(t) > tol)):
                hs = [int(h) for h in letters[w]]
                if G.prod(*hs, int(G.inv[g])) not in comm:
                    bad.append((n, int(x), tuple(hs), int(g), complex(t[x, w, g])))
        return bad


def doubled_model(model: CrossedProductModel) -> CrossedProductModel:
    """Same data with ``K`` replaced by ``K (+) K``; letter ``(j, c, k)`` at ``j*2d + c*d + k``."""
    return CrossedProductModel(model.action, model.rep, 2 * model.kdim, model.cutoff, model.q)


def doubled_letter_map(model: CrossedProductModel) -> np.ndarray:
    d, n = model.kdim, model.group.order
    return np.array([j * 2 * d + k for j in range(n) for k in range(d)])


def rotation_on_doubled(model: CrossedProductModel, theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    o2 = np.array([[c, s], [-s, c]])
    return np.kron(np.eye(model.group.order), np.kron(o2, np.eye(model.kdim)))


def factorized_semigroup(model: CrossedProductModel, t: float) -> sp.csr_matrix:
    """``E o (alpha_theta x| 1_G)`` restricted to the original model, with ``cos theta = e^-t``."""
    big = doubled_model(model)
    theta = np.arccos(np.exp(-t))
    alpha = big.lift_fock(second_quantize_orthogonal(big.fock, rotation_on_doubled(model, theta)))
    fidx = embedding_indices(model.fock, big.fock, doubled_letter_map(model))
    idx = (np.arange(model.nx)[:, None, None] * big.nf * big.ng
           + fidx[None, :, None] * big.ng
           + np.arange(model.ng)[None, None, :]).ravel()
    return alpha[idx][:, idx].tocsr()


def polar_covariance(model: CrossedProductModel, g: int, k=0, tol: float = 1e-8):
    """Polar decomposition ``S = w |S|`` in orthonormal coordinates and covariance on the support."""
    if model.size > 4000:
        raise ResourceGuardError(f"polar decomposition of a {model.size}-dimensional model refused")
    C = model.orthonormal_factor()
    Cinv = sla.solve_triangular(C, np.eye(model.size), lower=False)
    S = C @ model.generator(g, k).toarray() @ Cinv
    U, sv, Vh = np.linalg.svd(S)
    r = int(np.sum(sv > 1e-10 * max(sv.max(), 1.0)))
    Ur, Vr = U[:, :r], Vh[:r].conj().T
    w = Ur @ Vr.conj().T
    modulus = Vr @ np.diag(sv[:r]) @ Vr.conj().T
    f = Vr @ Vr.conj().T
    G = model.group
    cov = comm = 0.0
    for x in range(model.nx):
        a = np.zeros(model.nx)
        a[x] = 1.0
        A = model.multiplier(a).toarray()
        SA = model.multiplier(model.action.act(g, a)).toarray()
        cov = max(cov, float(np.max(np.abs(w @ A @ f - SA @ w @ f))))
        comm = max(comm, float(np.max(np.abs(modulus @ A - A @ modulus))))
    ww = w @ w.conj().T
    report = {
        "rank": r,
        "covariance_defect": cov,
        "modulus_commutes_with_A": comm,
        "modulus_min_eig": float(np.linalg.eigvalsh((modulus + modulus.conj().T) / 2).min()),
        "ww_star_max_eig": float(np.linalg.eigvalsh((ww + ww.conj().T) / 2).max()),
        "w_star_w_minus_support": float(np.max(np.abs(w.conj().T @ w - f))),
        "reconstruction": float(np.max(np.abs(w @ modulus - S))),
    }
    report["pass"] = bool(cov <= tol and comm <= tol and report["modulus_min_eig"] >= -tol
                          and report["ww_star_max_eig"] <= 1 + tol and report["w_star_w_minus_support"] <= tol)
    return w, modulus, report

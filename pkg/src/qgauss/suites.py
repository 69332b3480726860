"""Invariant suites run by the command line; each check yields one record."""
from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import rigidity as rg
from .gqg import (
    CrossedProductModel,
    c0_element,
    centrality_defect,
    commutator_extraction,
    covariance_defect,
    factorized_semigroup,
    free_moment_nc,
    load_group,
    spectral_gap,
    trivial_action,
    word_vector,
)
from .qfock import (
    FockSpace,
    annihilation,
    contraction_by_dilation,
    creation,
    field,
    field_moment,
    gram_bruteforce,
    moment_combinatorial,
    number_semigroup,
    rotation_dilation,
    second_quantize_contraction,
    second_quantize_orthogonal,
    compress,
)
from .wick import field_product_decomposition, reassemble, wick_product_expansion, wick_word

SUITES = ("fock", "wick", "gqg", "rigidity")


def derive_seed(master: int, name: str) -> int:
    """Stable 64-bit seed for a named check."""
    digest = hashlib.sha256(f"{master}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


@dataclass
class Record:
    name: str
    expected: object
    actual: object
    tolerance: float | None
    passed: bool
    ref: str

    def to_dict(self) -> dict:
        return {"name": self.name, "expected": _jsonable(self.expected), "actual": _jsonable(self.actual),
                "tolerance": self.tolerance, "pass": bool(self.passed), "ref": self.ref}


def close(name, expected, actual, tol, ref) -> Record:
    ok = bool(np.all(np.abs(np.asarray(actual) - np.asarray(expected)) <= tol))
    return Record(name, expected, actual, tol, ok, ref)


def at_most(name, actual, tol, ref, expected=0.0) -> Record:
    return Record(name, expected, float(actual), tol, bool(actual <= tol), ref)


def at_least(name, actual, bound, ref) -> Record:
    return Record(name, f">= {bound}", float(actual), None, bool(actual >= bound), ref)


@dataclass
class SuiteConfig:
    q: float = 0.3
    dim: int = 2
    cutoff: int = 4
    group: str = "S3"
    seed: int = 0
    trials: int = 10_000
    resolution: int = 16
    seeds: dict = dc_field(default_factory=dict)

    def rng(self, name: str) -> np.random.Generator:
        s = derive_seed(self.seed, name)
        self.seeds[name] = s
        return np.random.default_rng(s)


def _random_orthogonal(rng, d):
    qm, r = np.linalg.qr(rng.normal(size=(d, d)))
    return qm * np.sign(np.diag(r))


# -- fock -------------------------------------------------------------------

def fock_suite(cfg: SuiteConfig) -> list[Record]:
    recs = []
    q, d = cfg.q, cfg.dim
    n_small = min(cfg.cutoff, 4)
    space = FockSpace(d, n_small, q)
    worst = max(float(np.abs(space.gram(n) - gram_bruteforce(n, d, q)).max()) for n in range(n_small + 1))
    recs.append(at_most("fock.gram_recursion_vs_permutation_sum", worst, 1e-12, "q-Gram form"))
    mins = [float(np.linalg.eigvalsh(space.gram(n)).min()) for n in range(n_small + 1)]
    recs.append(at_least("fock.gram_positive", min(mins), -1e-12, "q-Gram positivity"))

    rng = cfg.rng("fock.q_relation")
    worst = 0.0
    for i, j in itertools.product(range(d), repeat=2):
        f, g = np.eye(d)[i], np.eye(d)[j]
        A = (annihilation(space, f) @ creation(space, g) - creation(space, g) @ annihilation(space, f) * q).mat
        xi = rng.normal(size=space.size)
        xi[space.degree_slice(n_small)] = 0.0
        worst = max(worst, float(np.abs(A @ xi - (i == j) * xi).max()))
    recs.append(at_most("fock.q_commutation", worst, 1e-12, "q-commutation relation"))

    h = np.eye(d)[0]
    s = field(space, h)
    recs.append(at_most("fock.field_self_adjoint", s.adjoint_defect(s), 1e-12, "field operator"))
    if n_small >= 2:
        recs.append(close("fock.tau_s4", 2 + q, float(np.real(field_moment(space, [h] * 4))), 1e-10,
                          "fourth moment 2+q"))

    rng = cfg.rng("fock.functoriality")
    worst = 0.0
    for _ in range(5):
        o1, o2 = _random_orthogonal(rng, d), _random_orthogonal(rng, d)
        lhs = second_quantize_orthogonal(space, o1 @ o2).mat
        rhs = (second_quantize_orthogonal(space, o1) @ second_quantize_orthogonal(space, o2)).mat
        worst = max(worst, abs(lhs - rhs).max())
    recs.append(at_most("fock.second_quantization_functorial", worst, 1e-10, "functoriality"))

    big = FockSpace(2 * d, n_small, q)
    worst = 0.0
    for t in (0.1, 0.7, 2.0):
        th = np.arccos(np.exp(-t))
        lhs = compress(rotation_dilation(big, th), space).mat
        worst = max(worst, abs(lhs - number_semigroup(space, t).mat).max())
    recs.append(at_most("fock.semigroup_dilation", worst, 1e-10, "number semigroup dilation"))

    rng = cfg.rng("fock.contraction")
    v = rng.normal(size=(d, d))
    v /= 1.5 * np.linalg.norm(v, 2)
    diff = abs(contraction_by_dilation(space, v).mat - second_quantize_contraction(space, v).mat).max()
    recs.append(at_most("fock.contraction_by_dilation", diff, 1e-10, "second quantization of contractions"))
    return recs


# -- wick -------------------------------------------------------------------

def wick_suite(cfg: SuiteConfig) -> list[Record]:
    recs = []
    q, d = cfg.q, 2
    space = FockSpace(d, 4, q)
    rng = cfg.rng("wick.vectors")
    worst_omega = worst_prod = 0.0
    for m, mp in itertools.product(range(3), repeat=2):
        if m + mp > 4:
            continue
        xi = np.zeros(space.size)
        eta = np.zeros(space.size)
        xi[space.degree_slice(m)] = rng.normal(size=d**m)
        eta[space.degree_slice(mp)] = rng.normal(size=d**mp)
        W = wick_word(space, xi)
        worst_omega = max(worst_omega, float(np.abs(W.operator.mat @ space.vacuum() - xi).max()))
        lhs = (W.operator @ wick_word(space, eta).operator).mat
        rhs = reassemble(space, wick_product_expansion(space, xi, eta)).mat
        worst_prod = max(worst_prod, abs(lhs - rhs).max())
    recs.append(at_most("wick.word_on_vacuum", worst_omega, 1e-10, "Wick word"))
    recs.append(at_most("wick.product_expansion", worst_prod, 1e-10, "Wick product formula"))

    hs = list(rng.normal(size=(4, d)))
    lhs = field(space, hs[0]) @ field(space, hs[1]) @ field(space, hs[2]) @ field(space, hs[3])
    diff = abs(lhs.mat - field_product_decomposition(space, hs).mat).max()
    recs.append(at_most("wick.field_product_decomposition", diff, 1e-10, "field products as Wick sums"))
    return recs


# -- gqg --------------------------------------------------------------------

def gqg_suite(cfg: SuiteConfig) -> list[Record]:
    recs = []
    q = cfg.q
    act = load_group(cfg.group, "natural" if cfg.group in ("S3", "D4") else "regular")
    G = act.group
    for rep in ("trivial", "conjugation"):
        m = CrossedProductModel(act, rep, kdim=cfg.dim, cutoff=min(cfg.cutoff, 2), q=q)
        cov = max(covariance_defect(m, g, k) for g in range(G.order) for k in range(cfg.dim))
        recs.append(at_most(f"gqg.covariance.{rep}", cov, 1e-12, "covariance S a = sigma(a) S"))
        if rep == "conjugation":
            adj = max(m.adjoint_defect(m.generator(g), m.generator(int(G.inv[g]))) for g in range(G.order))
            recs.append(at_most("gqg.adjoint.conjugation", adj, 1e-12, "S(g)* = S(g^-1)"))
        fac = abs(factorized_semigroup(m, 0.5) - m.semigroup(0.5)).max()
        recs.append(at_most(f"gqg.semigroup_factorization.{rep}", fac, 1e-10, "semigroup factorization"))
        c0 = c0_element(m, [1, int(G.inv[1])], [0, min(1, cfg.dim - 1)])
        recs.append(at_most(f"gqg.c0_central.{rep}", centrality_defect(m, c0), 1e-10, "relative commutant words"))

    # commutator extraction needs a trivial action and d >= 2
    pair = next(((a, b) for a in range(G.order) for b in range(G.order) if G.commutator(a, b) != G.identity),
                (0, 0))
    m4 = CrossedProductModel(trivial_action(G), "trivial", kdim=max(cfg.dim, 2), cutoff=4, q=q)
    op, expected = commutator_extraction(m4, pair[0], pair[1], 0, 1)
    rec = at_most("gqg.commutator_extraction", abs(op - expected).max(), 1e-10, "q u_[g1,g2] extraction")
    rec.expected = f"q*u[{G.labels[G.commutator(*pair)]}]"
    recs.append(rec)

    m0 = CrossedProductModel(act, "trivial", kdim=1, cutoff=2, q=0.0)
    rng = cfg.rng("gqg.free_nc")
    worst = 0.0
    for L in (2, 4):
        for gs in itertools.product(range(G.order), repeat=L):
            coeffs = [rng.normal(size=m0.nx) for _ in gs]
            v = word_vector(m0, list(gs), None, coeffs)
            ea = np.sqrt(m0.nx) * v.reshape(m0.nx, m0.nf, m0.ng)[:, 0, G.identity]
            worst = max(worst, float(np.abs(ea - free_moment_nc(m0, list(gs), None, coeffs)).max()))
    recs.append(at_most("gqg.free_noncrossing_rule", worst, 1e-10, "free noncrossing moment rule"))

    rep = spectral_gap(2, q if abs(q) < 1 else 0.0, cutoff=2)
    recs.append(at_most("gqg.gap_normalization", max(abs(t) for t in rep.trace_x), 1e-12, "tau(x_g) = 0"))
    return recs


# -- rigidity ---------------------------------------------------------------

def rigidity_suite(cfg: SuiteConfig) -> list[Record]:
    L = cfg.resolution
    recs = [at_most("rigidity.dirac_defect", rg.default_defect(rg.GridMeasure.dirac0(L)), 0.0, "fixed point")]
    seed = derive_seed(cfg.seed, "rigidity.adversary")
    cfg.seeds["rigidity.adversary"] = seed
    res = rg.lemma55_adversary(L, cfg.trials, seed)
    rec = at_least("rigidity.adversary_min_defect", res.minimum, rg.LEMMA_THRESHOLD, "no almost-invariant "
                   "measure away from the origin")
    recs.append(rec)
    if L % 2 == 0:
        worst_ratio = 0.0
        ok = True
        for beta in (1e-3, 1e-2, 0.1, 0.5):
            rep = rg.tpp_concentration(rg.mu_beta(L, beta))
            ok &= rep["pass"]
            worst_ratio = max(worst_ratio, rep["l1_distance"] / rep["defect"])
        recs.append(Record("rigidity.mu_beta_concentration", f"<= {rg.TPP_CONSTANT}", worst_ratio, None,
                           bool(ok and worst_ratio <= rg.TPP_CONSTANT), "concentration constant 40"))
    return recs


SUITE_FUNCS = {"fock": fock_suite, "wick": wick_suite, "gqg": gqg_suite, "rigidity": rigidity_suite}

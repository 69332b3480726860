"""Finite groups given by multiplication tables, and their actions on finite sets."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import permutations
from pathlib import Path

import numpy as np


class GroupError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    mul: np.ndarray
    labels: tuple[str, ...] = ()
    name: str = "G"
    inv: np.ndarray = field(init=False, repr=False)
    identity: int = field(init=False)

    def __post_init__(self):
        mul = np.asarray(self.mul, dtype=np.int64)
        object.__setattr__(self, "mul", mul)
        n = mul.shape[0]
        if mul.shape != (n, n) or mul.min() < 0 or mul.max() >= n:
            raise GroupError("multiplication table must be an n x n table over 0..n-1")
        ids = [e for e in range(n) if np.array_equal(mul[e], np.arange(n)) and np.array_equal(mul[:, e], np.arange(n))]
        if len(ids) != 1:
            raise GroupError("no two-sided identity")
        e = ids[0]
        inv = np.empty(n, dtype=np.int64)
        for g in range(n):
            right = np.nonzero(mul[g] == e)[0]
            if len(right) != 1 or mul[right[0], g] != e:
                raise GroupError(f"element {g} has no inverse")
            inv[g] = right[0]
        # associativity over the full table
        ar = np.arange(n)
        if not np.array_equal(mul[mul[:, :, None], ar[None, None, :]], mul[ar[:, None, None], mul[None, :, :]]):
            raise GroupError("multiplication is not associative")
        object.__setattr__(self, "inv", inv)
        object.__setattr__(self, "identity", int(e))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(n)))

    @property
    def order(self) -> int:
        return self.mul.shape[0]

    def __len__(self):
        return self.order

    def __repr__(self):
        return f"FiniteGroup({self.name}, order={self.order})"

    def prod(self, *gs) -> int:
        out = self.identity
        for g in gs:
            out = int(self.mul[out, g])
        return out

    def commutator(self, g: int, h: int) -> int:
        """``g h g^-1 h^-1``."""
        return self.prod(g, h, self.inv[g], self.inv[h])

    def conj(self, g: int, h: int) -> int:
        """``g h g^-1``."""
        return self.prod(g, h, self.inv[g])

    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.mul, self.mul.T))

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def to_json(self) -> dict:
        return {"order": self.order, "mul": self.mul.tolist(), "labels": list(self.labels)}


def commutator_subgroup(G: FiniteGroup) -> frozenset[int]:
    gens = {G.commutator(g, h) for g in range(G.order) for h in range(G.order)}
    closed = set(gens) | {G.identity}
    frontier = list(closed)
    while frontier:
        new = []
        for a in frontier:
            for b in list(closed):
                for c in (G.prod(a, b), G.prod(b, a)):
                    if c not in closed:
                        closed.add(c)
                        new.append(c)
        frontier = new
    return frozenset(closed)


@dataclass(frozen=True, eq=False)
class GroupAction:
    """``perm[g, x] = g . x`` for a left action on ``0..npoints-1``."""

    group: FiniteGroup
    perm: np.ndarray

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=np.int64)
        object.__setattr__(self, "perm", perm)
        G = self.group
        if perm.ndim != 2 or perm.shape[0] != G.order:
            raise GroupError("need one permutation per group element")
        npts = perm.shape[1]
        for row in perm:
            if sorted(row) != list(range(npts)):
                raise GroupError("action rows must be permutations")
        for g in range(G.order):
            for h in range(G.order):
                if not np.array_equal(perm[G.mul[g, h]], perm[g][perm[h]]):
                    raise GroupError("action is not a homomorphism")

    @property
    def npoints(self) -> int:
        return self.perm.shape[1]

    def act(self, g: int, a: np.ndarray) -> np.ndarray:
        """``sigma_g(a)(x) = a(g^-1 . x)``."""
        a = np.asarray(a)
        return a[self.perm[self.group.inv[g]]]

    def koopman(self, g: int) -> np.ndarray:
        """Unitary ``delta_x -> delta_{g.x}`` on ``l2(X)``; implements ``sigma_g`` by conjugation."""
        n = self.npoints
        u = np.zeros((n, n))
        u[self.perm[g], np.arange(n)] = 1.0
        return u


# -- built-ins -------------------------------------------------------------

def _from_elements(elements, op, labels, name) -> FiniteGroup:
    index = {e: i for i, e in enumerate(elements)}
    n = len(elements)
    mul = np.array([[index[op(a, b)] for b in elements] for a in elements])
    return FiniteGroup(mul, tuple(labels), name)


def cyclic(n: int) -> FiniteGroup:
    return _from_elements(list(range(n)), lambda a, b: (a + b) % n, [str(i) for i in range(n)], f"Z{n}")


def klein() -> FiniteGroup:
    els = [(a, b) for a in range(2) for b in range(2)]
    return _from_elements(els, lambda x, y: ((x[0] + y[0]) % 2, (x[1] + y[1]) % 2), [f"{a}{b}" for a, b in els], "Z2xZ2")


def _compose(p, r):
    """``(p o r)(i) = p(r(i))``."""
    return tuple(p[i] for i in r)


def symmetric3() -> FiniteGroup:
    els = sorted(permutations(range(3)))
    labels = []
    for p in els:
        labels.append("".join(str(i + 1) for i in p))
    return _from_elements(els, _compose, labels, "S3")


def dihedral4() -> FiniteGroup:
    # symmetries of the square acting on vertices 0..3
    r = (1, 2, 3, 0)
    s = (0, 3, 2, 1)
    els = {tuple(range(4))}
    frontier = [tuple(range(4))]
    while frontier:
        new = []
        for p in frontier:
            for g in (r, s):
                c = _compose(g, p)
                if c not in els:
                    els.add(c)
                    new.append(c)
        frontier = new
    els = sorted(els)
    return _from_elements(els, _compose, ["".join(map(str, p)) for p in els], "D4")


BUILTIN_GROUPS = {"S3": symmetric3, "D4": dihedral4, "Z2xZ2": klein}


def builtin_group(name: str) -> FiniteGroup:
    if name in BUILTIN_GROUPS:
        return BUILTIN_GROUPS[name]()
    if name.startswith("Z") and name[1:].isdigit():
        return cyclic(int(name[1:]))
    raise GroupError(f"unknown builtin group {name!r}")


def regular_action(G: FiniteGroup) -> GroupAction:
    return GroupAction(G, G.mul.copy())


def trivial_action(G: FiniteGroup, npoints: int = 1) -> GroupAction:
    return GroupAction(G, np.tile(np.arange(npoints), (G.order, 1)))


def natural_action(G: FiniteGroup) -> GroupAction:
    """Permutation groups built above act on the points their labels permute."""
    if G.name not in ("S3", "D4"):
        raise GroupError(f"{G.name} has no natural permutation action here")
    perms = [tuple(int(c) - (1 if G.name == "S3" else 0) for c in lab) for lab in G.labels]
    return GroupAction(G, np.array(perms))


def make_action(G: FiniteGroup, kind: str) -> GroupAction:
    kinds = {"regular": regular_action, "trivial": trivial_action, "natural": natural_action}
    if kind not in kinds:
        raise GroupError(f"unknown action kind {kind!r}")
    return kinds[kind](G)


def load_group(spec: str | Path | dict, action: str = "regular") -> GroupAction:
    """Load ``{order, mul, action, labels}`` from a JSON file or dict, or a builtin name.

    ``action`` in the JSON is a list of permutations (one per element); when
    missing, ``action`` (``regular``/``trivial``/``natural``) picks a builtin.
    """
    if isinstance(spec, str) and not spec.endswith(".json"):
        return make_action(builtin_group(spec), action)
    if not isinstance(spec, dict):
        spec = json.loads(Path(spec).read_text())
    mul = np.asarray(spec["mul"])
    order = int(spec.get("order", mul.shape[0]))
    if mul.shape != (order, order):
        raise GroupError(f"table shape {mul.shape} does not match order {order}")
    G = FiniteGroup(mul, tuple(spec.get("labels", ())), spec.get("name", "G"))
    if "action" in spec:
        return GroupAction(G, np.asarray(spec["action"]))
    return make_action(G, action)

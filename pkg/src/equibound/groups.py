"""Finite groups, Cayley tables, and the regular action on signals.

Conventions used everywhere downstream:

* elements are indexed ``0 .. order-1`` and the identity is always index 0;
* dihedral elements are ordered rotations first (``r^0 .. r^(n-1)``, then
  ``s r^0 .. s r^(n-1)``) with the relation ``s r = r^-1 s``;
* direct products are indexed lexicographically, ``(a, b) -> a * |G2| + b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FiniteGroup",
    "GroupSignal",
    "make_cyclic",
    "make_dihedral",
    "direct_product",
    "parse_group_spec",
    "regular_perm",
    "act",
    "translate",
    "group_convolve",
]


@dataclass(frozen=True)
class FiniteGroup:
    """A finite group as a Cayley table over element indices.

    ``cayley[a, b]`` is the index of ``a * b`` and ``inv[a]`` the index of
    ``a^-1``.  ``kind`` keeps the construction ("cyclic", n), ("dihedral", n)
    or ("product", (G1, G2)) so that harmonic analysis can dispatch on
    structure.  ``name`` is the CLI spec string, e.g. ``"c8"`` or ``"c2xc4"``.
    """

    order: int
    cayley: np.ndarray
    inv: np.ndarray
    abelian: bool
    kind: tuple
    name: str

    def __post_init__(self):
        self.cayley.setflags(write=False)
        self.inv.setflags(write=False)

    def mul(self, a: int, b: int) -> int:
        return int(self.cayley[a, b])

    def inverse(self, a: int) -> int:
        return int(self.inv[a])

    @property
    def identity(self) -> int:
        return 0

    def elements(self) -> range:
        return range(self.order)

    def __repr__(self):
        return f"FiniteGroup({self.name}, order={self.order})"

    def __eq__(self, other):
        return isinstance(other, FiniteGroup) and self.name == other.name

    def __hash__(self):
        return hash(self.name)


def _finish(order: int, cayley: np.ndarray, kind: tuple, name: str) -> FiniteGroup:
    inv = np.empty(order, dtype=np.int64)
    for a in range(order):
        hits = np.nonzero(cayley[a] == 0)[0]
        if hits.size != 1:
            raise ValueError(f"element {a} of {name} has no unique inverse")
        inv[a] = hits[0]
    abelian = bool(np.array_equal(cayley, cayley.T))
    return FiniteGroup(order=order, cayley=cayley, inv=inv, abelian=abelian,
                       kind=kind, name=name)


def make_cyclic(n: int) -> FiniteGroup:
    """Cyclic group C_n with ``cayley[a, b] = (a + b) mod n``."""
    if n < 1:
        raise ValueError(f"cyclic group order must be >= 1, got {n}")
    idx = np.arange(n, dtype=np.int64)
    cayley = (idx[:, None] + idx[None, :]) % n
    return _finish(n, cayley, ("cyclic", n), f"c{n}")


def make_dihedral(n: int) -> FiniteGroup:
    """Dihedral group D_n of order 2n (n rotations, n reflections).

    Index a in [0, n) is the rotation r^a; index n + a is the reflection
    s r^a.  The table follows s r = r^-1 s.
    """
    if n < 1:
        raise ValueError(f"dihedral group parameter must be >= 1, got {n}")
    order = 2 * n
    cayley = np.empty((order, order), dtype=np.int64)
    for a in range(n):
        for b in range(n):
            cayley[a, b] = (a + b) % n                  # r^a r^b
            cayley[a, n + b] = n + (b - a) % n          # r^a (s r^b) = s r^(b-a)
            cayley[n + a, b] = n + (a + b) % n          # (s r^a) r^b = s r^(a+b)
            cayley[n + a, n + b] = (b - a) % n          # (s r^a)(s r^b) = r^(b-a)
    return _finish(order, cayley, ("dihedral", n), f"d{n}")


def direct_product(g1: FiniteGroup, g2: FiniteGroup) -> FiniteGroup:
    """Direct product with lexicographic indexing ``(a, b) -> a * |G2| + b``."""
    n1, n2 = g1.order, g2.order
    a1, b1 = np.divmod(np.arange(n1 * n2, dtype=np.int64), n2)
    # cayley[(a1,b1),(a2,b2)] = (a1*a2, b1*b2)
    left = g1.cayley[a1[:, None], a1[None, :]]
    right = g2.cayley[b1[:, None], b1[None, :]]
    cayley = left * n2 + right
    return _finish(n1 * n2, cayley, ("product", (g1, g2)), f"{g1.name}x{g2.name}")


def parse_group_spec(spec: str) -> FiniteGroup:
    """Build a group from a spec string: ``"c8"``, ``"d4"``, ``"c2xc4"``, ..."""
    text = spec.strip().lower()
    if not text:
        raise ValueError("empty group spec")
    factors = []
    for token in text.split("x"):
        if len(token) < 2 or token[0] not in "cd" or not token[1:].isdigit():
            raise ValueError(f"bad group spec {spec!r}: token {token!r} "
                             "(expected c<n> or d<n>)")
        n = int(token[1:])
        factors.append(make_cyclic(n) if token[0] == "c" else make_dihedral(n))
    group = factors[0]
    for extra in factors[1:]:
        group = direct_product(group, extra)
    return group


@dataclass(frozen=True)
class GroupSignal:
    """A multi-channel function over a group: ``values[g, k] = x(g)`` in channel k."""

    group: FiniteGroup
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != self.group.order:
            raise ValueError(f"signal has {values.shape[0]} positions, "
                             f"group {self.group.name} has {self.group.order}")
        if not np.all(np.isfinite(values)):
            raise ValueError("signal contains non-finite entries")
        object.__setattr__(self, "values", values)
        values.setflags(write=False)

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    def norm(self) -> float:
        # exact (correctly rounded) sum of squares, so the norm is invariant
        # under permutations of the entries to the last ulp
        return math.sqrt(math.fsum(v * v for v in self.values.ravel().tolist()))


def regular_perm(group: FiniteGroup, g: int) -> np.ndarray:
    """Permutation of the regular action: position h is sent to g * h.

    Applying it to a signal x gives y with ``y[perm[h]] = x[h]``, which is
    exactly ``[g.x](h) = x(g^-1 h)``.
    """
    if not 0 <= g < group.order:
        raise ValueError(f"element index {g} out of range for {group.name}")
    return group.cayley[g].copy()


def translate(group: FiniteGroup, g: int, values: np.ndarray) -> np.ndarray:
    """Apply the regular action of g to raw values along axis 0."""
    if not 0 <= g < group.order:
        raise ValueError(f"element index {g} out of range for {group.name}")
    return values[group.cayley[group.inv[g]]]


def act(group: FiniteGroup, g: int, x: GroupSignal) -> GroupSignal:
    """The regular action on a signal: ``[g.x](h) = x(g^-1 h)``."""
    if x.group != group:
        raise ValueError(f"signal lives on {x.group.name}, not {group.name}")
    return GroupSignal(group, translate(group, g, x.values))


def group_convolve(group: FiniteGroup, w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Group cross-correlation ``y(g) = sum_h w(g^-1 h) x(h)``.

    Computed as ``y(g) = sum_k w(k) x(g k)`` (substituting h = g k), so the
    summation order along k is the same for every output position; this makes
    equivariance against `act` hold bit-for-bit, not just to rounding.
    """
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if w.shape != (group.order,) or x.shape != (group.order,):
        raise ValueError(f"filter/signal must have shape ({group.order},), "
                         f"got {w.shape} and {x.shape}")
    return x[group.cayley] @ w

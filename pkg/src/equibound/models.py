"""One-hidden-layer network variants over a finite group.

All four variants share the same read path:

    score = u . pool(relu(hidden(x)))

and differ only in how the hidden pre-activations are produced from the
filter tensor ``w``:

* ``spatial``     -- per-channel group convolutions, ``w`` real (c1, c0, |G|);
* ``frequency``   -- per-frequency diagonal multiply followed by an inverse
                     Fourier transform, ``w`` complex (c1, c0, |G|) with
                     conjugate-symmetric rows so outputs stay real;
* ``weightshare`` -- learned combination of fixed basis matrices B_k,
                     ``w`` real (c1, c0, |G|);
* ``local``       -- one width-n' filter per channel pair applied to every
                     patch, ``w`` real (c1, c0, n').

The activation is ReLU and pooling is average, max, or phi(mean(rho(z)))
with rho/phi drawn from a closed catalog of 1-Lipschitz positive homogeneous
scalar maps.  The networks have no bias terms.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np

from .groups import FiniteGroup, GroupSignal, parse_group_spec
from .spectral import circulant_from_filter, fourier_basis

__all__ = [
    "SCALAR_MAPS",
    "Pooling",
    "Patches",
    "SharingBasis",
    "ModelSpec",
    "Params",
    "make_circulant_basis",
    "make_contiguous_patches",
    "pool",
    "pool_grad",
    "prepare_inputs",
    "scores",
    "forward",
    "init_params",
    "save_model",
    "load_model",
    "spatial_equivalent_m2",
]

VARIANTS = ("spatial", "frequency", "weightshare", "local")
POOLINGS = ("average", "max", "general")

# Closed catalog of 1-Lipschitz positive homogeneous scalar maps, as
# (function, subgradient) pairs.  Subgradient at a kink is 0.
SCALAR_MAPS = {
    "identity": (lambda t: t, lambda t: np.ones_like(t)),
    "relu": (lambda t: np.maximum(t, 0.0), lambda t: (t > 0).astype(float)),
    "abs": (np.abs, np.sign),
    "negrelu": (lambda t: np.minimum(t, 0.0), lambda t: (t < 0).astype(float)),
}

_relu = SCALAR_MAPS["relu"][0]
_drelu = SCALAR_MAPS["relu"][1]

_IMAG_RESIDUE_TOL = 1e-9


@dataclass(frozen=True)
class Pooling:
    """Per-channel pooling: average, max, or phi(mean(rho(z)))."""

    kind: str
    rho: str = "identity"
    phi: str = "identity"

    def __post_init__(self):
        if self.kind not in POOLINGS:
            raise ValueError(f"unknown pooling kind {self.kind!r}; "
                             f"expected one of {POOLINGS}")
        for name in (self.rho, self.phi):
            if name not in SCALAR_MAPS:
                raise ValueError(f"unknown scalar map {name!r}; "
                                 f"catalog is {sorted(SCALAR_MAPS)}")


@dataclass(frozen=True)
class Patches:
    """Index subsets S_l defining local filters.

    ``sets[l]`` lists the coordinates patch l reads; all patches have the
    same size.  ``o_phi`` is the maximum number of patches any single
    coordinate belongs to.
    """

    sets: np.ndarray
    o_phi: int

    def __post_init__(self):
        sets = np.asarray(self.sets, dtype=np.int64)
        object.__setattr__(self, "sets", sets)
        sets.setflags(write=False)
        counts = np.bincount(sets.ravel())
        if int(counts.max()) != self.o_phi:
            raise ValueError(f"o_phi={self.o_phi} inconsistent with membership "
                             f"counts (max is {int(counts.max())})")

    @property
    def width(self) -> int:
        return self.sets.shape[1]


@dataclass(frozen=True)
class SharingBasis:
    """Fixed |G| matrices B_k of shape |G| x |G|; never updated by training."""

    mats: np.ndarray
    circulant: bool = False

    def __post_init__(self):
        mats = np.asarray(self.mats, dtype=np.float64)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2] or \
                mats.shape[0] != mats.shape[1]:
            raise ValueError(f"expected shape (n, n, n), got {mats.shape}")
        object.__setattr__(self, "mats", mats)
        mats.setflags(write=False)


def make_circulant_basis(group: FiniteGroup) -> SharingBasis:
    """The circulant basis B_k = circulant(delta_k); recovers group convolution."""
    n = group.order
    mats = np.zeros((n, n, n))
    for k in range(n):
        delta = np.zeros(n)
        delta[k] = 1.0
        mats[k] = circulant_from_filter(group, delta)
    return SharingBasis(mats=mats, circulant=True)


def make_contiguous_patches(group: FiniteGroup, width: int) -> Patches:
    """Width-n' contiguous (mod |G|) patches on a cyclic group; O_phi = n'."""
    if group.kind[0] != "cyclic":
        raise ValueError(f"contiguous patches need a cyclic group, got {group.name}")
    if not 1 <= width <= group.order:
        raise ValueError(f"patch width must be in [1, {group.order}], got {width}")
    base = np.arange(width, dtype=np.int64)
    sets = (np.arange(group.order, dtype=np.int64)[:, None] + base[None, :]) % group.order
    return Patches(sets=sets, o_phi=width)


@dataclass(frozen=True)
class ModelSpec:
    """Architecture: variant, group, channel counts, pooling, variant payload."""

    variant: str
    group: FiniteGroup
    c0: int
    c1: int
    pooling: Pooling
    basis: SharingBasis | None = None
    patches: Patches | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; "
                             f"expected one of {VARIANTS}")
        if min(self.c0, self.c1) < 1:
            raise ValueError("channel counts must be positive")
        if self.variant == "frequency" and not self.group.abelian:
            raise ValueError(f"frequency parametrization needs an abelian group, "
                             f"got {self.group.name}")
        if self.variant == "weightshare":
            if self.basis is None:
                raise ValueError("weightshare variant needs a SharingBasis")
            if self.basis.mats.shape[0] != self.group.order:
                raise ValueError("basis size does not match the group order")
        if self.variant == "local":
            if self.patches is None:
                raise ValueError("local variant needs Patches")
            if self.patches.sets.shape[0] != self.group.order:
                raise ValueError("patch count must equal the group order")

    @property
    def filter_len(self) -> int:
        return self.patches.width if self.variant == "local" else self.group.order

    def filter_shape(self) -> tuple:
        return (self.c1, self.c0, self.filter_len)


@dataclass
class Params:
    """Learnables: last layer u (c1,) and the filter tensor w.

    w is complex for the frequency variant, real otherwise.
    """

    u: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        dtype = np.complex128 if np.iscomplexobj(self.w) else np.float64
        self.w = np.asarray(self.w, dtype=dtype)

    def norms(self) -> tuple[float, float]:
        """(M1, M2) = (||u||, euclidean norm of all filter coefficients)."""
        return float(np.linalg.norm(self.u)), float(np.linalg.norm(self.w))

    def copy(self) -> "Params":
        return Params(u=self.u.copy(), w=self.w.copy())


def init_params(spec: ModelSpec, rng: np.random.Generator) -> Params:
    """Gaussian init with 1/sqrt(fan-in) scaling.

    Frequency filters are drawn in the spatial domain and transformed, so
    they start conjugate-symmetric and match a spatial init in distribution.
    """
    u = rng.normal(scale=1.0 / np.sqrt(spec.c1), size=spec.c1)
    fan_in = spec.c0 * spec.filter_len
    w = rng.normal(scale=1.0 / np.sqrt(fan_in), size=spec.filter_shape())
    if spec.variant == "frequency":
        # w[j,c,k] = sqrt(|G|) sum_p conj(F[k,p]) w_spatial[j,c,p]
        basis = fourier_basis(spec.group)
        w = np.sqrt(spec.group.order) * (w @ np.conj(basis.F).T)
    return Params(u=u, w=w)


def pool(pooling: Pooling, z: np.ndarray) -> float:
    """Pool a length-|G| vector to a scalar."""
    z = np.asarray(z, dtype=np.float64)
    if pooling.kind == "average":
        return float(np.mean(z))
    if pooling.kind == "max":
        return float(np.max(z))
    rho = SCALAR_MAPS[pooling.rho][0]
    phi = SCALAR_MAPS[pooling.phi][0]
    return float(phi(np.mean(rho(z))))


def pool_grad(pooling: Pooling, z: np.ndarray) -> np.ndarray:
    """Subgradient of `pool` at z; max-pool ties break to the lowest index."""
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[-1]
    if pooling.kind == "average":
        return np.full_like(z, 1.0 / n)
    if pooling.kind == "max":
        g = np.zeros_like(z)
        idx = np.argmax(z, axis=-1)
        np.put_along_axis(g, np.expand_dims(idx, -1), 1.0, axis=-1)
        return g
    rho, drho = SCALAR_MAPS[pooling.rho]
    dphi = SCALAR_MAPS[pooling.phi][1]
    inner = np.mean(rho(z), axis=-1, keepdims=True)
    return dphi(inner) * drho(z) / n


class PreparedInputs:
    """Per-dataset tensors reused across forward/grad calls on the same X."""

    def __init__(self, spec: ModelSpec, X: np.ndarray):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 2:
            X = X[None]
        if X.shape[1:] != (spec.group.order, spec.c0):
            raise ValueError(f"inputs must have shape (m, {spec.group.order}, "
                             f"{spec.c0}), got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("inputs contain NaN or infinite entries")
        self.spec = spec
        self.X = X
        self.m = X.shape[0]
        if spec.variant == "spatial":
            # T[s, g, k, c] = X[s, g*k, c]
            self.T = X[:, spec.group.cayley, :]
        elif spec.variant == "frequency":
            basis = fourier_basis(spec.group)
            self.F = basis.F
            # Xh[s, k, c] = sum_p F[k, p] X[s, p, c]
            self.Xh = np.einsum("kp,mpc->mkc", basis.F, X)
        elif spec.variant == "weightshare":
            # BX[k, s, a, c] = sum_b B_k[a, b] X[s, b, c]
            self.BX = np.einsum("kab,mbc->kmac", spec.basis.mats, X)
        else:  # local
            # P[s, l, n, c] = X[s, S_l[n], c]
            self.P = X[:, spec.patches.sets, :]


def _preactivations(p: Params, prep: PreparedInputs) -> np.ndarray:
    """Hidden pre-activations, shape (m, c1, |G|)."""
    spec = prep.spec
    if spec.variant == "spatial":
        return np.einsum("mgkc,jck->mjg", prep.T, p.w)
    if spec.variant == "frequency":
        # prod[s, j, k] = sum_c w[j,c,k] Xh[s,k,c]; hidden = Re(F* prod)
        prod = np.einsum("jck,mkc->mjk", p.w, prep.Xh)
        hidden = np.einsum("mjk,kg->mjg", prod, np.conj(prep.F))
        residue = float(np.abs(hidden.imag).max(initial=0.0))
        if residue > _IMAG_RESIDUE_TOL:
            raise ValueError(
                f"frequency filters are not conjugate-symmetric: imaginary "
                f"residue {residue:.3e} after the inverse transform")
        return hidden.real
    if spec.variant == "weightshare":
        return np.einsum("jck,kmac->mja", p.w, prep.BX)
    return np.einsum("mlnc,jcn->mjl", prep.P, p.w)


def _pooled(pooling: Pooling, z: np.ndarray) -> np.ndarray:
    """Pool activations (m, c1, |G|) -> (m, c1)."""
    if pooling.kind == "average":
        return z.mean(axis=-1)
    if pooling.kind == "max":
        return z.max(axis=-1)
    rho = SCALAR_MAPS[pooling.rho][0]
    phi = SCALAR_MAPS[pooling.phi][0]
    return phi(rho(z).mean(axis=-1))


def scores(spec: ModelSpec, p: Params, X, prep: PreparedInputs | None = None) -> np.ndarray:
    """Batched forward pass: scores for X of shape (m, |G|, c0)."""
    if prep is None:
        prep = prepare_inputs(spec, X)
    pre = _preactivations(p, prep)
    pooled = _pooled(spec.pooling, _relu(pre))
    return pooled @ p.u


def prepare_inputs(spec: ModelSpec, X) -> PreparedInputs:
    return PreparedInputs(spec, X)


def forward(spec: ModelSpec, p: Params, x) -> float:
    """Score of a single input (GroupSignal or array of shape (|G|, c0))."""
    if isinstance(x, GroupSignal):
        if x.group != spec.group:
            raise ValueError(f"signal lives on {x.group.name}, "
                             f"model on {spec.group.name}")
        x = x.values
    return float(scores(spec, p, np.asarray(x)[None])[0])


def spatial_equivalent_m2(spec: ModelSpec, p: Params) -> float:
    """Filter norm in the spatial accounting.

    For the frequency variant the coefficient norm carries a sqrt(|G|)
    factor relative to the equivalent spatial filters (the circulant
    eigenvalues satisfy sum |s|^2 = |G| ||w||^2), so it is divided out;
    other variants return the plain coefficient norm.
    """
    m2 = float(np.linalg.norm(p.w))
    if spec.variant == "frequency":
        return m2 / np.sqrt(spec.group.order)
    return m2


# --- serialization ---------------------------------------------------------
#
# Flat little-endian binary container:
#
#   magic    4 bytes  b"EQB1"
#   variant  u8       0 spatial, 1 frequency, 2 weightshare, 3 local
#   pooling  u8       0 average, 1 max, 2 general
#   rho      u8       index into sorted(SCALAR_MAPS)  (general pooling only)
#   phi      u8       index into sorted(SCALAR_MAPS)  (general pooling only)
#   glen     u16      length of the group spec string
#   gspec    bytes    ASCII group spec, e.g. "c8"
#   c0, c1   u32, u32
#   extra    u32      patch width for local; 0 otherwise
#   u        c1 f64
#   w        filters in index order (j, c, k); frequency stores each value
#            as two f64 (re, im)
#
# Weight-share models serialize only with the circulant basis (the basis is
# reconstructed from the group on load); arbitrary bases have no flat layout.

_MAGIC = b"EQB1"
_VARIANT_TAGS = {name: i for i, name in enumerate(VARIANTS)}
_POOLING_TAGS = {name: i for i, name in enumerate(POOLINGS)}
_MAP_NAMES = sorted(SCALAR_MAPS)


def save_model(spec: ModelSpec, p: Params, path) -> None:
    if spec.variant == "weightshare" and not spec.basis.circulant:
        raise ValueError("only circulant-basis weight-share models have a "
                         "flat serialization")
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<BBBB", _VARIANT_TAGS[spec.variant],
                          _POOLING_TAGS[spec.pooling.kind],
                          _MAP_NAMES.index(spec.pooling.rho),
                          _MAP_NAMES.index(spec.pooling.phi)))
    gspec = spec.group.name.encode("ascii")
    buf.write(struct.pack("<H", len(gspec)))
    buf.write(gspec)
    extra = spec.patches.width if spec.variant == "local" else 0
    buf.write(struct.pack("<III", spec.c0, spec.c1, extra))
    buf.write(p.u.astype("<f8").tobytes())
    if spec.variant == "frequency":
        flat = np.ascontiguousarray(p.w, dtype=np.complex128).view(np.float64)
        buf.write(flat.astype("<f8").tobytes())
    else:
        buf.write(p.w.astype("<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_model(path) -> tuple[ModelSpec, Params]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _MAGIC:
        raise ValueError(f"not a model file: bad magic {raw[:4]!r}")
    variant_tag, pool_tag, rho_tag, phi_tag = struct.unpack_from("<BBBB", raw, 4)
    glen, = struct.unpack_from("<H", raw, 8)
    gspec = raw[10:10 + glen].decode("ascii")
    off = 10 + glen
    c0, c1, extra = struct.unpack_from("<III", raw, off)
    off += 12
    group = parse_group_spec(gspec)
    pooling = Pooling(kind=POOLINGS[pool_tag], rho=_MAP_NAMES[rho_tag],
                      phi=_MAP_NAMES[phi_tag])
    variant = VARIANTS[variant_tag]
    basis = make_circulant_basis(group) if variant == "weightshare" else None
    patches = make_contiguous_patches(group, extra) if variant == "local" else None
    spec = ModelSpec(variant=variant, group=group, c0=c0, c1=c1,
                     pooling=pooling, basis=basis, patches=patches)
    u = np.frombuffer(raw, dtype="<f8", count=c1, offset=off).astype(np.float64)
    off += 8 * c1
    n_coeff = c1 * c0 * spec.filter_len
    if variant == "frequency":
        flat = np.frombuffer(raw, dtype="<f8", count=2 * n_coeff, offset=off)
        if flat.size != 2 * n_coeff:
            raise ValueError("model file truncated")
        w = flat.astype(np.float64).view(np.complex128).reshape(spec.filter_shape())
    else:
        flat = np.frombuffer(raw, dtype="<f8", count=n_coeff, offset=off)
        if flat.size != n_coeff:
            raise ValueError("model file truncated")
        w = flat.astype(np.float64).reshape(spec.filter_shape())
    return spec, Params(u=u, w=w.copy())

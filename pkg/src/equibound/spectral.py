"""Harmonic analysis on finite abelian groups.

The Fourier basis is the unitary matrix of normalized characters,
``F[k, p] = chi_k(p) / sqrt(|G|)``; for C_N this is the standard unitary DFT
``F[k, p] = exp(-2i pi k p / N) / sqrt(N)``.

Because the convolution operator of this library is a cross-correlation, the
eigenvalues of its circulant matrix carry a conjugate relative to the plain
transform: ``circulant(w) = F* diag(s) F`` with ``s = sqrt(|G|) conj(F) w``.
The relation was pinned by testing the reconstruction identity against the
brute-force circulant on C_4.  It satisfies the group-size Parseval identity
``sum |s|^2 = |G| ||w||^2`` and the product rule
``fourier(w * x) = s . fourier(x)``.

Transforms are dense O(|G|^2); group orders here stay <= 64.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .groups import FiniteGroup

__all__ = [
    "FourierBasis",
    "SpectralFilter",
    "fourier_basis",
    "fourier",
    "inverse_fourier",
    "circulant_from_filter",
    "diagonalize_circulant",
    "filter_from_spectrum",
    "hermitian_project",
    "is_hermitian",
    "support_size",
    "uncertainty_check",
    "UncertaintyReport",
    "DEFAULT_SUPPORT_TOL",
]

DEFAULT_SUPPORT_TOL = 1e-9


class NonAbelianError(ValueError):
    """Raised when an abelian-only operation meets a non-abelian group."""


@dataclass(frozen=True)
class FourierBasis:
    """Unitary character basis of an abelian group.

    ``F`` has one row per frequency; ``conj_pair[k]`` is the frequency whose
    character is the complex conjugate of row k (so real filters have
    spectra with ``s[conj_pair] == conj(s)``).
    """

    group: FiniteGroup
    F: np.ndarray
    conj_pair: np.ndarray

    def __post_init__(self):
        self.F.setflags(write=False)
        self.conj_pair.setflags(write=False)


@dataclass(frozen=True)
class SpectralFilter:
    """A filter parametrized by its Fourier coefficients."""

    group: FiniteGroup
    coeffs: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if coeffs.shape != (self.group.order,):
            raise ValueError(f"expected {self.group.order} coefficients, "
                             f"got shape {coeffs.shape}")
        object.__setattr__(self, "coeffs", coeffs)
        if self.hermitian:
            basis = fourier_basis(self.group)
            if not is_hermitian(basis, coeffs):
                raise ValueError("coefficients violate the conjugate-symmetry "
                                 "required for a real spatial filter")


def _character_table(group: FiniteGroup) -> np.ndarray:
    """Unnormalized character values chi_k(p) for the supported abelian kinds."""
    tag = group.kind[0]
    if tag == "cyclic":
        n = group.order
        k = np.arange(n)
        return np.exp(-2j * np.pi * np.outer(k, k) / n)
    if tag == "product":
        g1, g2 = group.kind[1]
        return np.kron(_character_table(g1), _character_table(g2))
    if tag == "dihedral":
        n = group.kind[1]
        if n == 1:
            # D_1 = {e, s} is C_2 under s <-> 1.
            return _character_table_cyclic2()
        if n == 2:
            # Klein four-group, elements ordered [e, r, s, sr].
            chi = np.ones((4, 4), dtype=np.complex128)
            for k1 in range(2):
                for k2 in range(2):
                    row = 2 * k1 + k2
                    chi[row, 1] = (-1.0) ** k1          # r
                    chi[row, 2] = (-1.0) ** k2          # s
                    chi[row, 3] = (-1.0) ** (k1 + k2)   # s r
            return chi
    raise NonAbelianError(
        f"no character table for {group.name}: Fourier analysis here is "
        "abelian-only (cyclic, dihedral n<=2, and their products)")


def _character_table_cyclic2() -> np.ndarray:
    return np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128)


@functools.lru_cache(maxsize=64)
def fourier_basis(group: FiniteGroup) -> FourierBasis:
    """Build the unitary character basis; rejects non-abelian groups."""
    if not group.abelian:
        raise NonAbelianError(
            f"{group.name} is not abelian: Fourier analysis here is abelian-only")
    chi = _character_table(group)
    F = chi / np.sqrt(group.order)
    # Pair each frequency with the one carrying the conjugate character.
    conj_pair = np.empty(group.order, dtype=np.int64)
    target = np.conj(chi)
    for k in range(group.order):
        hits = np.nonzero(np.all(np.abs(chi - target[k]) < 1e-9, axis=1))[0]
        if hits.size != 1:
            raise ValueError(f"character table of {group.name} is malformed")
        conj_pair[k] = hits[0]
    return FourierBasis(group=group, F=F, conj_pair=conj_pair)


def fourier(basis: FourierBasis, x: np.ndarray) -> np.ndarray:
    """Forward transform ``x_hat = F x``; unitary, so norms are preserved."""
    x = np.asarray(x)
    if x.shape[0] != basis.group.order:
        raise ValueError(f"expected length {basis.group.order}, got {x.shape}")
    return basis.F @ x


def inverse_fourier(basis: FourierBasis, xh: np.ndarray) -> np.ndarray:
    """Inverse transform ``x = F* x_hat``."""
    xh = np.asarray(xh)
    if xh.shape[0] != basis.group.order:
        raise ValueError(f"expected length {basis.group.order}, got {xh.shape}")
    return basis.F.conj().T @ xh


def circulant_from_filter(group: FiniteGroup, w: np.ndarray) -> np.ndarray:
    """The matrix W with ``W x = group_convolve(w, x)``: ``W[g, h] = w(g^-1 h)``."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (group.order,):
        raise ValueError(f"filter must have shape ({group.order},), got {w.shape}")
    return w[group.cayley[group.inv]]


def diagonalize_circulant(basis: FourierBasis, w: np.ndarray) -> np.ndarray:
    """Eigenvalues s of the circulant: ``F* diag(s) F = circulant_from_filter(w)``.

    ``s = sqrt(|G|) conj(F) w``; see the module docstring for why the
    conjugate appears and for the |G| Parseval factor.
    """
    w = np.asarray(w)
    if w.shape[0] != basis.group.order:
        raise ValueError(f"expected length {basis.group.order}, got {w.shape}")
    return np.sqrt(basis.group.order) * (np.conj(basis.F) @ w)


def filter_from_spectrum(basis: FourierBasis, spectrum: np.ndarray) -> np.ndarray:
    """Inverse of `diagonalize_circulant`; returns the real spatial filter."""
    w = basis.F.T @ (np.asarray(spectrum) / np.sqrt(basis.group.order))
    residue = float(np.abs(w.imag).max()) if w.size else 0.0
    if residue > 1e-9:
        raise ValueError(f"spectrum is not conjugate-symmetric: imaginary "
                         f"residue {residue:.3e} in the spatial filter")
    return w.real


def hermitian_project(basis: FourierBasis, spectrum: np.ndarray) -> np.ndarray:
    """Nearest conjugate-symmetric spectrum: ``(s + conj(s[pair])) / 2``."""
    s = np.asarray(spectrum, dtype=np.complex128)
    return 0.5 * (s + np.conj(s[..., basis.conj_pair]))


def is_hermitian(basis: FourierBasis, spectrum: np.ndarray, tol: float = 1e-9) -> bool:
    s = np.asarray(spectrum, dtype=np.complex128)
    return bool(np.abs(s - np.conj(s[..., basis.conj_pair])).max(initial=0.0) <= tol)


def support_size(v: np.ndarray, tol: float = DEFAULT_SUPPORT_TOL) -> int:
    """Number of entries with ``|v_i| > tol``."""
    if tol < 0:
        raise ValueError(f"tolerance must be >= 0, got {tol}")
    return int(np.count_nonzero(np.abs(np.asarray(v)) > tol))


@dataclass(frozen=True)
class UncertaintyReport:
    spatial: int
    spectral: int
    product: int
    holds: bool


def uncertainty_check(basis: FourierBasis, w: np.ndarray,
                      tol: float = DEFAULT_SUPPORT_TOL) -> UncertaintyReport:
    """Check ``|supp(w)| * |supp(w_hat)| >= |G|``.

    True for every nonzero signal on a finite abelian group; a False result
    signals a numerical-tolerance bug, not new mathematics.
    """
    spatial = support_size(w, tol)
    if spatial == 0:
        raise ValueError("uncertainty principle requires a nonzero filter "
                         f"(no entry above tol={tol})")
    spectral = support_size(fourier(basis, w), tol)
    product = spatial * spectral
    return UncertaintyReport(spatial=spatial, spectral=spectral, product=product,
                             holds=product >= basis.group.order)

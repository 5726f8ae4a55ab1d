"""Datasets: synthetic group-invariant generation, CSV dump/load, raw IDX
ingestion, and subgroup re-blocking of channels.

The synthetic generator draws one Gaussian template per (class, slot), then
emits samples ``translate(g, template + noise)`` with g uniform over the
group when augmentation is on.  By construction the augmented distribution
is invariant under the group action, and the two classes are balanced.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .groups import FiniteGroup, GroupSignal, make_cyclic, translate
from .seeding import (STREAM_LIFT, STREAM_TEMPLATES, STREAM_TEST_DATA,
                      STREAM_TRAIN_DATA, rng_from)

__all__ = [
    "Dataset",
    "SyntheticTaskSpec",
    "gen_synthetic",
    "dump_csv",
    "load_csv",
    "load_idx",
    "binarize_digit_labels",
    "lift_to_group",
    "block_to_subgroup",
    "IdxFormatError",
    "IdxTruncatedError",
    "IdxPairingError",
]


class IdxFormatError(ValueError):
    """Wrong magic number or malformed IDX header."""


class IdxTruncatedError(ValueError):
    """IDX payload shorter than the header promises."""


class IdxPairingError(ValueError):
    """Image and label files disagree on the sample count."""


@dataclass(frozen=True)
class Dataset:
    """Labeled signals over a group: X (m, |G|, c0), y in {-1, +1}^m."""

    group: FiniteGroup
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if X.ndim != 3 or X.shape[1] != self.group.order:
            raise ValueError(f"X must have shape (m, {self.group.order}, c0), "
                             f"got {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValueError(f"{X.shape[0]} inputs vs {y.shape} labels")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        X.setflags(write=False)
        y.setflags(write=False)

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def c0(self) -> int:
        return self.X.shape[2]

    @cached_property
    def b_x(self) -> float:
        """max_i ||x_i|| (immutable data, so computed once)."""
        return float(np.linalg.norm(self.X.reshape(len(self), -1), axis=1).max())

    def signals(self):
        for i in range(len(self)):
            yield GroupSignal(self.group, self.X[i]), float(self.y[i])


@dataclass(frozen=True)
class SyntheticTaskSpec:
    group: FiniteGroup
    c0: int
    templates_per_class: int = 1
    noise_sigma: float = 0.0
    m_train: int = 32
    m_test: int = 32
    seed: int = 0
    augment: bool = True

    def __post_init__(self):
        if self.templates_per_class < 1:
            raise ValueError("need at least one template per class")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.m_train < 1 or self.m_test < 1:
            raise ValueError("m_train and m_test must be >= 1")


def _sample_split(task: SyntheticTaskSpec, templates: np.ndarray, m: int,
                  rng: np.random.Generator) -> Dataset:
    n, c0 = task.group.order, task.c0
    X = np.empty((m, n, c0))
    y = np.empty(m)
    for i in range(m):
        cls = i % 2                       # balanced by construction
        slot = rng.integers(0, task.templates_per_class)
        x = templates[cls, slot].copy()
        if task.noise_sigma > 0:
            x = x + rng.normal(scale=task.noise_sigma, size=(n, c0))
        g = int(rng.integers(0, n)) if task.augment else 0
        X[i] = translate(task.group, g, x)
        y[i] = 1.0 if cls == 0 else -1.0
    return Dataset(group=task.group, X=X, y=y)


def gen_synthetic(task: SyntheticTaskSpec) -> tuple[Dataset, Dataset]:
    """Deterministic (train, test) draw; the splits use disjoint seed streams."""
    tmpl_rng = rng_from(task.seed, STREAM_TEMPLATES)
    templates = tmpl_rng.normal(
        size=(2, task.templates_per_class, task.group.order, task.c0))
    train = _sample_split(task, templates, task.m_train,
                          rng_from(task.seed, STREAM_TRAIN_DATA))
    test = _sample_split(task, templates, task.m_test,
                         rng_from(task.seed, STREAM_TEST_DATA))
    return train, test


def dump_csv(dataset: Dataset, path) -> None:
    """Row format: ``label,v_0,...,v_(|G|*c0-1)`` with values row-major by
    position then channel; floats via repr, so dumps are byte-stable."""
    with open(path, "w", encoding="ascii") as fh:
        for i in range(len(dataset)):
            flat = dataset.X[i].ravel()
            cells = [repr(float(dataset.y[i]))]
            cells.extend(repr(float(v)) for v in flat)
            fh.write(",".join(cells) + "\n")


def load_csv(path, group: FiniteGroup, c0: int) -> Dataset:
    rows = []
    labels = []
    expected = group.order * c0
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = line.split(",")
            if len(cells) != expected + 1:
                raise ValueError(f"{path}:{lineno}: expected {expected + 1} "
                                 f"cells, got {len(cells)}")
            labels.append(float(cells[0]))
            rows.append([float(c) for c in cells[1:]])
    X = np.asarray(rows).reshape(len(rows), group.order, c0)
    return Dataset(group=group, X=X, y=np.asarray(labels))


_IDX_IMAGE_MAGIC = 0x00000803
_IDX_LABEL_MAGIC = 0x00000801


def _read_idx_images(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16:
        raise IdxTruncatedError(f"{path}: header needs 16 bytes, file has {len(raw)}")
    magic, count, rows, cols = struct.unpack_from(">iiii", raw, 0)
    if magic != _IDX_IMAGE_MAGIC:
        raise IdxFormatError(
            f"{path}: bad image magic {raw[:4].hex()} "
            f"(expected {_IDX_IMAGE_MAGIC:08x})")
    need = 16 + count * rows * cols
    if len(raw) < need:
        raise IdxTruncatedError(f"{path}: payload needs {need} bytes, "
                                f"file has {len(raw)}")
    pixels = np.frombuffer(raw, dtype=np.uint8, count=count * rows * cols,
                           offset=16)
    return pixels.reshape(count, rows * cols).astype(np.float64) / 255.0


def _read_idx_labels(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise IdxTruncatedError(f"{path}: header needs 8 bytes, file has {len(raw)}")
    magic, count = struct.unpack_from(">ii", raw, 0)
    if magic != _IDX_LABEL_MAGIC:
        raise IdxFormatError(
            f"{path}: bad label magic {raw[:4].hex()} "
            f"(expected {_IDX_LABEL_MAGIC:08x})")
    if len(raw) < 8 + count:
        raise IdxTruncatedError(f"{path}: payload needs {8 + count} bytes, "
                                f"file has {len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=8).copy()


def load_idx(images_path, labels_path) -> tuple[np.ndarray, np.ndarray]:
    """Raw IDX ingestion: images rescaled to [0, 1] as (m, d), labels (m,)."""
    images = _read_idx_images(images_path)
    labels = _read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise IdxPairingError(f"{images.shape[0]} images vs "
                              f"{labels.shape[0]} labels")
    return images, labels


def binarize_digit_labels(labels: np.ndarray, threshold: int = 4):
    """Digits below the threshold map to +1, the rest to -1.

    Returns (labels, positive_fraction); the observed balance is reported
    rather than enforced.
    """
    labels = np.asarray(labels)
    y = np.where(labels < threshold, 1.0, -1.0)
    return y, float(np.mean(y > 0))


def lift_to_group(raw: np.ndarray, group: FiniteGroup, c0: int,
                  seed: int = 0):
    """Project raw vectors through a fixed seeded random linear map.

    The map is (|G| * c0) x d with N(0, 1/d) entries, deterministic in the
    seed.  It is plain plumbing for external data: it does NOT intertwine
    any raw-space symmetry with the group action.
    """
    raw = np.asarray(raw, dtype=np.float64)
    single = raw.ndim == 1
    if single:
        raw = raw[None]
    d = raw.shape[1]
    proj = rng_from(seed, STREAM_LIFT).normal(scale=1.0 / np.sqrt(d),
                                              size=(group.order * c0, d))
    lifted = (raw @ proj.T).reshape(-1, group.order, c0)
    if single:
        return GroupSignal(group, lifted[0])
    return lifted


def block_to_subgroup(dataset: Dataset, k: int) -> Dataset:
    """Reinterpret signals over C_n as (c0 * n/k)-channel signals over C_k.

    The order-k subgroup of C_n is the multiples of n/k; cosets are indexed
    by their smallest representative (0 .. n/k - 1) and new channels are
    ordered (old channel, coset).  Translation by a subgroup element then
    agrees with the regular C_k action on the blocked signal, which is what
    makes models over subgroups comparable at a fixed total width.
    """
    group = dataset.group
    if group.kind[0] != "cyclic":
        raise ValueError(f"subgroup blocking needs a cyclic group, got {group.name}")
    n = group.order
    if k < 1 or n % k != 0:
        raise ValueError(f"subgroup order {k} does not divide |G| = {n}")
    step = n // k
    m, c0 = len(dataset), dataset.c0
    # X'[s, h, c*step + t] = X[s, h*step + t, c]
    reshaped = dataset.X.reshape(m, k, step, c0)          # [s, h, t, c]
    blocked = reshaped.transpose(0, 1, 3, 2).reshape(m, k, c0 * step)
    return Dataset(group=make_cyclic(k), X=blocked, y=dataset.y.copy())

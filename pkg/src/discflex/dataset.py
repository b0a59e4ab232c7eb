"""Design points, response vectors, datasets, sampling and persistence.

Everything here is immutable after construction and every operation is a pure
function of its inputs plus an explicit seed, so all of it is safe to use
concurrently.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Literal, Sequence

import numpy as np
from scipy.spatial import cKDTree

DESIGN_COLUMNS = ("length_mm", "width_mm", "thickness_mm")
RESPONSE_COLUMNS = ("mass_g", "stress_mpa", "buckling_n")
CSV_HEADER = ",".join(DESIGN_COLUMNS + RESPONSE_COLUMNS)

# Two design points closer than this (per coordinate, mm) count as duplicates.
DUPLICATE_TOL_MM = 1e-9

SamplingScheme = Literal["grid", "latin_hypercube"]


class DesignTag(enum.Enum):
    """Which of the two disc variants a dataset or model refers to."""

    A = "A"
    B = "B"


@dataclass(frozen=True)
class DesignPoint:
    """One candidate disc geometry: link length, width, thickness in mm."""

    length_mm: float
    width_mm: float
    thickness_mm: float

    def __post_init__(self) -> None:
        for name, value in zip(DESIGN_COLUMNS, self.as_tuple()):
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be finite and > 0, got {value}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.length_mm, self.width_mm, self.thickness_mm)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float)


@dataclass(frozen=True)
class ResponseVector:
    """The three responses of interest: mass (g), stress (MPa), buckling load (N).

    Only finiteness is enforced; surrogate extrapolations may produce
    non-physical (negative) mass or buckling values and remain representable.
    """

    mass_g: float
    stress_mpa: float
    buckling_n: float

    def __post_init__(self) -> None:
        for name, value in zip(RESPONSE_COLUMNS, self.as_tuple()):
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.mass_g, self.stress_mpa, self.buckling_n)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float)

    def is_physical(self) -> bool:
        return self.mass_g > 0.0 and self.buckling_n > 0.0


@dataclass(frozen=True)
class Bounds:
    """Axis-aligned box of admissible design points, low < high componentwise."""

    low: DesignPoint
    high: DesignPoint

    def __post_init__(self) -> None:
        for name, lo, hi in zip(DESIGN_COLUMNS, self.low.as_tuple(), self.high.as_tuple()):
            if not lo < hi:
                raise ValueError(f"degenerate bounds on {name}: low={lo}, high={hi}")

    def low_array(self) -> np.ndarray:
        return self.low.as_array()

    def high_array(self) -> np.ndarray:
        return self.high.as_array()

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of rows of ``points`` (n, 3) lying inside the box."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((pts >= self.low_array()) & (pts <= self.high_array()), axis=1)


# The exploration box used throughout the disc case study.
DESIGN_BOUNDS = Bounds(DesignPoint(24.0, 3.0, 0.3), DesignPoint(40.0, 9.0, 0.9))


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Dataset:
    """Paired design points and measured/synthesized responses for one variant.

    ``designs`` is (n, 3) ordered as length, width, thickness; ``responses``
    is (n, 3) ordered as mass, stress, buckling.
    """

    designs: np.ndarray
    responses: np.ndarray
    design_tag: DesignTag

    def __post_init__(self) -> None:
        designs = _readonly(self.designs)
        responses = _readonly(self.responses)
        object.__setattr__(self, "designs", designs)
        object.__setattr__(self, "responses", responses)
        if designs.ndim != 2 or designs.shape[1] != 3:
            raise ValueError(f"designs must be (n, 3), got {designs.shape}")
        if responses.shape != designs.shape[:1] + (3,):
            raise ValueError(f"responses must be ({designs.shape[0]}, 3), got {responses.shape}")
        if designs.shape[0] == 0:
            raise ValueError("dataset must be non-empty")
        if not np.all(np.isfinite(designs)) or not np.all(designs > 0.0):
            raise ValueError("all design coordinates must be finite and > 0")
        if not np.all(np.isfinite(responses)):
            raise ValueError("all responses must be finite")
        pairs = cKDTree(designs).query_pairs(r=DUPLICATE_TOL_MM, p=np.inf)
        if pairs:
            i, j = sorted(next(iter(pairs)))
            raise ValueError(f"duplicate design points at rows {i} and {j} (within {DUPLICATE_TOL_MM} mm)")

    def __len__(self) -> int:
        return self.designs.shape[0]

    def rows(self) -> Iterator[tuple[DesignPoint, ResponseVector]]:
        for x, y in zip(self.designs, self.responses):
            yield DesignPoint(*x), ResponseVector(*y)

    def response_column(self, name: str) -> np.ndarray:
        return self.responses[:, RESPONSE_COLUMNS.index(name)]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.designs[idx], self.responses[idx], self.design_tag)


@dataclass(frozen=True)
class NormalizationStats:
    """Per-column mean and standard deviation used to (de)normalize values.

    The standard deviation uses the population convention (denominator n);
    the inverse operation below is consistent with it.
    """

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        mean = _readonly(np.atleast_1d(self.mean))
        std = _readonly(np.atleast_1d(self.std))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)
        if mean.shape != std.shape:
            raise ValueError("mean and std must have the same shape")
        if not np.all(std > 0.0):
            raise ValueError(f"stds must be > 0, got {std}")

    @classmethod
    def from_columns(cls, values: np.ndarray) -> "NormalizationStats":
        values = np.asarray(values, dtype=float)
        mean = values.mean(axis=0)
        std = values.std(axis=0)  # population convention, ddof=0
        if np.any(std == 0.0):
            col = int(np.flatnonzero(std == 0.0)[0])
            raise ValueError(f"column {col} has zero variance; drop or perturb it before normalizing")
        return cls(mean, std)

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.mean) / self.std

    def invert(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=float) * self.std + self.mean


def sample_designs(
    bounds: Bounds, n: int, scheme: SamplingScheme = "latin_hypercube", seed: int = 0
) -> np.ndarray:
    """Draw ``n`` design points from the box, deterministically per seed.

    ``grid`` places points on a full k x k x k lattice and requires n = k^3;
    ``latin_hypercube`` stratifies each axis into n bins and places one
    uniform draw per bin.  Returns an (n, 3) array.
    """
    if n < 1:
        raise ValueError(f"need n >= 1 design points, got {n}")
    low = bounds.low_array()
    high = bounds.high_array()
    span = high - low
    if scheme == "grid":
        levels = round(n ** (1.0 / 3.0))
        if levels**3 != n or levels < 2:
            raise ValueError(f"grid sampling requires n = k^3 with k >= 2, got n={n}")
        # linspace against the true endpoint keeps corners exactly on the bounds
        axes = [np.linspace(low[j], high[j], levels) for j in range(3)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)
    if scheme == "latin_hypercube":
        rng = np.random.default_rng(seed)
        points = np.empty((n, 3))
        for j in range(3):
            bins = rng.permutation(n)
            offsets = rng.random(n)
            points[:, j] = low[j] + (bins + offsets) / n * span[j]
        return points
    raise ValueError(f"unknown sampling scheme {scheme!r}")


def normalize_responses(data: Dataset) -> tuple[Dataset, NormalizationStats]:
    """Normalize every response column to zero mean and unit standard deviation."""
    if len(data) < 2:
        raise ValueError(f"need at least 2 rows to normalize, got {len(data)}")
    stats = NormalizationStats.from_columns(data.responses)
    return Dataset(data.designs, stats.apply(data.responses), data.design_tag), stats


def denormalize(values: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    """Map normalized response values back to original units."""
    return stats.invert(values)


def split(data: Dataset, n_train: int, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Random disjoint train/test partition, deterministic per seed."""
    n = len(data)
    if not 1 <= n_train < n:
        raise ValueError(f"n_train must be in [1, {n - 1}], got {n_train}")
    perm = np.random.default_rng(seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return data.subset(train_idx), data.subset(test_idx)


def write_csv(data: Dataset, path: str | Path) -> None:
    """Write a dataset to CSV with shortest round-trip decimal encoding."""
    lines = [CSV_HEADER]
    for x, y in zip(data.designs, data.responses):
        lines.append(",".join(repr(float(v)) for v in (*x, *y)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_csv(path: str | Path, *, design_tag: DesignTag) -> Dataset:
    """Read a dataset written by :func:`write_csv`.

    Malformed headers, wrong-arity rows and non-numeric cells are reported
    with their line number.
    """
    text = Path(path).read_text(encoding="ascii")
    lines = text.splitlines()
    if not lines:
        raise ValueError(f"{path}: line 1: empty file, expected header {CSV_HEADER!r}")
    if lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: line 1: malformed header {lines[0]!r}, expected {CSV_HEADER!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != 6:
            raise ValueError(f"{path}: line {lineno}: expected 6 cells, got {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            bad = next(c for c in cells if not _is_float(c))
            raise ValueError(f"{path}: line {lineno}: non-numeric cell {bad!r}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    arr = np.array(rows, dtype=float)
    return Dataset(arr[:, :3], arr[:, 3:], design_tag)


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False

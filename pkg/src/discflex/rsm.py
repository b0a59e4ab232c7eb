"""Polynomial response-surface surrogates over (length, width, thickness).

A model is a linear combination of monomials l^a * b^c * t^e.  The module
ships the fitted case-study models for both disc variants, fits coefficients
to data by least squares over a caller-declared monomial basis, and scores
models with the coefficient of determination.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .dataset import Dataset, DesignPoint, DesignTag, RESPONSE_COLUMNS

ExponentTriple = tuple[int, int, int]


@dataclass(frozen=True)
class MonomialBasis:
    """Distinct monomial terms, each an exponent triple (exp_l, exp_b, exp_t)."""

    terms: tuple[ExponentTriple, ...]

    def __post_init__(self) -> None:
        terms = tuple(tuple(int(e) for e in term) for term in self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise ValueError("basis needs at least one term")
        if len(set(terms)) != len(terms):
            raise ValueError(f"basis terms must be distinct, got {terms}")
        if any(len(t) != 3 or min(t) < 0 for t in terms):
            raise ValueError(f"each term must be three non-negative exponents, got {terms}")

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def includes_constant(self) -> bool:
        return (0, 0, 0) in self.terms

    def design_matrix(self, points: np.ndarray) -> np.ndarray:
        """Monomial values for each row of ``points`` (n, 3); shape (n, n_terms)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        columns = [
            pts[:, 0] ** a * pts[:, 1] ** b * pts[:, 2] ** c for (a, b, c) in self.terms
        ]
        return np.stack(columns, axis=1)


@dataclass(frozen=True)
class RsmModel:
    """A fitted polynomial surrogate for one response."""

    basis: MonomialBasis
    coefficients: tuple[float, ...]
    response_name: str
    r_squared: float | None = None

    def __post_init__(self) -> None:
        coeffs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if len(coeffs) != len(self.basis):
            raise ValueError(
                f"{len(coeffs)} coefficients for a {len(self.basis)}-term basis"
            )
        if self.r_squared is not None and self.r_squared > 1.0:
            raise ValueError(f"r_squared cannot exceed 1, got {self.r_squared}")

    def to_record(self) -> dict:
        return {
            "response_name": self.response_name,
            "terms": [list(t) for t in self.basis.terms],
            "coefficients": list(self.coefficients),
            "r_squared": self.r_squared,
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "RsmModel":
        return cls(
            basis=MonomialBasis(tuple(tuple(t) for t in record["terms"])),
            coefficients=tuple(record["coefficients"]),
            response_name=record["response_name"],
            r_squared=record["r_squared"],
        )


def evaluate(model: RsmModel, x: DesignPoint) -> float:
    """Model value at one design point."""
    return float(evaluate_batch(model, x.as_array()[None, :])[0])


def evaluate_batch(model: RsmModel, points: np.ndarray) -> np.ndarray:
    """Model values for all rows of ``points`` (n, 3) at once."""
    return model.basis.design_matrix(points) @ np.array(model.coefficients)


# Case-study surrogate coefficients for the two disc variants (mass in g,
# stress in MPa, buckling load in N, over l/b/t in mm).
_VARIANT_MODELS: dict[DesignTag, dict[str, tuple[tuple[ExponentTriple, ...], tuple[float, ...]]]] = {
    DesignTag.A: {
        "mass_g": (((1, 1, 1), (0, 1, 1), (0, 0, 0)), (0.00199, -0.00371, 0.00369)),
        "stress_mpa": (
            ((0, 0, 0), (0, 0, 2), (1, 1, 0), (1, 0, 2)),
            (263.3, 1065.3, -0.47, -25.1),
        ),
        "buckling_n": (((2, 1, 3), (0, 1, 3)), (-0.995, 2075.19)),
    },
    DesignTag.B: {
        "mass_g": (
            ((1, 1, 1), (1, 0, 1), (0, 0, 1), (0, 0, 0)),
            (0.00153, 0.01613, -0.262, 0.00044),
        ),
        "stress_mpa": (
            ((0, 0, 0), (0, 0, 2), (1, 0, 0), (1, 0, 2)),
            (292.9, 769.3, -5.17, -17.52),
        ),
        "buckling_n": (((2, 1, 3), (0, 1, 3)), (-1.47792, 3078.22)),
    },
}


def reference_models(design: DesignTag) -> dict[str, RsmModel]:
    """The shipped case-study models keyed by response name.

    These serve both as ready-to-optimize surrogates and as the oracle for
    synthesizing datasets.
    """
    out = {}
    for name in RESPONSE_COLUMNS:
        terms, coeffs = _VARIANT_MODELS[design][name]
        out[name] = RsmModel(MonomialBasis(terms), coeffs, response_name=name)
    return out


def reference_basis(design: DesignTag, response_name: str) -> MonomialBasis:
    """The monomial basis of one shipped case-study model."""
    terms, _ = _VARIANT_MODELS[design][response_name]
    return MonomialBasis(terms)


def fit(basis: MonomialBasis, data: Dataset, response_name: str) -> RsmModel:
    """Least-squares fit of the basis to one response column.

    Uses an orthogonal decomposition (SVD-backed lstsq) so rank deficiency is
    detected instead of silently amplified through normal equations.
    """
    if response_name not in RESPONSE_COLUMNS:
        raise ValueError(f"unknown response {response_name!r}, expected one of {RESPONSE_COLUMNS}")
    if len(data) < len(basis):
        raise ValueError(f"{len(data)} rows cannot determine {len(basis)} coefficients")
    phi = basis.design_matrix(data.designs)
    y = data.response_column(response_name)
    coeffs, _, rank, _ = np.linalg.lstsq(phi, y, rcond=None)
    if rank < len(basis):
        raise ValueError(
            f"design matrix is rank-deficient (rank {rank} < {len(basis)}); "
            "basis terms are collinear on this data"
        )
    model = RsmModel(basis, tuple(coeffs), response_name)
    return RsmModel(basis, tuple(coeffs), response_name, r_squared=r_squared(model, data))


def r_squared(model: RsmModel, data: Dataset) -> float:
    """Coefficient of determination of the model on a dataset."""
    y = data.response_column(model.response_name)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError(f"response {model.response_name!r} has zero variance")
    pred = evaluate_batch(model, data.designs)
    ss_res = float(np.sum((y - pred) ** 2))
    return 1.0 - ss_res / ss_tot

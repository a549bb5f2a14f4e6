"""Strut materials, rectangular cross-sections, elasticity matrices and local frames."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Material",
    "CrossSection",
    "LocalFrame",
    "HMatrix",
    "frame_for",
    "h_matrix",
    "torsion_constant",
]


def torsion_constant(width: float, thickness: float, method: str = "series", terms: int = 200) -> float:
    """Saint-Venant torsion constant of a solid ``width x thickness`` rectangle.

    Parameters
    ----------
    width, thickness : float
        Side lengths in meters; the order does not matter.
    method : {"series", "roark"}
        ``"series"`` sums the exact Saint-Venant series, ``"roark"`` uses the
        closed-form approximation ``a b^3 (1/3 - 0.21 (b/a) (1 - b^4 / (12 a^4)))``.
    terms : int
        Number of odd terms kept in the series.
    """
    a, b = max(width, thickness), min(width, thickness)
    if method == "roark":
        return a * b**3 * (1.0 / 3.0 - 0.21 * (b / a) * (1.0 - b**4 / (12.0 * a**4)))
    if method != "series":
        raise ValueError(f"unknown torsion method {method!r}")
    n = np.arange(1, 2 * terms, 2, dtype=float)
    tail = np.sum(np.tanh(n * np.pi * a / (2.0 * b)) / n**5)
    return a * b**3 / 3.0 * (1.0 - 192.0 / np.pi**5 * (b / a) * tail)


@dataclass(frozen=True)
class Material:
    """Isotropic linear elastic material (SI units)."""

    young_modulus: float
    shear_modulus: float
    density: float = 0.0

    def __post_init__(self):
        if not self.young_modulus > 0 or not self.shear_modulus > 0:
            raise ValueError("moduli must be positive")
        if self.density < 0:
            raise ValueError("density must be non-negative")

    @classmethod
    def from_poisson(cls, young_modulus: float, poisson_ratio: float, density: float = 0.0) -> "Material":
        return cls(young_modulus, young_modulus / (2.0 * (1.0 + poisson_ratio)), density)

    def to_dict(self) -> dict:
        return {"young_modulus": self.young_modulus, "shear_modulus": self.shear_modulus,
                "density": self.density}

    @classmethod
    def from_dict(cls, data: dict) -> "Material":
        if "shear_modulus" in data:
            return cls(data["young_modulus"], data["shear_modulus"], data.get("density", 0.0))
        return cls.from_poisson(data["young_modulus"], data["poisson_ratio"], data.get("density", 0.0))


@dataclass(frozen=True)
class CrossSection:
    """Rectangular cross-section of width ``w`` and thickness ``t``.

    ``torsion`` overrides the computed torsion constant when given.
    """

    width: float
    thickness: float
    torsion: float | None = None
    torsion_method: str = "series"

    def __post_init__(self):
        if not self.width > 0 or not self.thickness > 0:
            raise ValueError("section dimensions must be positive")
        if self.torsion is not None and not self.torsion > 0:
            raise ValueError("torsion constant must be positive")

    @property
    def area(self) -> float:
        return self.width * self.thickness

    @property
    def inertia_n(self) -> float:
        return self.width * self.thickness**3 / 12.0

    @property
    def inertia_b(self) -> float:
        return self.thickness * self.width**3 / 12.0

    @property
    def torsion_constant(self) -> float:
        if self.torsion is not None:
            return self.torsion
        return torsion_constant(self.width, self.thickness, self.torsion_method)

    @classmethod
    def square(cls, side: float, **kwargs) -> "CrossSection":
        return cls(side, side, **kwargs)

    def to_dict(self) -> dict:
        out = {"width": self.width, "thickness": self.thickness}
        if self.torsion is not None:
            out["torsion"] = self.torsion
        if self.torsion_method != "series":
            out["torsion_method"] = self.torsion_method
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CrossSection":
        return cls(data["width"], data["thickness"], data.get("torsion"),
                   data.get("torsion_method", "series"))


@dataclass(frozen=True)
class LocalFrame:
    """Orthonormal frame ``Q = [t, n, b]`` attached to a straight strut."""

    q_matrix: np.ndarray = field(repr=False)

    @property
    def tangent(self) -> np.ndarray:
        return self.q_matrix[:, 0]

    @property
    def normal(self) -> np.ndarray:
        return self.q_matrix[:, 1]

    @property
    def binormal(self) -> np.ndarray:
        return self.q_matrix[:, 2]


@dataclass(frozen=True)
class HMatrix:
    """Diagonal elasticity matrix ``diag(mu K_t, E I_n, E I_b)``."""

    diagonal: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal)

    @property
    def inverse(self) -> np.ndarray:
        return np.diag(1.0 / self.diagonal)

    def compliance(self, frame: LocalFrame) -> np.ndarray:
        """Global compliance ``Q H^{-1} Q^T`` (symmetric positive definite)."""
        q = frame.q_matrix
        c = (q / self.diagonal) @ q.T
        return 0.5 * (c + c.T)


def frame_for(tail_pos, head_pos) -> LocalFrame:
    """Deterministic frame for the straight strut from ``tail_pos`` to ``head_pos``.

    The normal is e3 projected onto the plane orthogonal to the tangent, or e2
    when the strut is within ~25 degrees of e3.
    """
    chord = np.asarray(head_pos, dtype=float) - np.asarray(tail_pos, dtype=float)
    length = np.linalg.norm(chord)
    if length == 0.0:
        raise ValueError("degenerate strut of zero length")
    t = chord / length
    ref = np.array([0.0, 0.0, 1.0])
    if abs(t @ ref) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    n = ref - (ref @ t) * t
    n /= np.linalg.norm(n)
    b = np.cross(t, n)
    return LocalFrame(np.column_stack([t, n, b]))


def h_matrix(material: Material, section: CrossSection) -> HMatrix:
    e = material.young_modulus
    return HMatrix(np.array([
        material.shear_modulus * section.torsion_constant,
        e * section.inertia_n,
        e * section.inertia_b,
    ]))

"""One-dimensional polynomial bases on a strut and Gauss quadrature.

All bases live on the reference interval ``[0, 1]``; a strut of length ``l``
uses ``s = l * xi``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg

__all__ = [
    "gauss_legendre",
    "gauss_lobatto_nodes",
    "PrimalBasis",
    "MultiplierBasis",
    "basis_primal",
    "basis_multiplier",
]


@lru_cache(maxsize=None)
def _gauss_legendre(npts: int):
    x, w = npleg.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


def gauss_legendre(npts: int):
    """Gauss-Legendre points and weights on ``[0, 1]``."""
    x, w = _gauss_legendre(int(npts))
    return x.copy(), w.copy()


@lru_cache(maxsize=None)
def _lobatto(n: int):
    if n < 1:
        raise ValueError("Lobatto node set needs degree >= 1")
    interior = npleg.Legendre.basis(n).deriv().roots() if n > 1 else np.array([])
    x = np.concatenate([[-1.0], np.sort(interior.real), [1.0]])
    return 0.5 * (x + 1.0)


def gauss_lobatto_nodes(n: int) -> np.ndarray:
    """The ``n + 1`` Gauss-Lobatto points of degree ``n`` on ``[0, 1]``."""
    return _lobatto(int(n)).copy()


class PrimalBasis:
    """Lagrange nodal basis of degree ``n`` on the Gauss-Lobatto points.

    Coefficient 0 is the value at ``xi = 0`` and coefficient ``n`` the value
    at ``xi = 1``.
    """

    def __init__(self, degree: int):
        if degree < 1:
            raise ValueError("primal degree must be >= 1")
        self.degree = degree
        self.nodes = gauss_lobatto_nodes(degree)
        diff = self.nodes[:, None] - self.nodes[None, :]
        np.fill_diagonal(diff, 1.0)
        self._denominator = diff.prod(axis=1)

    @property
    def size(self) -> int:
        return self.degree + 1

    def __call__(self, xi) -> np.ndarray:
        """Basis values, shape ``(len(xi), n + 1)``."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        gap = xi[:, None] - self.nodes[None, :]
        out = np.empty((xi.size, self.size))
        for j in range(self.size):
            out[:, j] = np.prod(np.delete(gap, j, axis=1), axis=1) / self._denominator[j]
        return out

    def deriv(self, xi) -> np.ndarray:
        """Derivatives with respect to ``xi``, shape ``(len(xi), n + 1)``."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        gap = xi[:, None] - self.nodes[None, :]
        out = np.zeros((xi.size, self.size))
        for j in range(self.size):
            others = [m for m in range(self.size) if m != j]
            for m in others:
                rest = [r for r in others if r != m]
                out[:, j] += np.prod(gap[:, rest], axis=1)
            out[:, j] /= self._denominator[j]
        return out

    def derivative_matrix(self) -> np.ndarray:
        """``D[i, j] = phi_j'(x_i)`` at the nodes (reference coordinate)."""
        return self.deriv(self.nodes)


class MultiplierBasis:
    """Legendre polynomials ``P_j(2 xi - 1)``, ``j = 0..k`` (unnormalized, orthogonal)."""

    def __init__(self, degree: int):
        if degree < 0:
            raise ValueError("multiplier degree must be >= 0")
        self.degree = degree

    @property
    def size(self) -> int:
        return self.degree + 1

    def __call__(self, xi) -> np.ndarray:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        return npleg.legvander(2.0 * xi - 1.0, self.degree)

    def mass_diagonal(self) -> np.ndarray:
        """``int_0^1 L_j^2 dxi = 1 / (2j + 1)``."""
        return 1.0 / (2.0 * np.arange(self.size) + 1.0)


@lru_cache(maxsize=None)
def basis_primal(n: int) -> PrimalBasis:
    return PrimalBasis(n)


@lru_cache(maxsize=None)
def basis_multiplier(k: int) -> MultiplierBasis:
    return MultiplierBasis(k)

"""Direct solvers for symmetric indefinite systems.

Both paths first scale the matrix symmetrically, ``S K S``: an optional
caller-supplied diagonal (e.g. physical units) followed by Ruiz iteration so
every row has unit max-norm.  The dense path then
uses LAPACK's Bunch-Kaufman ``LDL^T`` (``sytrf``); the sparse path uses a
permuted sparse LU since scipy ships no sparse ``LDL^T``.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import lapack

__all__ = [
    "SingularSystemError",
    "Factorization",
    "factorize",
    "equilibrate",
    "numeric_kernel_dimension",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 3000


class SingularSystemError(RuntimeError):
    """Raised when a system matrix is numerically singular.

    ``kernel_dimension`` holds the numeric null-space dimension when it was
    computed (desk-scale systems), else ``None``.
    """

    def __init__(self, message, kernel_dimension=None):
        super().__init__(message)
        self.kernel_dimension = kernel_dimension


def equilibrate(matrix, iterations: int = 20) -> np.ndarray:
    """Symmetric Ruiz scaling vector ``s`` so that ``diag(s) K diag(s)`` has rows of max-norm ~1."""
    mat = sp.csr_matrix(matrix) if not sp.issparse(matrix) else matrix.tocsr()
    absm = abs(mat)
    s = np.ones(mat.shape[0])
    for _ in range(iterations):
        scaled = sp.diags(s) @ absm @ sp.diags(s)
        rowmax = scaled.max(axis=1).toarray().ravel()
        if np.any(rowmax == 0.0):
            raise SingularSystemError("matrix has an empty row", kernel_dimension=int(np.sum(rowmax == 0.0)))
        if np.max(np.abs(rowmax - 1.0)) < 1e-3:
            break
        s /= np.sqrt(rowmax)
    return s


def numeric_kernel_dimension(matrix, rtol: float = 1e-10) -> int:
    dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
    sv = np.linalg.svd(dense, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return dense.shape[0]
    return int(np.sum(sv <= rtol * sv[0]))


def _pivot_blocks(ldl: np.ndarray, ipiv: np.ndarray) -> np.ndarray:
    """Absolute eigenvalues of the 1x1 / 2x2 diagonal blocks of a ``sytrf`` factor (lower)."""
    n = ldl.shape[0]
    out = []
    i = 0
    while i < n:
        if ipiv[i] > 0 or i == n - 1:
            out.append(abs(ldl[i, i]))
            i += 1
        else:
            block = np.array([[ldl[i, i], ldl[i + 1, i]], [ldl[i + 1, i], ldl[i + 1, i + 1]]])
            out.extend(np.abs(np.linalg.eigvalsh(block)))
            i += 2
    return np.asarray(out)


class Factorization:
    """Reusable factorization of a symmetric matrix; ``solve`` accepts vectors or 2-D arrays."""

    def __init__(self, matrix, method: str = "auto", pivot_tol: float = 1e-12,
                 check_kernel: bool = True, scale=None):
        mat = sp.csr_matrix(matrix) if not sp.issparse(matrix) else matrix.tocsr()
        self.matrix = mat
        self.size = mat.shape[0]
        if method == "auto":
            method = "dense" if self.size <= DENSE_LIMIT else "sparse"
        if method not in ("dense", "sparse"):
            raise ValueError(f"unknown factorization method {method!r}")
        self.method = method
        pre = np.ones(self.size) if scale is None else np.asarray(scale, dtype=float)
        pre_scaled = sp.diags(pre) @ mat @ sp.diags(pre)
        self.scale = pre * equilibrate(pre_scaled)
        scaled = sp.diags(self.scale) @ mat @ sp.diags(self.scale)
        self.min_pivot = None
        if method == "dense":
            ldl, ipiv, info = lapack.dsytrf(scaled.toarray(), lower=1)
            if info < 0:
                raise ValueError(f"sytrf argument error {info}")
            pivots = _pivot_blocks(ldl, ipiv)
            self.min_pivot = float(pivots.min()) if pivots.size else 0.0
            if info > 0 or self.min_pivot <= pivot_tol * abs(scaled).max():
                kdim = numeric_kernel_dimension(scaled) if check_kernel else None
                if info > 0 or kdim is None or kdim > 0:
                    raise SingularSystemError(
                        f"symmetric factorization hit a pivot of {self.min_pivot:.3e}; "
                        f"numeric kernel dimension {kdim}", kernel_dimension=kdim)
            self._ldl, self._ipiv = ldl, ipiv
        else:
            try:
                self._lu = spla.splu(scaled.tocsc(), permc_spec="COLAMD")
            except RuntimeError as exc:
                kdim = numeric_kernel_dimension(scaled) if check_kernel and self.size <= DENSE_LIMIT else None
                raise SingularSystemError(f"sparse factorization failed: {exc}", kernel_dimension=kdim) from exc
            diag = np.abs(self._lu.U.diagonal())
            self.min_pivot = float(diag.min())
            if not np.all(np.isfinite(diag)) or self.min_pivot <= pivot_tol * abs(scaled).max():
                raise SingularSystemError(f"sparse factorization hit a pivot of {self.min_pivot:.3e}")

    def _solve_scaled(self, rhs):
        if self.method == "dense":
            x, info = lapack.dsytrs(self._ldl, self._ipiv, rhs, lower=1)
            if info != 0:
                raise ValueError(f"sytrs argument error {info}")
            return x
        return self._lu.solve(rhs)

    def solve(self, rhs, refine: int = 0) -> np.ndarray:
        """Solve ``K x = rhs``; ``refine`` extra steps of iterative refinement."""
        rhs = np.asarray(rhs, dtype=float)
        s = self.scale if rhs.ndim == 1 else self.scale[:, None]
        x = s * self._solve_scaled(s * rhs)
        for _ in range(refine):
            r = rhs - self.matrix @ x
            x = x + s * self._solve_scaled(s * r)
        return x


def factorize(matrix, method: str = "auto", pivot_tol: float = 1e-12, scale=None) -> Factorization:
    return Factorization(matrix, method=method, pivot_tol=pivot_tol, scale=scale)


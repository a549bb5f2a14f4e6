"""File outputs: CSV tables, VTK legacy polydata and matrix triplets.

Floats are written with 17 significant digits so values round-trip exactly.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .basis import basis_primal

__all__ = [
    "fmt",
    "write_rows",
    "write_errors_csv",
    "write_solution_csv",
    "write_trajectory_csv",
    "write_timings_csv",
    "write_vtk",
    "write_triplets",
    "read_triplets",
]


def fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_rows(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def write_errors_csv(path, rows) -> Path:
    """``rows`` are :class:`strutnet.static.ConvergenceRow`; rate is blank on the first level."""
    def rate(r):
        if r.rate is None:
            return ""
        return r.rate if isinstance(r.rate, str) else float(r.rate)

    return write_rows(path, ["level", "h", "quantity", "norm", "error", "rate"],
                      ([r.level, float(r.h), r.quantity, r.norm, float(r.error), rate(r)] for r in rows))


def write_solution_csv(path, sol, samples: int = 5) -> Path:
    """Per-strut samples of ``u``, ``omega``, ``q``, ``p`` at ``samples`` evenly spaced points."""
    xi = np.linspace(0.0, 1.0, samples)
    fields = [sol.evaluate(name, xi) for name in ("u", "omega", "q", "p")]
    lengths = sol.network.lengths
    rows = []
    for i in range(sol.network.n_struts):
        for j, x in enumerate(xi):
            row = [i, float(x * lengths[i])]
            for f in fields:
                row.extend(float(v) for v in f[i, j])
            rows.append(row)
    header = ["strut", "s"] + [f"{n}{c}" for n in ("u", "omega", "q", "p") for c in (1, 2, 3)]
    return write_rows(path, header, rows)


def write_trajectory_csv(path, traj, lay) -> Path:
    U = traj.z[:, lay.slice("U")].reshape(len(traj.times), -1, 3)
    W = traj.z[:, lay.slice("Omega")].reshape(len(traj.times), -1, 3)
    rows = []
    for k, t in enumerate(traj.times):
        for v in range(U.shape[1]):
            rows.append([float(t), v, *map(float, U[k, v]), *map(float, W[k, v])])
    header = ["t", "vertex", "U1", "U2", "U3", "Omega1", "Omega2", "Omega3"]
    return write_rows(path, header, rows)


def write_timings_csv(path, timings) -> Path:
    """``timings`` is an iterable of ``(phase, seconds, size)``."""
    return write_rows(path, ["phase", "seconds", "size"],
                      ([p, float(s), int(n)] for p, s, n in timings))


def write_vtk(path, net, u=None, scale: float = 1.0, samples: int = 2, title: str = "strut network") -> Path:
    """Legacy ASCII polydata of the network, each strut drawn as a polyline.

    ``u`` holds nodal displacement coefficients ``(n_E, n + 1, 3)``; the
    points are ``x + scale * u(x)``.  Displacement is attached as point data.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    xi = np.linspace(0.0, 1.0, max(samples, 2))
    base = net.positions[net.tails][:, None, :] + (net.lengths[:, None] * xi)[:, :, None] * net.tangents[:, None, :]
    if u is None:
        disp = np.zeros_like(base)
    else:
        u = np.asarray(u)
        disp = np.einsum("qa,eac->eqc", basis_primal(u.shape[1] - 1)(xi), u)
    pts = (base + scale * disp).reshape(-1, 3)
    n_e, m = net.n_struts, xi.size
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII", "DATASET POLYDATA",
             f"POINTS {pts.shape[0]} double"]
    lines += [" ".join(fmt(v) for v in p) for p in pts]
    lines.append(f"LINES {n_e} {n_e * (m + 1)}")
    for i in range(n_e):
        lines.append(" ".join(str(v) for v in [m, *range(i * m, (i + 1) * m)]))
    lines.append(f"POINT_DATA {pts.shape[0]}")
    lines.append("VECTORS displacement double")
    lines += [" ".join(fmt(v) for v in d) for d in disp.reshape(-1, 3)]
    lines.append(f"CELL_DATA {n_e}")
    lines.append("SCALARS strut int 1")
    lines.append("LOOKUP_TABLE default")
    lines += [str(i) for i in range(n_e)]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_triplets(path, matrix) -> Path:
    """One ``row col value`` line per stored nonzero, 0-based, row-major order."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for k in order:
            fh.write(f"{coo.row[k]} {coo.col[k]} {fmt(coo.data[k])}\n")
    return path


def read_triplets(path) -> sp.csr_matrix:
    with open(path) as fh:
        header = fh.readline().split()
        shape = (int(header[1]), int(header[2]))
        data = np.loadtxt(fh, ndmin=2)
    if data.size == 0:
        return sp.csr_matrix(shape)
    return sp.coo_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=shape).tocsr()

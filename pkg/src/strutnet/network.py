"""Stent networks: graph of straight struts, incidence structure, generators, refinement."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .rod import CrossSection, Material

__all__ = [
    "StentNetwork",
    "IncidenceMatrices",
    "incidence",
    "zigzag_cylinder",
    "palmaz",
    "refine",
    "single_strut",
    "load_network",
    "save_network",
]

PALMAZ_RADIUS = 1.5e-3
PALMAZ_LENGTH = 1.68e-2
PALMAZ_SIDE = 1.0e-4


@dataclass(frozen=True, eq=False)
class StentNetwork:
    """Undirected graph of straight struts with a fixed orientation per strut.

    Strut ``i`` runs from vertex ``tails[i]`` (local coordinate 0) to
    ``heads[i]`` (local coordinate ``lengths[i]``).  ``origin`` records, for
    each strut, the strut of the unrefined network it lies on and the covered
    fraction ``[a, b]`` of that strut; it is the identity for unrefined nets.
    """

    positions: np.ndarray
    tails: np.ndarray
    heads: np.ndarray
    sections: tuple[CrossSection, ...]
    materials: tuple[Material, ...]
    section_ids: np.ndarray
    material_ids: np.ndarray
    origin: np.ndarray = field(default=None)
    section_names: tuple[str, ...] = field(default=None)
    material_names: tuple[str, ...] = field(default=None)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, 3)
        tails = np.array(self.tails, dtype=np.int64).ravel()
        heads = np.array(self.heads, dtype=np.int64).ravel()
        n_e = tails.size
        sec = np.broadcast_to(np.asarray(self.section_ids, dtype=np.int64), (n_e,)).copy()
        mat = np.broadcast_to(np.asarray(self.material_ids, dtype=np.int64), (n_e,)).copy()
        if self.origin is None:
            origin = np.column_stack([np.arange(n_e), np.zeros(n_e), np.ones(n_e)])
        else:
            origin = np.array(self.origin, dtype=float).reshape(n_e, 3)
        for name, value in (("positions", pos), ("tails", tails), ("heads", heads),
                            ("section_ids", sec), ("material_ids", mat), ("origin", origin)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "sections", tuple(self.sections))
        object.__setattr__(self, "materials", tuple(self.materials))
        if self.section_names is None:
            object.__setattr__(self, "section_names", tuple(f"s{i}" for i in range(len(self.sections))))
        if self.material_names is None:
            object.__setattr__(self, "material_names", tuple(f"m{i}" for i in range(len(self.materials))))
        self._validate()

    def _validate(self):
        n_v, n_e = self.n_vertices, self.n_struts
        if n_e == 0:
            raise ValueError("network has no struts")
        ends = np.concatenate([self.tails, self.heads])
        if ends.min() < 0 or ends.max() >= n_v:
            raise ValueError("strut references an unknown vertex")
        if np.any(self.tails == self.heads):
            raise ValueError("strut with tail == head")
        if self.section_ids.min() < 0 or self.section_ids.max() >= len(self.sections):
            raise ValueError("strut references an unknown section")
        if self.material_ids.min() < 0 or self.material_ids.max() >= len(self.materials):
            raise ValueError("strut references an unknown material")
        if np.any(self.degrees == 0):
            raise ValueError("isolated vertex")
        if not np.all(self.lengths > 0):
            raise ValueError("strut of zero length")
        scale = max(np.ptp(self.positions, axis=0).max(), self.lengths.max())
        if n_v > 1 and cKDTree(self.positions).query_pairs(1e-9 * scale):
            raise ValueError("duplicate vertex positions")
        graph = sp.coo_matrix((np.ones(n_e), (self.tails, self.heads)), shape=(n_v, n_v))
        n_comp, _ = connected_components(graph, directed=False)
        if n_comp != 1:
            raise ValueError(f"network is not connected ({n_comp} components)")

    @property
    def n_vertices(self) -> int:
        return self.positions.shape[0]

    @property
    def n_struts(self) -> int:
        return self.tails.size

    @property
    def chords(self) -> np.ndarray:
        return self.positions[self.heads] - self.positions[self.tails]

    @property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.chords, axis=1)

    @property
    def tangents(self) -> np.ndarray:
        return self.chords / self.lengths[:, None]

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())

    @property
    def degrees(self) -> np.ndarray:
        return np.bincount(np.concatenate([self.tails, self.heads]), minlength=self.n_vertices)

    def leaving(self, vertex: int) -> np.ndarray:
        """Struts whose local coordinate is 0 at ``vertex``."""
        return np.flatnonzero(self.tails == vertex)

    def entering(self, vertex: int) -> np.ndarray:
        """Struts whose local coordinate is ``l`` at ``vertex``."""
        return np.flatnonzero(self.heads == vertex)

    def section(self, strut: int) -> CrossSection:
        return self.sections[self.section_ids[strut]]

    def material(self, strut: int) -> Material:
        return self.materials[self.material_ids[strut]]

    def point(self, strut: int, s) -> np.ndarray:
        """Position at local arc length ``s`` on ``strut``."""
        s = np.asarray(s, dtype=float)
        return self.positions[self.tails[strut]] + s[..., None] * self.tangents[strut]

    def same_structure(self, other: "StentNetwork") -> bool:
        return (np.array_equal(self.positions, other.positions)
                and np.array_equal(self.tails, other.tails)
                and np.array_equal(self.heads, other.heads)
                and self.sections == other.sections
                and self.materials == other.materials
                and np.array_equal(self.section_ids, other.section_ids)
                and np.array_equal(self.material_ids, other.material_ids))

    def to_dict(self) -> dict:
        out = {
            "vertices": self.positions.tolist(),
            "struts": [
                {"tail": int(t), "head": int(h),
                 "section": self.section_names[s], "material": self.material_names[m]}
                for t, h, s, m in zip(self.tails, self.heads, self.section_ids, self.material_ids)
            ],
            "sections": {n: s.to_dict() for n, s in zip(self.section_names, self.sections)},
            "materials": {n: m.to_dict() for n, m in zip(self.material_names, self.materials)},
        }
        identity = np.column_stack([np.arange(self.n_struts), np.zeros(self.n_struts),
                                    np.ones(self.n_struts)])
        if not np.array_equal(self.origin, identity):
            out["origin"] = [[int(r), a, b] for r, a, b in self.origin]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "StentNetwork":
        sec_names = list(data["sections"])
        mat_names = list(data["materials"])
        struts = data["struts"]
        return cls(
            positions=np.array(data["vertices"], dtype=float),
            tails=[s["tail"] for s in struts],
            heads=[s["head"] for s in struts],
            sections=[CrossSection.from_dict(data["sections"][n]) for n in sec_names],
            materials=[Material.from_dict(data["materials"][n]) for n in mat_names],
            section_ids=[sec_names.index(s["section"]) for s in struts],
            material_ids=[mat_names.index(s["material"]) for s in struts],
            origin=data.get("origin"),
            section_names=tuple(sec_names),
            material_names=tuple(mat_names),
        )


@dataclass(frozen=True)
class IncidenceMatrices:
    """Block incidence matrices ``A+`` (head) and ``A-`` (tail), each ``3 n_V x 3 n_E``."""

    a_plus: sp.csr_matrix
    a_minus: sp.csr_matrix

    @property
    def a(self) -> sp.csr_matrix:
        return (self.a_plus - self.a_minus).tocsr()


def _block_selector(vertex_of_strut: np.ndarray, n_v: int) -> sp.csr_matrix:
    n_e = vertex_of_strut.size
    rows = (3 * vertex_of_strut[:, None] + np.arange(3)).ravel()
    cols = (3 * np.arange(n_e)[:, None] + np.arange(3)).ravel()
    return sp.csr_matrix((np.ones(3 * n_e, dtype=np.int64), (rows, cols)), shape=(3 * n_v, 3 * n_e))


def incidence(net: StentNetwork) -> IncidenceMatrices:
    return IncidenceMatrices(_block_selector(net.heads, net.n_vertices),
                             _block_selector(net.tails, net.n_vertices))


def zigzag_cylinder(n_circ: int = 12, n_long: int = 12, radius: float = PALMAZ_RADIUS,
                    length: float = PALMAZ_LENGTH, end_ring: bool = True,
                    cross_section: CrossSection | None = None,
                    material: Material | None = None) -> StentNetwork:
    """Diamond-cell stent on a cylinder about the x1 axis.

    ``n_long`` rings of ``n_circ`` points at ``x1 = 0 .. length``; odd rings are
    rotated by half the angular pitch and every point is joined to its two
    nearest points on the next ring.  With ``end_ring`` the last ring is also
    closed by ``n_circ`` circumferential struts.
    """
    if n_circ < 3 or n_long < 2:
        raise ValueError("need n_circ >= 3 and n_long >= 2")
    if not radius > 0 or not length > 0:
        raise ValueError("radius and length must be positive")
    cross_section = cross_section or CrossSection.square(PALMAZ_SIDE)
    material = material or Material.from_poisson(2.1e11, 0.26506)

    j, m = np.divmod(np.arange(n_circ * n_long), n_circ)
    theta = 2.0 * np.pi * (m + 0.5 * (j % 2)) / n_circ
    x1 = j * (length / (n_long - 1))
    positions = np.column_stack([x1, radius * np.cos(theta), radius * np.sin(theta)])

    tails, heads = [], []
    for ring in range(n_long - 1):
        shift = -1 if ring % 2 == 0 else 1
        for k in range(n_circ):
            a = ring * n_circ + k
            nxt = (ring + 1) * n_circ
            tails += [a, a]
            heads += [nxt + k, nxt + (k + shift) % n_circ]
    if end_ring:
        base = (n_long - 1) * n_circ
        for k in range(n_circ):
            tails.append(base + k)
            heads.append(base + (k + 1) % n_circ)
    return StentNetwork(positions, tails, heads, [cross_section], [material], 0, 0)


def palmaz(cross_section: CrossSection | None = None, material: Material | None = None) -> StentNetwork:
    """Palmaz-like stent: 144 vertices and 276 straight struts."""
    return zigzag_cylinder(12, 12, PALMAZ_RADIUS, PALMAZ_LENGTH, True, cross_section, material)


def single_strut(tail=(0.0, 0.0, 0.0), head=(1.0, 0.0, 0.0),
                 cross_section: CrossSection | None = None,
                 material: Material | None = None) -> StentNetwork:
    cross_section = cross_section or CrossSection.square(1.0)
    material = material or Material(1.0, 1.0, 1.0)
    return StentNetwork(np.array([tail, head], dtype=float), [0], [1], [cross_section], [material], 0, 0)


def refine(net: StentNetwork, splits: int) -> StentNetwork:
    """Split every strut into ``splits`` collinear struts of equal length.

    Strut ``i`` becomes struts ``i*splits .. i*splits + splits - 1`` from tail
    to head; the new interior vertices are appended after the original ones.
    """
    if splits < 1:
        raise ValueError("splits must be >= 1")
    if splits == 1:
        return net
    n_v, n_e = net.n_vertices, net.n_struts
    frac = np.arange(1, splits) / splits
    p0 = net.positions[net.tails]
    interior = p0[:, None, :] + frac[None, :, None] * net.chords[:, None, :]
    positions = np.vstack([net.positions, interior.reshape(-1, 3)])

    inner_ids = n_v + np.arange(n_e * (splits - 1)).reshape(n_e, splits - 1)
    chain = np.column_stack([net.tails, inner_ids, net.heads])
    tails = chain[:, :-1].ravel()
    heads = chain[:, 1:].ravel()

    root, a, b = net.origin.T
    width = (b - a)[:, None]
    steps = np.arange(splits + 1) / splits
    edges = a[:, None] + width * steps[None, :]
    origin = np.column_stack([np.repeat(root, splits), edges[:, :-1].ravel(), edges[:, 1:].ravel()])
    return StentNetwork(positions, tails, heads, net.sections, net.materials,
                        np.repeat(net.section_ids, splits), np.repeat(net.material_ids, splits),
                        origin, net.section_names, net.material_names)


def save_network(net: StentNetwork, path) -> None:
    Path(path).write_text(json.dumps(net.to_dict(), indent=1))


def load_network(path) -> StentNetwork:
    return StentNetwork.from_dict(json.loads(Path(path).read_text()))

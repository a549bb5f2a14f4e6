"""DOF layout and assembly of the mixed forms into the saddle-point system.

Unknown ordering (global vector ``z``)::

    V-part:  q, p, P+, P-, Q+, Q-, alpha, beta
    M-part:  u, omega, U, Omega

``K = [[A, B^T], [B, 0]]`` with ``A`` of size ``dim_V`` (only the q-q block is
nonzero) and ``B`` of size ``dim_M x dim_V`` such that ``b(Sigma, psi) =
psi^T B Sigma``.  Per-strut polynomial fields are stored basis-major,
component-minor: coefficient ``a`` of component ``c`` on strut ``i`` sits at
``offset + (i * nb + a) * 3 + c``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .basis import basis_multiplier, basis_primal, gauss_legendre
from .network import StentNetwork, incidence
from .rod import frame_for, h_matrix

__all__ = [
    "FeOrders",
    "DofLayout",
    "SaddleSystem",
    "layout",
    "strut_frames",
    "strut_compliances",
    "assemble_a",
    "assemble_b",
    "assemble_f",
    "assemble_mass",
    "assemble",
    "cross_matrix",
    "unit_scaling",
]

V_GROUPS = ("q", "p", "P+", "P-", "Q+", "Q-", "alpha", "beta")
M_GROUPS = ("u", "omega", "U", "Omega")


@dataclass(frozen=True)
class FeOrders:
    """Polynomial degrees: ``k`` for (q, p), ``n = k + 1`` for (u, omega)."""

    k: int
    n: int | None = None

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.n is None:
            object.__setattr__(self, "n", self.k + 1)
        if self.n != self.k + 1:
            raise ValueError(f"inconsistent orders: need n = k + 1, got k={self.k}, n={self.n}")


class DofLayout:
    """Offsets and extents of every unknown group."""

    def __init__(self, n_vertices: int, n_struts: int, orders: FeOrders):
        self.n_vertices = n_vertices
        self.n_struts = n_struts
        self.orders = orders
        k, n = orders.k, orders.n
        n_e, n_v = n_struts, n_vertices
        sizes = {
            "q": 3 * (k + 1) * n_e, "p": 3 * (k + 1) * n_e,
            "P+": 3 * n_e, "P-": 3 * n_e, "Q+": 3 * n_e, "Q-": 3 * n_e,
            "alpha": 3, "beta": 3,
            "u": 3 * (n + 1) * n_e, "omega": 3 * (n + 1) * n_e,
            "U": 3 * n_v, "Omega": 3 * n_v,
        }
        self.sizes = sizes
        self.offsets = {}
        pos = 0
        for name in V_GROUPS + M_GROUPS:
            self.offsets[name] = pos
            pos += sizes[name]
        self.total = pos
        self.dim_v = sum(sizes[g] for g in V_GROUPS)
        self.dim_m = self.total - self.dim_v

    def slice(self, name: str) -> slice:
        return slice(self.offsets[name], self.offsets[name] + self.sizes[name])

    def mslice(self, name: str) -> slice:
        """Slice of an M-group inside the M-part (row index of ``B``)."""
        s = self.slice(name)
        return slice(s.start - self.dim_v, s.stop - self.dim_v)

    def block_counts(self) -> dict:
        """Row/column extents of the block structure (q | Sigma2 | u | omega,U,Omega)."""
        s = self.sizes
        return {
            "q": s["q"],
            "sigma2": self.dim_v - s["q"],
            "u": s["u"],
            "rest": self.dim_m - s["u"],
        }

    def field_index(self, name: str, nb: int | None = None) -> np.ndarray:
        """Global indices of a per-strut polynomial group, shape ``(n_E, nb, 3)``."""
        if nb is None:
            nb = self.orders.k + 1 if name in ("q", "p") else self.orders.n + 1
        return self.offsets[name] + np.arange(self.n_struts * nb * 3).reshape(self.n_struts, nb, 3)

    def vector_index(self, name: str) -> np.ndarray:
        """Global indices of a group of 3-vectors, shape ``(count, 3)``."""
        return self.offsets[name] + np.arange(self.sizes[name]).reshape(-1, 3)

    def __repr__(self):
        return (f"DofLayout(n_V={self.n_vertices}, n_E={self.n_struts}, k={self.orders.k}, "
                f"dim_V={self.dim_v}, dim_M={self.dim_m}, total={self.total})")


def layout(net: StentNetwork, orders: FeOrders) -> DofLayout:
    return DofLayout(net.n_vertices, net.n_struts, orders)


def cross_matrix(t) -> np.ndarray:
    """``[t]_x`` with ``[t]_x w = t x w``."""
    t1, t2, t3 = t
    return np.array([[0.0, -t3, t2], [t3, 0.0, -t1], [-t2, t1, 0.0]])


def strut_frames(net: StentNetwork) -> list:
    return [frame_for(net.positions[a], net.positions[b]) for a, b in zip(net.tails, net.heads)]


def strut_compliances(net: StentNetwork, frames=None) -> np.ndarray:
    """``Q H^{-1} Q^T`` per strut, shape ``(n_E, 3, 3)``."""
    frames = frames if frames is not None else strut_frames(net)
    out = np.empty((net.n_struts, 3, 3))
    for i, frame in enumerate(frames):
        out[i] = h_matrix(net.material(i), net.section(i)).compliance(frame)
    return out


class _ElementIntegrals:
    """Reference-interval integrals shared by all struts (exact Gauss rule)."""

    def __init__(self, orders: FeOrders):
        k, n = orders.k, orders.n
        self.primal = basis_primal(n)
        self.mult = basis_multiplier(k)
        x, w = gauss_legendre(n + 1)
        phi, dphi, leg = self.primal(x), self.primal.deriv(x), self.mult(x)
        self.grad_leg = np.einsum("q,qa,qb->ab", w, dphi, leg)      # int phi_a' L_b dxi
        self.val_leg = np.einsum("q,qa,qb->ab", w, phi, leg)        # int phi_a L_b dxi
        self.mass = np.einsum("q,qa,qb->ab", w, phi, phi)           # int phi_a phi_b dxi
        self.mean = w @ phi                                         # int phi_a dxi


def _coo(rows, cols, vals, shape):
    return sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=shape).tocsr()


def assemble_a(net: StentNetwork, orders: FeOrders, compliances=None) -> sp.csr_matrix:
    """The ``dim_V x dim_V`` matrix of ``a``; only the q-q block is nonzero."""
    lay = layout(net, orders)
    comp = compliances if compliances is not None else strut_compliances(net)
    mass = basis_multiplier(orders.k).mass_diagonal()
    qi = lay.field_index("q")
    ell = net.lengths
    # block (i, a) couples components c, d with weight l_i * C_i[c, d] / (2a + 1)
    vals = ell[:, None, None, None] * mass[None, :, None, None] * comp[:, None, :, :]
    rows = np.broadcast_to(qi[:, :, :, None], vals.shape)
    cols = np.broadcast_to(qi[:, :, None, :], vals.shape)
    return sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())),
                         shape=(lay.dim_v, lay.dim_v)).tocsr()


def assemble_b(net: StentNetwork, orders: FeOrders) -> sp.csr_matrix:
    """The ``dim_M x dim_V`` matrix of ``b``."""
    if orders.n != orders.k + 1:
        raise ValueError("inconsistent orders: need n = k + 1")
    lay = layout(net, orders)
    el = _ElementIntegrals(orders)
    n_e = net.n_struts
    nk, nn = orders.k + 1, orders.n + 1
    dv = lay.dim_v
    ell = net.lengths
    ui, wi = lay.field_index("u") - dv, lay.field_index("omega") - dv
    qi, pi = lay.field_index("q"), lay.field_index("p")
    rows, cols, vals = [], [], []

    def put(r, c, v):
        r, c, v = np.broadcast_arrays(r, c, v)
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(v.ravel().astype(float))

    comp = np.arange(3)
    # -int p . dv/ds  and  -int q . dw/ds
    g = -np.broadcast_to(el.grad_leg[None, :, :, None], (n_e, nn, nk, 3))
    put(ui[:, :, None, :], pi[:, None, :, :], g)
    put(wi[:, :, None, :], qi[:, None, :, :], g)

    # -int p . (t x w): entry (w(a, d), p(b, c)) = -[t]x[c, d] * l * int phi_a L_b
    tx = np.stack([cross_matrix(t) for t in net.tangents])                   # (e, c, d)
    hv = ell[:, None, None] * el.val_leg[None]                               # (e, a, b)
    v = -hv[:, :, :, None, None] * tx[:, None, None, :, :]                   # (e, a, b, c, d)
    r = wi[:, :, None, None, :]                                              # w(a, d)
    c = pi[:, None, :, :, None]                                              # p(b, c)
    put(r, c, v)

    # endpoint traces
    for group, field, end, sign in (("P+", ui, -1, 1.0), ("P-", ui, 0, -1.0),
                                    ("Q+", wi, -1, 1.0), ("Q-", wi, 0, -1.0)):
        put(field[:, end, :], lay.vector_index(group), sign)

    # vertex couplings -(A+ P+ - A- P-) . V and the same for Q, W
    us, ws = lay.mslice("U"), lay.mslice("Omega")
    for group, base in (("P+", us.start), ("P-", us.start), ("Q+", ws.start), ("Q-", ws.start)):
        vert = net.heads if group.endswith("+") else net.tails
        sign = -1.0 if group.endswith("+") else 1.0
        put(base + 3 * vert[:, None] + comp, lay.vector_index(group), sign)

    # alpha . int v  and  beta . int w
    mean = ell[:, None] * el.mean[None, :]
    put(ui, lay.offsets["alpha"] + comp, mean[:, :, None])
    put(wi, lay.offsets["beta"] + comp, mean[:, :, None])

    return _coo(rows, cols, vals, (lay.dim_m, lay.dim_v))


def assemble_f(net: StentNetwork, orders: FeOrders, load, t: float | None = None,
               quad_points: int | None = None) -> np.ndarray:
    """Right-hand side ``F`` (full length) with ``F_u = -int f . v``.

    ``load`` maps points ``(N, 3)`` to force densities ``(N, 3)``; when ``t``
    is given it is called as ``load(x, t)``.
    """
    lay = layout(net, orders)
    rhs = np.zeros(lay.total)
    if load is None:
        return rhs
    nq = quad_points or orders.n + 3
    x, w = gauss_legendre(nq)
    phi = basis_primal(orders.n)(x)
    ell = net.lengths
    pts = net.positions[net.tails][:, None, :] + (ell[:, None] * x[None, :])[:, :, None] * net.tangents[:, None, :]
    flat = pts.reshape(-1, 3)
    force = np.asarray(load(flat) if t is None else load(flat, t), dtype=float).reshape(pts.shape)
    local = -np.einsum("e,q,qa,eqc->eac", ell, w, phi, force)
    rhs[lay.field_index("u")] = local
    return rhs


def assemble_mass(net: StentNetwork, orders: FeOrders) -> sp.csr_matrix:
    """Full-size ``E``: ``rho A`` weighted u-u Gram matrix, zero elsewhere."""
    lay = layout(net, orders)
    el = _ElementIntegrals(orders)
    rho_a = np.array([net.material(i).density * net.section(i).area for i in range(net.n_struts)])
    ui = lay.field_index("u")
    nn = orders.n + 1
    vals = (rho_a * net.lengths)[:, None, None, None] * np.broadcast_to(
        el.mass[None, :, :, None], (net.n_struts, nn, nn, 3))
    rows = np.broadcast_to(ui[:, :, None, :], vals.shape)
    cols = np.broadcast_to(ui[:, None, :, :], vals.shape)
    return sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())),
                         shape=(lay.total, lay.total)).tocsr()


def unit_scaling(net: StentNetwork, lay: DofLayout, block_a, block_b) -> np.ndarray:
    """Diagonal scaling ``d`` that makes ``diag(d) K diag(d)`` dimensionless and balanced.

    Lengths are measured in units of the mean strut length ``L0``: the
    displacement-like unknowns (u, U), the moment-like unknowns (q, Q+-) get
    the factor ``L0`` and ``alpha`` gets ``1 / L0``.  Then the force space is
    multiplied by ``c^-1/2`` and the displacement space by ``c^1/2`` with
    ``c = max|A| / max|B|``, which removes the overall compliance magnitude.
    """
    d = np.ones(lay.total)
    length = float(net.lengths.mean())
    for name in ("u", "U", "q", "Q+", "Q-"):
        d[lay.slice(name)] = length
    d[lay.slice("alpha")] = 1.0 / length
    dv = lay.dim_v
    dvec, mvec = d[:dv], d[dv:]
    a_max = abs(sp.diags(dvec) @ block_a @ sp.diags(dvec)).max()
    b_max = abs(sp.diags(mvec) @ block_b @ sp.diags(dvec)).max()
    if a_max > 0 and b_max > 0:
        c = a_max / b_max
        d[:dv] *= c**-0.5
        d[dv:] *= c**0.5
    return d


@dataclass(eq=False)
class SaddleSystem:
    """Assembled blocks of ``K = [[A, B^T], [B, 0]]`` and the load vector."""

    net: StentNetwork
    orders: FeOrders
    block_a: sp.csr_matrix
    block_b: sp.csr_matrix
    rhs: np.ndarray

    @cached_property
    def layout(self) -> DofLayout:
        return layout(self.net, self.orders)

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        return sp.bmat([[self.block_a, self.block_b.T], [self.block_b, None]], format="csr")

    @cached_property
    def mass(self) -> sp.csr_matrix:
        return assemble_mass(self.net, self.orders)

    @cached_property
    def scaling(self) -> np.ndarray:
        return unit_scaling(self.net, self.layout, self.block_a, self.block_b)

    def with_rhs(self, rhs) -> "SaddleSystem":
        out = SaddleSystem(self.net, self.orders, self.block_a, self.block_b, np.asarray(rhs, float))
        for name in ("layout", "matrix", "mass", "scaling"):
            if name in self.__dict__:
                out.__dict__[name] = self.__dict__[name]
        return out

    def blocks(self) -> dict:
        """The named sub-blocks A11, B32, B41, B42 and F3."""
        c = self.layout.block_counts()
        q = slice(0, c["q"])
        s2 = slice(c["q"], c["q"] + c["sigma2"])
        u = slice(0, c["u"])
        rest = slice(c["u"], c["u"] + c["rest"])
        b = self.block_b
        return {
            "A11": self.block_a[q, q],
            "B32": b[u, s2],
            "B41": b[rest, q],
            "B42": b[rest, s2],
            "F3": self.rhs[self.layout.slice("u")],
        }


def assemble(net: StentNetwork, orders: FeOrders, load=None, t: float | None = None,
             quad_points: int | None = None) -> SaddleSystem:
    return SaddleSystem(net, orders, assemble_a(net, orders), assemble_b(net, orders),
                        assemble_f(net, orders, load, t, quad_points))

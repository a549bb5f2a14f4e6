"""Stationary problem: solve, decode, diagnose, compare and study convergence."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .assembly import FeOrders, SaddleSystem, assemble, layout, DofLayout
from .basis import basis_multiplier, basis_primal, gauss_legendre
from .linalg import Factorization, SingularSystemError
from .network import StentNetwork, refine

__all__ = [
    "StaticProblem",
    "SolveInfo",
    "MixedSolution",
    "SolutionDiagnostics",
    "ErrorReport",
    "ConvergenceRow",
    "NotNestedError",
    "solve_static",
    "solve_system",
    "check_solution",
    "error_norms",
    "convergence_rate",
    "convergence_study",
    "QUANTITIES",
    "SingularSystemError",
]

# (quantity, norm) pairs reported by error_norms, in output order
QUANTITIES = (
    ("u", "L2"), ("u", "H1"), ("omega", "L2"), ("q", "L2"), ("p", "L2"),
    ("U", "l1"), ("Omega", "l1"), ("P+", "l1"), ("P-", "l1"), ("Q+", "l1"), ("Q-", "l1"),
    ("alpha", "l1"), ("beta", "l1"),
)


class NotNestedError(ValueError):
    """The reference network is not a refinement of the coarse one."""


@dataclass
class StaticProblem:
    """Stationary problem on a network.

    ``method`` is ``"auto"``, ``"dense"`` or ``"sparse"``; ``quad_points``
    overrides the per-strut load quadrature (default ``n + 3``).
    """

    network: StentNetwork
    orders: FeOrders
    load: object = None
    method: str = "auto"
    pivot_tol: float = 1e-12
    residual_tol: float = 1e-10
    quad_points: int | None = None

    def __post_init__(self):
        if isinstance(self.orders, int):
            self.orders = FeOrders(self.orders)
        if self.orders.n != self.orders.k + 1:
            raise ValueError("inconsistent orders: need n = k + 1")

    def assemble(self) -> SaddleSystem:
        return assemble(self.network, self.orders, self.load, quad_points=self.quad_points)


@dataclass
class SolveInfo:
    dimension: int
    method: str
    residual: float
    min_pivot: float | None
    residual_raw: float = 0.0
    seconds_assemble: float = 0.0
    seconds_solve: float = 0.0


@dataclass(eq=False)
class MixedSolution:
    """Decoded discrete solution.

    Polynomial fields have shape ``(n_E, nb, 3)`` (nodal coefficients for
    ``u``/``omega``, Legendre coefficients for ``q``/``p``); endpoint
    contacts ``(n_E, 3)``; vertex values ``(n_V, 3)``; ``alpha``/``beta`` ``(3,)``.
    """

    network: StentNetwork
    orders: FeOrders
    q: np.ndarray
    p: np.ndarray
    P_plus: np.ndarray
    P_minus: np.ndarray
    Q_plus: np.ndarray
    Q_minus: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    u: np.ndarray
    omega: np.ndarray
    U: np.ndarray
    Omega: np.ndarray
    info: SolveInfo | None = field(default=None, repr=False)

    _GROUPS = {"q": "q", "p": "p", "P+": "P_plus", "P-": "P_minus", "Q+": "Q_plus",
               "Q-": "Q_minus", "alpha": "alpha", "beta": "beta", "u": "u",
               "omega": "omega", "U": "U", "Omega": "Omega"}

    @property
    def layout(self) -> DofLayout:
        return layout(self.network, self.orders)

    @classmethod
    def decode(cls, net: StentNetwork, orders: FeOrders, vector, info=None) -> "MixedSolution":
        lay = layout(net, orders)
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (lay.total,):
            raise ValueError(f"expected vector of length {lay.total}, got {vector.shape}")
        parts = {}
        for group, attr in cls._GROUPS.items():
            chunk = vector[lay.slice(group)].copy()
            if group in ("q", "p"):
                chunk = chunk.reshape(net.n_struts, orders.k + 1, 3)
            elif group in ("u", "omega"):
                chunk = chunk.reshape(net.n_struts, orders.n + 1, 3)
            elif group not in ("alpha", "beta"):
                chunk = chunk.reshape(-1, 3)
            parts[attr] = chunk
        return cls(net, orders, info=info, **parts)

    def encode(self) -> np.ndarray:
        lay = self.layout
        out = np.zeros(lay.total)
        for group, attr in self._GROUPS.items():
            out[lay.slice(group)] = np.asarray(getattr(self, attr)).ravel()
        return out

    def group(self, name: str) -> np.ndarray:
        return getattr(self, self._GROUPS[name])

    def evaluate(self, name: str, xi, derivative: bool = False) -> np.ndarray:
        """Field values on every strut at reference points ``xi``, shape ``(n_E, len(xi), 3)``.

        ``derivative`` returns d/ds (primal fields only).
        """
        coeffs = self.group(name)
        if name in ("u", "omega"):
            basis = basis_primal(self.orders.n)
            if derivative:
                vals = basis.deriv(xi)
                return np.einsum("qa,eac->eqc", vals, coeffs) / self.network.lengths[:, None, None]
            vals = basis(xi)
        elif name in ("q", "p"):
            if derivative:
                raise ValueError("multiplier fields are not differentiated")
            vals = basis_multiplier(self.orders.k)(xi)
        else:
            raise ValueError(f"{name!r} is not a per-strut field")
        return np.einsum("qa,eac->eqc", vals, coeffs)

    def is_zero(self) -> bool:
        return not np.any(self.encode())


def _residual(k_mat, z, rhs) -> np.ndarray:
    """``rhs - K z`` accumulated in extended precision."""
    wide = k_mat.astype(np.longdouble) @ z.astype(np.longdouble)
    return (rhs.astype(np.longdouble) - wide).astype(float)


def solve_system(system: SaddleSystem, method: str = "auto", pivot_tol: float = 1e-12,
                 refine_steps: int = 2):
    """Factor and solve ``K z = F``.

    Refinement residuals are accumulated in extended precision.  Returns
    ``(z, factorization, residual, raw_residual)``: ``residual`` is
    ``|D (K z - F)| / |D F|`` with the balancing diagonal ``D`` of
    :func:`strutnet.assembly.unit_scaling`, ``raw_residual`` the same
    without ``D``.
    """
    k_mat = system.matrix
    rhs = system.rhs
    fact = Factorization(k_mat, method=method, pivot_tol=pivot_tol, scale=system.scaling)
    if not np.any(rhs):
        return np.zeros_like(rhs), fact, 0.0, 0.0
    z = fact.solve(rhs)
    for _ in range(refine_steps):
        z = z + fact.solve(_residual(k_mat, z, rhs))
    r = _residual(k_mat, z, rhs)
    d = system.scaling
    res = np.linalg.norm(d * r) / np.linalg.norm(d * rhs)
    raw = np.linalg.norm(r) / np.linalg.norm(rhs)
    return z, fact, float(res), float(raw)


def solve_static(problem: StaticProblem) -> MixedSolution:
    """Assemble and solve; raises ``SingularSystemError`` or ``ArithmeticError`` on failure."""
    t0 = time.perf_counter()
    system = problem.assemble()
    t1 = time.perf_counter()
    z, fact, res, raw = solve_system(system, problem.method, problem.pivot_tol)
    t2 = time.perf_counter()
    if not np.all(np.isfinite(z)) or res > problem.residual_tol:
        raise ArithmeticError(f"static solve residual {res:.3e} exceeds {problem.residual_tol:.1e}")
    info = SolveInfo(system.layout.total, fact.method, res, fact.min_pivot, raw, t1 - t0, t2 - t1)
    return MixedSolution.decode(problem.network, problem.orders, z, info)


@dataclass
class SolutionDiagnostics:
    """Constraint residuals with the scale they are measured against."""

    continuity_u: float
    continuity_omega: float
    balance_force: float
    balance_moment: float
    mean_u: float
    mean_omega: float
    scale_kinematic: float
    scale_force: float
    scale_moment: float
    scale_mean: float

    def items(self):
        return [
            ("continuity_u", self.continuity_u, self.scale_kinematic),
            ("continuity_omega", self.continuity_omega, self.scale_kinematic),
            ("balance_force", self.balance_force, self.scale_force),
            ("balance_moment", self.balance_moment, self.scale_moment),
            ("mean_u", self.mean_u, self.scale_mean),
            ("mean_omega", self.mean_omega, self.scale_mean),
        ]

    def passed(self, rtol: float = 1e-9) -> bool:
        return all(value <= rtol * scale for _, value, scale in self.items())


def check_solution(net: StentNetwork, sol: MixedSolution) -> SolutionDiagnostics:
    """Residuals of node continuity, vertex balance and the zero-mean constraints."""
    tails, heads = net.tails, net.heads
    cont_u = max(np.abs(sol.u[:, 0] - sol.U[tails]).max(initial=0.0),
                 np.abs(sol.u[:, -1] - sol.U[heads]).max(initial=0.0))
    cont_w = max(np.abs(sol.omega[:, 0] - sol.Omega[tails]).max(initial=0.0),
                 np.abs(sol.omega[:, -1] - sol.Omega[heads]).max(initial=0.0))

    def balance(plus, minus):
        acc = np.zeros((net.n_vertices, 3))
        np.add.at(acc, heads, plus)
        np.add.at(acc, tails, -minus)
        return np.abs(acc).max(initial=0.0)

    x, w = gauss_legendre(sol.orders.n + 1)
    weights = net.lengths[:, None] * w[None, :]
    mean_u = np.abs(np.einsum("eq,eqc->c", weights, sol.evaluate("u", x))).max()
    mean_w = np.abs(np.einsum("eq,eqc->c", weights, sol.evaluate("omega", x))).max()

    kin = max(np.abs(sol.U).max(initial=0.0), np.abs(sol.u).max(initial=0.0),
              np.abs(sol.Omega).max(initial=0.0), np.abs(sol.omega).max(initial=0.0))
    force = max(np.abs(sol.P_plus).max(initial=0.0), np.abs(sol.P_minus).max(initial=0.0))
    moment = max(np.abs(sol.Q_plus).max(initial=0.0), np.abs(sol.Q_minus).max(initial=0.0))
    return SolutionDiagnostics(
        float(cont_u), float(cont_w),
        float(balance(sol.P_plus, sol.P_minus)), float(balance(sol.Q_plus, sol.Q_minus)),
        float(mean_u), float(mean_w),
        float(kin), float(force), float(moment), float(kin * net.total_length),
    )


# ---------------------------------------------------------------- error norms


@dataclass
class ErrorReport:
    """Absolute errors and reference magnitudes keyed by ``(quantity, norm)``."""

    errors: dict
    reference: dict
    h: float

    def error(self, quantity: str, norm: str) -> float:
        return self.errors[(quantity, norm)]

    def relative(self, quantity: str, norm: str) -> float:
        ref = self.reference[(quantity, norm)]
        err = self.errors[(quantity, norm)]
        if ref == 0.0:
            return 0.0 if err == 0.0 else math.inf
        return err / ref

    def max_relative(self) -> float:
        return max(self.relative(*key) for key in self.errors)


def _strut_map(coarse: StentNetwork, fine: StentNetwork, tol: float = 1e-12):
    """For each fine strut: the containing coarse strut and the affine map of its span."""
    co, fo = coarse.origin, fine.origin
    if co is None or fo is None:
        raise NotNestedError("networks carry no refinement lineage")
    roots_c = co[:, 0].astype(int)
    order = {}
    for i, root in enumerate(roots_c):
        order.setdefault(root, []).append(i)
    parent = np.empty(fine.n_struts, dtype=int)
    for j in range(fine.n_struts):
        root, a, b = int(fo[j, 0]), fo[j, 1], fo[j, 2]
        found = -1
        for i in order.get(root, ()):
            if co[i, 1] - tol <= a and b <= co[i, 2] + tol:
                found = i
                break
        if found < 0:
            raise NotNestedError(f"fine strut {j} is not contained in any coarse strut")
        parent[j] = found
    span = co[parent, 2] - co[parent, 1]
    start = (fo[:, 1] - co[parent, 1]) / span
    width = (fo[:, 2] - fo[:, 1]) / span
    return parent, start, width


def _vertex_map(coarse: StentNetwork, fine: StentNetwork) -> np.ndarray:
    scale = max(np.ptp(fine.positions, axis=0).max(), 1.0e-300)
    dist, idx = cKDTree(fine.positions).query(coarse.positions)
    if np.any(dist > 1e-9 * scale):
        raise NotNestedError("coarse vertices missing from the reference network")
    return idx


def error_norms(sol_h: MixedSolution, sol_ref: MixedSolution, net: StentNetwork | None = None) -> ErrorReport:
    """Errors of ``sol_h`` measured against ``sol_ref`` on the reference network.

    Coarse fields are restricted exactly onto the fine sub-struts.  ``u``
    gets L2 and H1-seminorm, ``omega``/``q``/``p`` L2, and the finite
    dimensional unknowns the mean absolute error over their entries.
    """
    coarse = net if net is not None else sol_h.network
    fine = sol_ref.network
    if sol_h.orders != sol_ref.orders:
        raise ValueError("solutions use different orders")
    parent, start, width = _strut_map(coarse, fine)
    vmap = _vertex_map(coarse, fine)

    x, w = gauss_legendre(sol_h.orders.n + 2)
    xc = start[:, None] + width[:, None] * x[None, :]           # coarse reference coords per fine strut
    weights = fine.lengths[:, None] * w[None, :]

    def coarse_eval(name, derivative=False):
        coeffs = sol_h.group(name)[parent]
        out = np.empty((fine.n_struts, x.size, 3))
        if name in ("u", "omega"):
            basis = basis_primal(sol_h.orders.n)
            for j in range(fine.n_struts):
                vals = basis.deriv(xc[j]) if derivative else basis(xc[j])
                out[j] = vals @ coeffs[j]
            if derivative:
                out /= coarse.lengths[parent][:, None, None]
        else:
            basis = basis_multiplier(sol_h.orders.k)
            for j in range(fine.n_struts):
                out[j] = basis(xc[j]) @ coeffs[j]
        return out

    def l2(vals):
        return float(np.sqrt(np.einsum("eq,eqc->", weights, vals**2)))

    errors, refs = {}, {}
    for name in ("u", "omega", "q", "p"):
        ref = sol_ref.evaluate(name, x)
        errors[(name, "L2")] = l2(coarse_eval(name) - ref)
        refs[(name, "L2")] = l2(ref)
    dref = sol_ref.evaluate("u", x, derivative=True)
    errors[("u", "H1")] = l2(coarse_eval("u", derivative=True) - dref)
    refs[("u", "H1")] = l2(dref)

    def mean_l1(diff, ref):
        return float(np.abs(diff).mean()), float(np.abs(ref).mean())

    errors[("U", "l1")], refs[("U", "l1")] = mean_l1(sol_h.U - sol_ref.U[vmap], sol_ref.U[vmap])
    errors[("Omega", "l1")], refs[("Omega", "l1")] = mean_l1(sol_h.Omega - sol_ref.Omega[vmap], sol_ref.Omega[vmap])

    # endpoint contacts: match the fine sub-strut touching each coarse end
    fo, co = fine.origin, coarse.origin
    head_of = np.full(coarse.n_struts, -1)
    tail_of = np.full(coarse.n_struts, -1)
    tol = 1e-12
    for j in range(fine.n_struts):
        i = parent[j]
        if abs(fo[j, 1] - co[i, 1]) <= tol:
            tail_of[i] = j
        if abs(fo[j, 2] - co[i, 2]) <= tol:
            head_of[i] = j
    for group, idx in (("P+", head_of), ("P-", tail_of), ("Q+", head_of), ("Q-", tail_of)):
        ref = sol_ref.group(group)[idx]
        errors[(group, "l1")], refs[(group, "l1")] = mean_l1(sol_h.group(group) - ref, ref)
    for group in ("alpha", "beta"):
        ref = sol_ref.group(group)
        errors[(group, "l1")], refs[(group, "l1")] = mean_l1(sol_h.group(group) - ref, ref)

    ordered_e = {key: errors[key] for key in QUANTITIES}
    ordered_r = {key: refs[key] for key in QUANTITIES}
    return ErrorReport(ordered_e, ordered_r, float(coarse.lengths.max()))


# ------------------------------------------------------------- convergence


def convergence_rate(error_coarse: float, error_fine: float, h_coarse: float, h_fine: float):
    """Observed order ``log(e_fine / e_coarse) / log(h_fine / h_coarse)``.

    Returns ``None`` when either error is zero.
    """
    if error_coarse <= 0.0 or error_fine <= 0.0:
        return None
    if error_coarse == error_fine:
        return 0.0
    return math.log(error_fine / error_coarse) / math.log(h_fine / h_coarse)


@dataclass
class ConvergenceRow:
    level: int
    splits: int
    h: float
    quantity: str
    norm: str
    error: float
    reference: float
    rate: object  # float, "exact" or None (first level)


def convergence_study(net: StentNetwork, orders: FeOrders, load, levels, reference_split: int,
                      method: str = "auto", exact_rtol: float = 1e-10, workers: int = 1):
    """Errors and observed rates for a list of split counts against a finer reference.

    Returns a list of :class:`ConvergenceRow`, ordered by level then quantity.
    A quantity whose relative error falls below ``exact_rtol`` reports the
    rate ``"exact"``.
    """
    levels = [int(s) for s in levels]
    if not levels or reference_split <= max(levels):
        raise ValueError("reference split must exceed every level")
    if isinstance(orders, int):
        orders = FeOrders(orders)
    ref_net = refine(net, reference_split)
    for s in levels:
        if reference_split % s:
            raise NotNestedError(f"split {s} does not divide the reference split {reference_split}")
    ref_sol = solve_static(StaticProblem(ref_net, orders, load, method=method))

    def run(s):
        coarse = refine(net, s)
        sol = solve_static(StaticProblem(coarse, orders, load, method=method))
        return error_norms(sol, ref_sol)

    if workers > 1 and len(levels) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run, levels))
    else:
        reports = [run(s) for s in levels]

    rows = []
    for lvl, (s, rep) in enumerate(zip(levels, reports)):
        for key in QUANTITIES:
            err = rep.errors[key]
            rel = rep.relative(*key)
            if rel <= exact_rtol:
                rate = "exact"
            elif lvl == 0:
                rate = None
            else:
                prev = reports[lvl - 1]
                rate = convergence_rate(prev.errors[key], err, prev.h, rep.h)
                if prev.relative(*key) <= exact_rtol:
                    rate = None
            rows.append(ConvergenceRow(lvl, s, rep.h, key[0], key[1], err, rep.reference[key], rate))
    return rows

"""Time evolution ``-E z'' + K z = F(t)``: midpoint stepping, initial data, canonical form."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import FeOrders, SaddleSystem, assemble, assemble_f, layout
from .basis import basis_primal
from .linalg import Factorization, SingularSystemError, equilibrate
from .loads import traveling_wave_load
from .network import StentNetwork

__all__ = [
    "DynamicProblem",
    "DynamicState",
    "Trajectory",
    "StepFactorization",
    "FactorizationCache",
    "InitialStateReport",
    "CanonicalForm",
    "ReducedSystem",
    "RankAmbiguityError",
    "precompute_factorization",
    "integrate_midpoint",
    "consistent_initial_state",
    "algebraic_residual",
    "canonical_form",
    "reduced_ode_rhs",
    "integrate_reduced",
    "trajectory_error",
    "traveling_wave_load",
    "interpolate_field",
]

DENSE_INIT_LIMIT = 6000


@dataclass
class DynamicProblem:
    """Evolution problem on ``[0, t_end]`` with step ``dt``.

    ``u0``/``udot0`` are nodal coefficient arrays ``(n_E, n + 1, 3)`` or
    callables of positions ``(N, 3)``; ``None`` means zero.  ``output_times``
    are sampled at the nearest step (all steps when ``None``).
    """

    network: StentNetwork
    orders: FeOrders
    load: object = None
    dt: float = 2.0**-5
    t_end: float = 12.0
    u0: object = None
    udot0: object = None
    output_times: object = None
    method: str = "auto"
    quad_points: int | None = None

    def __post_init__(self):
        if isinstance(self.orders, int):
            self.orders = FeOrders(self.orders)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < self.dt:
            raise ValueError("t_end must be at least dt")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def system(self) -> SaddleSystem:
        return assemble(self.network, self.orders)

    def rhs(self, t: float) -> np.ndarray:
        if self.load is None:
            return np.zeros(layout(self.network, self.orders).total)
        if getattr(self.load, "time_dependent", False):
            return assemble_f(self.network, self.orders, self.load, t, self.quad_points)
        return assemble_f(self.network, self.orders, self.load, None, self.quad_points)

    def rhs_rate(self, t: float) -> np.ndarray:
        """d/dt of the load vector (exact when the load provides ``derivative``)."""
        if self.load is None or not getattr(self.load, "time_dependent", False):
            return np.zeros(layout(self.network, self.orders).total)
        deriv = getattr(self.load, "derivative", None)
        if deriv is not None:
            return assemble_f(self.network, self.orders, deriv, t, self.quad_points)
        h = 1e-6 * max(self.dt, 1.0)
        return (self.rhs(t + h) - self.rhs(t - h)) / (2.0 * h)


@dataclass
class DynamicState:
    t: float
    z: np.ndarray
    zdot: np.ndarray


@dataclass
class Trajectory:
    """Sampled states; ``z``/``zdot`` have shape ``(n_samples, dim)``."""

    times: np.ndarray
    z: np.ndarray
    zdot: np.ndarray
    steps: np.ndarray
    info: dict = field(default_factory=dict)

    def state(self, i: int) -> DynamicState:
        return DynamicState(float(self.times[i]), self.z[i], self.zdot[i])

    def __len__(self):
        return len(self.times)


def interpolate_field(net: StentNetwork, orders: FeOrders, values) -> np.ndarray:
    """Nodal coefficients ``(n_E, n + 1, 3)`` from an array or a callable of positions."""
    shape = (net.n_struts, orders.n + 1, 3)
    if values is None:
        return np.zeros(shape)
    if callable(values):
        nodes = basis_primal(orders.n).nodes
        pts = net.positions[net.tails][:, None, :] + (net.lengths[:, None] * nodes)[:, :, None] * net.tangents[:, None, :]
        return np.asarray(values(pts.reshape(-1, 3)), dtype=float).reshape(shape)
    arr = np.asarray(values, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"field must have shape {shape}, got {arr.shape}")
    return arr


# ------------------------------------------------------------ factorization


@dataclass
class StepFactorization:
    """Factorization of ``-E + dt^2/4 K`` valid for one step size only."""

    dt: float
    matrix: sp.csr_matrix
    factor: Factorization
    seconds: float

    def solve(self, rhs):
        return self.factor.solve(rhs)


def step_matrix(E, K, dt: float) -> sp.csr_matrix:
    return (-E + 0.25 * dt * dt * K).tocsr()


def precompute_factorization(E, K, dt: float, method: str = "auto", scale=None) -> StepFactorization:
    """Factor ``-E + dt^2/4 K`` once; ``scale`` is an optional symmetric diagonal scaling."""
    t0 = time.perf_counter()
    mat = step_matrix(E, K, dt)
    try:
        fact = Factorization(mat, method=method, scale=scale)
    except SingularSystemError as exc:
        raise SingularSystemError(f"step matrix singular for dt={dt!r}: {exc}", exc.kernel_dimension) from exc
    return StepFactorization(float(dt), mat, fact, time.perf_counter() - t0)


class FactorizationCache:
    """Step-matrix factorizations keyed by ``dt``."""

    def __init__(self, E, K, method: str = "auto", scale=None):
        self.E, self.K, self.method, self.scale = E, K, method, scale
        self._store = {}

    def get(self, dt: float) -> StepFactorization:
        key = float(dt)
        if key not in self._store:
            self._store[key] = precompute_factorization(self.E, self.K, key, self.method, self.scale)
        return self._store[key]

    def __len__(self):
        return len(self._store)


def _fresh_solve(matrix: sp.csr_matrix, rhs, s):
    """One-off sparse solve with a new LU every call."""
    scaled = (sp.diags(s) @ matrix @ sp.diags(s)).tocsc()
    return s * spla.spsolve(scaled, s * rhs)


# ------------------------------------------------------------ initial data


@dataclass
class InitialStateReport:
    displacement_correction: float
    velocity_correction: float
    algebraic_residual: float


def algebraic_residual(K, z, F=None, layout_=None) -> float:
    """Relative residual of the non-differential rows of ``K z = F``.

    Every row except the u-rows is algebraic; the value is
    ``max |K z - F| / max(|K| |z|)`` over those rows.
    """
    K = sp.csr_matrix(K)
    lay = layout_
    r = K @ z
    if F is not None:
        r = r - F
    scale_vec = abs(K) @ np.abs(z)
    mask = np.ones(K.shape[0], dtype=bool)
    if lay is not None:
        mask[lay.slice("u")] = False
    scale = scale_vec[mask].max(initial=0.0)
    num = np.abs(r[mask]).max(initial=0.0)
    if scale == 0.0:
        return float(num)
    return float(num / scale)


def consistent_initial_state(problem: DynamicProblem, u0=None, udot0=None, system=None,
                             mass=None):
    """Complete ``u0``/``udot0`` to a consistent ``(z(0), z'(0))``.

    The user data is projected (in the mass inner product) onto the
    displacement fields compatible with the constraints; every other
    component is computed.  Returns ``(DynamicState, InitialStateReport)``.
    """
    net, orders = problem.network, problem.orders
    system = system if system is not None else problem.system()
    lay = system.layout
    u0 = interpolate_field(net, orders, u0 if u0 is not None else problem.u0).ravel()
    v0 = interpolate_field(net, orders, udot0 if udot0 is not None else problem.udot0).ravel()
    F0 = problem.rhs(0.0)
    dF0 = problem.rhs_rate(0.0)
    total = lay.total
    if not np.any(u0) and not np.any(v0) and not np.any(F0) and not np.any(dF0):
        zero = np.zeros(total)
        return DynamicState(0.0, zero, zero.copy()), InitialStateReport(0.0, 0.0, 0.0)
    if total > DENSE_INIT_LIMIT:
        raise ValueError(f"consistent initialization with nonzero data is limited to {DENSE_INIT_LIMIT} unknowns")

    # work in the dimensionless variables z = d * z_s
    d = system.scaling
    K = (sp.diags(d) @ system.matrix @ sp.diags(d)).toarray()
    E = mass if mass is not None else system.mass
    us = lay.slice("u")
    u_idx = np.arange(total)[us]
    x_idx = np.setdiff1d(np.arange(total), u_idx)
    du = d[u_idx]
    M = du[:, None] * E.toarray()[np.ix_(u_idx, u_idx)] * du[None, :]
    Kxx = K[np.ix_(x_idx, x_idx)]
    Kxu = K[np.ix_(x_idx, u_idx)]
    null = sla.null_space(Kxx, rcond=1e-10)
    C = null.T @ Kxu
    Minv_Ct = np.linalg.solve(M, C.T)
    gram = C @ Minv_Ct

    def project(u):
        if C.shape[0] == 0:
            return u
        return u - Minv_Ct @ np.linalg.solve(gram, C @ u)

    def complete(u, Fu):
        # algebraic rows fix x up to the kernel of Kxx; the hidden constraint fixes the rest
        xp = np.linalg.lstsq(Kxx, -Kxu @ u, rcond=None)[0]
        if C.shape[0]:
            rhs = Minv_Ct.T @ (Fu - Kxu.T @ xp)
            xp = xp + null @ np.linalg.solve(gram, rhs)
        out = np.zeros(total)
        out[x_idx] = xp
        out[u_idx] = u
        return d * out

    u = du * project(u0 / du)
    v = du * project(v0 / du)
    z = complete(u / du, du * F0[u_idx])
    zdot = complete(v / du, du * dF0[u_idx])
    report = InitialStateReport(float(np.linalg.norm(u - u0)), float(np.linalg.norm(v - v0)),
                                algebraic_residual(system.matrix, z, F0, lay))
    if report.displacement_correction > 0 or report.velocity_correction > 0:
        scale = max(np.linalg.norm(u0), np.linalg.norm(v0), 1e-300)
        if max(report.displacement_correction, report.velocity_correction) > 1e-12 * scale:
            warnings.warn("initial data projected onto the constraint manifold "
                          f"(corrections {report.displacement_correction:.3e}, "
                          f"{report.velocity_correction:.3e})", stacklevel=2)
    return DynamicState(0.0, z, zdot), report


# ------------------------------------------------------------ time stepping


def _sample_steps(problem: DynamicProblem) -> np.ndarray:
    n = problem.n_steps
    if problem.output_times is None:
        return np.arange(n + 1)
    times = np.asarray(problem.output_times, dtype=float)
    steps = np.clip(np.rint(times / problem.dt).astype(int), 0, n)
    return np.unique(steps)


def integrate_midpoint(problem: DynamicProblem, initial: DynamicState | None = None,
                       reuse: bool = True, factorization: StepFactorization | None = None,
                       system: SaddleSystem | None = None, check_every: int = 0) -> Trajectory:
    """Implicit midpoint rule on the first-order form with ``y = z'``.

    Each step solves ``(-E + dt^2/4 K) y1 = dt F(t + dt/2) - dt K z0 - dt^2/4 K y0 - E y0``
    and sets ``z1 = z0 + dt (y0 + y1) / 2``.  With ``reuse`` the step matrix
    is factored once; otherwise every step does a fresh sparse solve.
    ``check_every > 0`` verifies the algebraic rows every that many steps.
    """
    system = system if system is not None else problem.system()
    K = system.matrix
    E = system.mass
    lay = system.layout
    dt = float(problem.dt)
    if initial is None:
        initial, _ = consistent_initial_state(problem, system=system, mass=E)
    t_start = time.perf_counter()
    if reuse:
        if factorization is None:
            factorization = precompute_factorization(E, K, dt, problem.method, system.scaling)
        elif factorization.dt != dt:
            raise ValueError(f"factorization was built for dt={factorization.dt}, not {dt}")
        solve = factorization.solve
        t_factor = factorization.seconds
    else:
        mat = step_matrix(E, K, dt)
        t_factor = 0.0

        def solve(rhs):
            return _fresh_solve(mat, rhs, system.scaling)

    n = problem.n_steps
    samples = _sample_steps(problem)
    wanted = set(samples.tolist())
    zs, ys, ts = [], [], []
    z = initial.z.copy()
    y = initial.zdot.copy()
    if 0 in wanted:
        zs.append(z.copy()); ys.append(y.copy()); ts.append(0.0)
    time_dep = problem.load is not None and getattr(problem.load, "time_dependent", False)
    const_rhs = None if time_dep else problem.rhs(0.0)
    quarter = 0.25 * dt * dt
    t_loop = time.perf_counter()
    for m in range(n):
        t_half = (m + 0.5) * dt
        F = problem.rhs(t_half) if time_dep else const_rhs
        Kz, Ky = K @ z, K @ y
        rhs = dt * F - dt * Kz - quarter * Ky - E @ y
        y_new = solve(rhs)
        z = z + 0.5 * dt * (y + y_new)
        y = y_new
        if not np.all(np.isfinite(z)):
            raise ArithmeticError(f"non-finite state at step {m + 1} (dt={dt})")
        if check_every and (m + 1) % check_every == 0:
            res = algebraic_residual(K, z, None, lay)
            if res > 1e-8:
                raise ArithmeticError(f"algebraic residual {res:.3e} at step {m + 1}")
        if m + 1 in wanted:
            zs.append(z.copy()); ys.append(y.copy()); ts.append((m + 1) * dt)
    t_end = time.perf_counter()
    info = {
        "dimension": lay.total,
        "steps": n,
        "dt": dt,
        "reuse": reuse,
        "method": factorization.factor.method if reuse else "sparse-fresh",
        "seconds_factor": t_factor,
        "seconds_steps": t_end - t_loop,
        "seconds_total": t_end - t_start + (t_factor if reuse and factorization is not None else 0.0),
    }
    return Trajectory(np.asarray(ts), np.asarray(zs), np.asarray(ys), samples, info)


def trajectory_error(traj, reference, group: str | None = "U", layout_=None) -> float:
    """Max over shared sample times of ``|z - z_ref|_2 / max_t |z_ref|_2``.

    ``group`` restricts the comparison to one unknown group (needs ``layout_``);
    ``None`` compares full vectors.
    """
    ref_times = np.asarray(reference.times)
    idx_ref = []
    idx = []
    for i, t in enumerate(traj.times):
        j = int(np.argmin(np.abs(ref_times - t)))
        if abs(ref_times[j] - t) <= 1e-9 * max(1.0, abs(t)):
            idx.append(i)
            idx_ref.append(j)
    if not idx:
        raise ValueError("trajectories share no sample times")
    a = traj.z[idx]
    b = reference.z[idx_ref]
    if group is not None:
        if layout_ is None:
            raise ValueError("layout required to select a group")
        sl = layout_.slice(group)
        a, b = a[:, sl], b[:, sl]
    denom = np.linalg.norm(b, axis=1).max()
    diff = np.linalg.norm(a - b, axis=1).max()
    return float(diff / denom) if denom > 0 else float(diff)


# ------------------------------------------------------------ canonical form


class RankAmbiguityError(RuntimeError):
    """A singular value fell inside the ambiguity band around the rank threshold."""


def _row_space_split(mat: np.ndarray, rtol: float, band: tuple, label: str, expected: int):
    """Orthonormal bases of row space and kernel of ``mat`` with checked rank."""
    _, sv, vt = np.linalg.svd(mat, full_matrices=True)
    smax = sv[0] if sv.size else 0.0
    rank = int(np.sum(sv > rtol * smax))
    lo, hi = band
    ambiguous = [s for s in sv if lo * smax < s < hi * smax]
    if ambiguous:
        raise RankAmbiguityError(f"{label}: singular values {ambiguous} inside the ambiguity band")
    if rank != expected:
        raise RankAmbiguityError(f"{label}: numeric rank {rank}, expected {expected}")
    return vt[:rank].T, vt[rank:].T, sv


@dataclass
class CanonicalForm:
    """Congruence ``V^T (E, K) V`` in the five-group structure.

    Groups of the transformed unknown: 1 and 2 and 3 span the force space
    (compressed against the constraint rows), 4 is the displacement block,
    5 the rotation and vertex block.  ``transform`` is ``V``; ``inverse``
    maps physical vectors to transformed ones.
    """

    transform: np.ndarray
    inverse: np.ndarray
    E_hat: np.ndarray
    K_hat: np.ndarray
    groups: dict
    A22: np.ndarray
    A33: np.ndarray
    B42: np.ndarray
    B51: np.ndarray
    mass: np.ndarray
    scale: np.ndarray
    congruence_residual_k: float
    congruence_residual_e: float
    pattern_residual: float
    singular_values: dict

    def split(self, z) -> dict:
        """Transformed components ``{1: z1, ..., 5: z5}`` of a physical vector (or rows of vectors)."""
        zh = np.asarray(z) @ self.inverse.T
        return {g: zh[..., sl] for g, sl in self.groups.items()}

    def load(self, F) -> np.ndarray:
        """Transformed load in group 4."""
        return (self.transform.T @ F)[self.groups[4]]

    def z4_from_z2(self, z2) -> np.ndarray:
        z2 = np.asarray(z2)
        return -np.linalg.solve(self.B42.T, (self.A22 @ z2.T)).T

    def lift(self, z2, z2dot=None) -> np.ndarray:
        """Physical vector(s) for a given ``z2`` with the algebraic components filled in."""
        z2 = np.atleast_2d(z2)
        zh = np.zeros((z2.shape[0], self.transform.shape[0]))
        zh[:, self.groups[2]] = z2
        zh[:, self.groups[4]] = self.z4_from_z2(z2)
        return zh @ self.transform.T


def canonical_form(E, K, lay, rtol: float = 1e-10, band=(1e-12, 1e-8), scale=None) -> CanonicalForm:
    """Two-stage congruence that exposes the differential and algebraic parts.

    Stage one compresses the constraint columns with orthogonal bases of the
    row spaces of the (rotation, vertex) rows and of the displacement rows;
    stage two eliminates couplings by block elimination with ``B51`` and
    ``A33``.  The construction runs on ``diag(scale) K diag(scale)`` (Ruiz
    scaling when ``scale`` is ``None``) and the scaling is folded into ``V``.
    Dense; desk-scale systems only.
    """
    K = sp.csr_matrix(K)
    E = sp.csr_matrix(E)
    total = lay.total
    dv = lay.dim_v
    s = equilibrate(K) if scale is None else np.asarray(scale, dtype=float)
    Ks = (sp.diags(s) @ K @ sp.diags(s)).toarray()
    Es = (sp.diags(s) @ E @ sp.diags(s)).toarray()

    u_sl = lay.slice("u")
    u_rows = np.arange(u_sl.start, u_sl.stop)
    rest_rows = np.setdiff1d(np.arange(dv, total), u_rows)
    A = Ks[:dv, :dv]
    b_top = Ks[np.ix_(u_rows, np.arange(dv))]
    b_bot = Ks[np.ix_(rest_rows, np.arange(dv))]
    n4, n5 = u_rows.size, rest_rows.size

    y1, ker_bot, sv_bot = _row_space_split(b_bot, rtol, band, "rotation/vertex rows", n5)
    y2_local, y3_local, sv_top = _row_space_split(b_top @ ker_bot, rtol, band, "displacement rows", n4)
    y2 = ker_bot @ y2_local
    y3 = ker_bot @ y3_local
    Y = np.hstack([y1, y2, y3])
    n1, n2, n3 = y1.shape[1], y2.shape[1], y3.shape[1]

    # ordering of the transformed vector: (1, 2, 3 | 4 = u, 5 = rest)
    ortho = np.zeros((total, total))
    ortho[:dv, :dv] = Y
    ortho[u_rows, dv + np.arange(n4)] = 1.0
    ortho[rest_rows, dv + n4 + np.arange(n5)] = 1.0
    offs = np.cumsum([0, n1, n2, n3, n4, n5])
    groups = {g + 1: slice(int(offs[g]), int(offs[g + 1])) for g in range(5)}
    g1, g2, g3, g4, g5 = (groups[i] for i in range(1, 6))

    Kt = ortho.T @ Ks @ ortho
    B51 = Kt[g5, g1]
    B51_T_inv = np.linalg.inv(B51.T)

    N = np.zeros((total, total))
    N[g5, g1] = -0.5 * B51_T_inv @ Kt[g1, g1]
    for g in (g2, g3, g4):
        N[g5, g] = -B51_T_inv @ Kt[g1, g]
    stage_a = np.eye(total) + N
    Ka = stage_a.T @ Kt @ stage_a

    A33 = Ka[g3, g3]
    N2 = np.zeros((total, total))
    N2[g3, g2] = -np.linalg.solve(A33, Ka[g3, g2])
    stage_b = np.eye(total) + N2

    V = sp.diags(s) @ ortho @ stage_a @ stage_b
    V_inv = (np.eye(total) - N2) @ (np.eye(total) - N) @ ortho.T @ np.diag(1.0 / s)
    K_num = V.T @ K.toarray() @ V
    E_num = V.T @ E.toarray() @ V
    K_num = 0.5 * (K_num + K_num.T)

    # five-group block pattern: only these blocks may be nonzero
    allowed_k = {(1, 5), (5, 1), (2, 2), (2, 4), (4, 2), (3, 3)}
    K_hat = np.zeros_like(K_num)
    for (i, j) in allowed_k:
        K_hat[groups[i], groups[j]] = K_num[groups[i], groups[j]]
    E_hat = np.zeros_like(E_num)
    E_hat[g4, g4] = E_num[g4, g4]

    absV = np.abs(V)
    scale_k = (absV.T @ abs(K).toarray() @ absV).max()
    scale_e = (absV.T @ abs(E).toarray() @ absV).max()
    Kv = V.T @ K.toarray() @ V
    res_k = float(np.abs(Kv - K_hat).max() / scale_k)
    res_e = float(np.abs(E_num - E_hat).max() / scale_e) if scale_e > 0 else float(np.abs(E_num - E_hat).max())
    zero_mask = np.ones_like(K_num, dtype=bool)
    for (i, j) in allowed_k:
        zero_mask[groups[i], groups[j]] = False
    pattern = float(np.abs(K_num[zero_mask]).max(initial=0.0) / scale_k)

    A22 = K_hat[g2, g2]
    return CanonicalForm(
        transform=np.asarray(V), inverse=V_inv, E_hat=E_hat, K_hat=K_hat, groups=groups,
        A22=0.5 * (A22 + A22.T), A33=K_hat[g3, g3], B42=K_hat[g4, g2], B51=K_hat[g5, g1],
        mass=E_hat[g4, g4], scale=s,
        congruence_residual_k=res_k, congruence_residual_e=res_e, pattern_residual=pattern,
        singular_values={"rotation_vertex_rows": sv_bot, "displacement_rows": sv_top},
    )


@dataclass
class ReducedSystem:
    """``A22 z2'' = -S z2 + G(F4)`` with ``S = B42^T M^-1 B42`` and ``G = B42^T M^-1 F4``."""

    A22: np.ndarray
    stiffness: np.ndarray
    coupling: np.ndarray   # B42^T M^-1

    def __call__(self, z2, f4) -> np.ndarray:
        return -self.stiffness @ np.asarray(z2) + self.coupling @ np.asarray(f4)


def reduced_ode_rhs(cf: CanonicalForm) -> ReducedSystem:
    minv_b = np.linalg.solve(cf.mass, cf.B42)
    stiff = cf.B42.T @ minv_b
    return ReducedSystem(cf.A22, 0.5 * (stiff + stiff.T), minv_b.T)


def integrate_reduced(problem: DynamicProblem, cf: CanonicalForm, z2_0=None, z2dot_0=None) -> Trajectory:
    """Midpoint rule on the reduced second-order system, lifted back to physical vectors."""
    red = reduced_ode_rhs(cf)
    dt = float(problem.dt)
    n2 = cf.A22.shape[0]
    z = np.zeros(n2) if z2_0 is None else np.asarray(z2_0, float).copy()
    w = np.zeros(n2) if z2dot_0 is None else np.asarray(z2dot_0, float).copy()
    quarter = 0.25 * dt * dt
    lhs = cf.A22 + quarter * red.stiffness
    fac = sla.lu_factor(lhs)
    rhs_mat = cf.A22 - quarter * red.stiffness
    samples = _sample_steps(problem)
    wanted = set(samples.tolist())
    zs, ws, ts = [], [], []
    if 0 in wanted:
        zs.append(z.copy()); ws.append(w.copy()); ts.append(0.0)
    for m in range(problem.n_steps):
        f4 = cf.load(problem.rhs((m + 0.5) * dt))
        w_new = sla.lu_solve(fac, rhs_mat @ w - dt * red.stiffness @ z + dt * (red.coupling @ f4))
        z = z + 0.5 * dt * (w + w_new)
        w = w_new
        if m + 1 in wanted:
            zs.append(z.copy()); ws.append(w.copy()); ts.append((m + 1) * dt)
    zs = np.asarray(zs)
    ws = np.asarray(ws)
    z_full = cf.lift(zs)
    zdot_full = cf.lift(ws)
    return Trajectory(np.asarray(ts), z_full, zdot_full, samples, {"reduced_dimension": n2})

"""Command-line interface: ``strutnet {generate,static,converge,dynamic,analyze-dae}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io as sio
from .assembly import FeOrders, assemble
from .dynamics import (DynamicProblem, canonical_form, consistent_initial_state, integrate_midpoint,
                       reduced_ode_rhs, RankAmbiguityError)
from .linalg import SingularSystemError
from .loads import LOAD_NAMES, named_load
from .network import load_network, palmaz, refine, save_network, zigzag_cylinder, PALMAZ_RADIUS, PALMAZ_LENGTH
from .rod import CrossSection, Material
from .static import StaticProblem, check_solution, convergence_study, solve_static

log = logging.getLogger("strutnet")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_SINGULAR = 3
EXIT_CHECK_FAILED = 4


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("STRUTNET_THREADS")
    n = requested or 1
    if cap:
        try:
            n = min(n, max(1, int(cap))) if requested else max(1, int(cap))
        except ValueError:
            log.warning("ignoring non-integer STRUTNET_THREADS=%r", cap)
    return n


def _network_length(net) -> float:
    return float(np.ptp(net.positions[:, 0]))


def _load_from_args(args, net):
    params = {}
    if getattr(args, "amplitude", None) is not None:
        params["amplitude"] = args.amplitude
    if args.load == "constant":
        params["value"] = tuple(args.value)
    if args.load == "traveling-wave":
        for key in ("speed", "delay", "half_width"):
            if getattr(args, key, None) is not None:
                params[key] = getattr(args, key)
    return named_load(args.load, _network_length(net), **params)


def _prepare_network(args):
    net = load_network(args.network)
    if args.split > 1:
        net = refine(net, args.split)
    return net


def _formats(spec: str) -> set:
    out = {s.strip() for s in spec.split(",") if s.strip()}
    bad = out - {"csv", "vtk", "triplet"}
    if bad:
        raise SystemExit(f"unknown output format(s): {', '.join(sorted(bad))}")
    return out


# ---------------------------------------------------------------- commands


def cmd_generate(args) -> int:
    section = CrossSection(args.width, args.thickness if args.thickness else args.width)
    if args.shear is not None:
        material = Material(args.young, args.shear, args.density)
    else:
        material = Material.from_poisson(args.young, args.poisson, args.density)
    if args.palmaz:
        net = palmaz(section, material)
    else:
        n_circ, n_long = args.cylinder
        net = zigzag_cylinder(n_circ, n_long, args.radius, args.length, not args.no_end_ring, section, material)
    if args.split > 1:
        net = refine(net, args.split)
    save_network(net, args.output)
    print(f"vertices {net.n_vertices}")
    print(f"struts {net.n_struts}")
    print(f"total_length {sio.fmt(net.total_length)}")
    return EXIT_OK


def cmd_static(args) -> int:
    net = _prepare_network(args)
    orders = FeOrders(args.k)
    load = _load_from_args(args, net)
    out = Path(args.out)
    formats = _formats(args.format)
    problem = StaticProblem(net, orders, load, method=args.method)
    system = problem.assemble()
    print(f"dimension {system.layout.total}")
    if "triplet" in formats:
        sio.write_triplets(out / "matrix.txt", system.matrix)
    sol = solve_static(problem)
    print(f"residual {sol.info.residual:.3e} raw {sol.info.residual_raw:.3e}")
    print(f"factorization {sol.info.method} min_pivot {sol.info.min_pivot:.3e}")
    diag = check_solution(net, sol)
    for name, value, scale in diag.items():
        print(f"{name} {value:.3e} (scale {scale:.3e})")
    if "csv" in formats:
        sio.write_solution_csv(out / "solution.csv", sol, samples=args.samples)
    if "vtk" in formats:
        sio.write_vtk(out / "deformed.vtk", net, sol.u, scale=args.vtk_scale, samples=args.samples)
    if not diag.passed():
        print("constraint residual check failed", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_converge(args) -> int:
    net = load_network(args.network)
    load = _load_from_args(args, net)
    rows = convergence_study(net, FeOrders(args.k), load, args.levels, args.reference,
                             method=args.method, workers=worker_count(len(args.levels)))
    path = sio.write_errors_csv(Path(args.out) / "errors.csv", rows)
    for r in rows:
        rate = "" if r.rate is None else (r.rate if isinstance(r.rate, str) else f"{r.rate:.3f}")
        print(f"split {r.splits:4d} h {r.h:.4e} {r.quantity:>6s} {r.norm:>3s} {r.error:.6e} {rate}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_dynamic(args) -> int:
    net = _prepare_network(args)
    orders = FeOrders(args.k)
    load = _load_from_args(args, net)
    out = Path(args.out)
    snapshots = [float(t) for t in args.snapshots] if args.snapshots else []
    sample_every = args.sample_every if args.sample_every else args.dt
    times = np.union1d(np.arange(0.0, args.t_end + 0.5 * args.dt, sample_every), snapshots)
    problem = DynamicProblem(net, orders, load, dt=args.dt, t_end=args.t_end, output_times=times,
                             method=args.method)
    t0 = time.perf_counter()
    system = problem.system()
    t_asm = time.perf_counter() - t0
    lay = system.layout
    print(f"dimension {lay.total}")
    t0 = time.perf_counter()
    initial, report = consistent_initial_state(problem, system=system)
    t_init = time.perf_counter() - t0
    if report.displacement_correction or report.velocity_correction:
        print(f"warning: initial data corrected by {report.displacement_correction:.3e} / "
              f"{report.velocity_correction:.3e}", file=sys.stderr)
    traj = integrate_midpoint(problem, initial, reuse=(args.ldlt_reuse == "on"), system=system,
                              check_every=args.check_every)
    sio.write_trajectory_csv(out / "trajectory.csv", traj, lay)
    for t in snapshots:
        k = int(np.argmin(np.abs(traj.times - t)))
        u = traj.z[k, lay.slice("u")].reshape(net.n_struts, orders.n + 1, 3)
        sio.write_vtk(out / f"snapshot_t{t:g}.vtk", net, u, scale=args.vtk_scale,
                      title=f"t = {traj.times[k]:g}")
    info = traj.info
    timings = [("assemble", t_asm, lay.total), ("initial_state", t_init, lay.total),
               ("factorization", info["seconds_factor"], lay.total),
               ("time_steps", info["seconds_steps"], info["steps"])]
    sio.write_timings_csv(out / "timings.csv", timings)
    print(f"steps {info['steps']} reuse {args.ldlt_reuse} factor {info['seconds_factor']:.3f}s "
          f"steps {info['seconds_steps']:.3f}s")
    print(f"max_abs_U {np.abs(traj.z[:, lay.slice('U')]).max():.6e}")
    status = EXIT_OK
    if args.canonical_check:
        cf = canonical_form(system.mass, system.matrix, lay, scale=system.scaling)
        zh = traj.z @ cf.inverse.T
        norms = np.linalg.norm(zh, axis=1)
        worst = {}
        for g in (1, 3, 5):
            part = np.linalg.norm(zh[:, cf.groups[g]], axis=1)
            rel = np.where(norms > 0, part / np.where(norms > 0, norms, 1.0), part)
            worst[g] = float(rel.max(initial=0.0))
            print(f"max_rel_zhat{g} {worst[g]:.3e}")
        print(f"congruence_residual {cf.congruence_residual_k:.3e}")
        if max(worst.values()) > 1e-8 or cf.congruence_residual_k > 1e-10:
            status = EXIT_CHECK_FAILED
    return status


def cmd_analyze_dae(args) -> int:
    net = _prepare_network(args)
    system = assemble(net, FeOrders(args.k))
    lay = system.layout
    cf = canonical_form(system.mass, system.matrix, lay, scale=system.scaling)
    red = reduced_ode_rhs(cf)
    print(f"dimension {lay.total}")
    for g, sl in cf.groups.items():
        print(f"group{g} {sl.stop - sl.start}")
    print(f"congruence_residual_K {cf.congruence_residual_k:.3e}")
    print(f"congruence_residual_E {cf.congruence_residual_e:.3e}")
    print(f"pattern_residual {cf.pattern_residual:.3e}")
    sv42 = np.linalg.svd(cf.B42, compute_uv=False)
    sv51 = np.linalg.svd(cf.B51, compute_uv=False)
    print(f"sigma_min_B42 {sv42.min():.3e}")
    print(f"sigma_min_B51 {sv51.min():.3e}")
    eig = np.linalg.eigvalsh(red.stiffness)
    print(f"reduced_stiffness_eig_min {eig.min():.3e}")
    rank_a22 = int(np.sum(np.linalg.eigvalsh(cf.A22) > 1e-10 * max(np.abs(cf.A22).max(), 1e-300)))
    print(f"differential_dimension {rank_a22}")
    ok = cf.congruence_residual_k <= 1e-10 and cf.pattern_residual <= 1e-10 and eig.min() > 0
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# ---------------------------------------------------------------- parser


def _add_load_args(p, default):
    p.add_argument("--load", choices=LOAD_NAMES, default=default)
    p.add_argument("--amplitude", type=float, default=None, help="load amplitude override")
    p.add_argument("--value", type=float, nargs=3, default=(0.0, 1.0, 0.0), metavar=("F1", "F2", "F3"),
                   help="force density for --load constant")


def _add_solve_args(p):
    p.add_argument("network", help="network JSON file")
    p.add_argument("-k", type=int, default=1, help="multiplier degree (displacements use k + 1)")
    p.add_argument("--method", choices=("auto", "dense", "sparse"), default="auto")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="strutnet", description="Mixed finite elements for elastic strut networks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a network JSON file")
    which = g.add_mutually_exclusive_group(required=True)
    which.add_argument("--palmaz", action="store_true", help="12 x 12 zigzag cylinder with an end ring")
    which.add_argument("--cylinder", type=int, nargs=2, metavar=("N_CIRC", "N_LONG"))
    g.add_argument("--radius", type=float, default=PALMAZ_RADIUS)
    g.add_argument("--length", type=float, default=PALMAZ_LENGTH)
    g.add_argument("--no-end-ring", action="store_true")
    g.add_argument("--width", type=float, default=1e-4)
    g.add_argument("--thickness", type=float, default=None)
    g.add_argument("--young", type=float, default=2.1e11)
    g.add_argument("--poisson", type=float, default=0.26506)
    g.add_argument("--shear", type=float, default=None, help="shear modulus (overrides --poisson)")
    g.add_argument("--density", type=float, default=0.0)
    g.add_argument("--split", type=int, default=1)
    g.add_argument("-o", "--output", default="network.json")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("static", help="solve the stationary problem")
    _add_solve_args(s)
    _add_load_args(s, "f1")
    s.add_argument("--split", type=int, default=1)
    s.add_argument("--out", default="out")
    s.add_argument("--format", default="csv,vtk", help="comma list of csv, vtk, triplet")
    s.add_argument("--samples", type=int, default=5, help="sample points per strut in outputs")
    s.add_argument("--vtk-scale", type=float, default=1.0)
    s.set_defaults(func=cmd_static)

    c = sub.add_parser("converge", help="errors and rates against a refined reference")
    _add_solve_args(c)
    _add_load_args(c, "radial")
    c.add_argument("--levels", type=int, nargs="+", default=[1, 2, 4, 8])
    c.add_argument("--reference", type=int, default=32)
    c.add_argument("--out", default="out")
    c.set_defaults(func=cmd_converge)

    d = sub.add_parser("dynamic", help="integrate the evolution problem")
    _add_solve_args(d)
    _add_load_args(d, "traveling-wave")
    d.add_argument("--speed", type=float, default=None)
    d.add_argument("--delay", type=float, default=None)
    d.add_argument("--half-width", dest="half_width", type=float, default=None)
    d.add_argument("--split", type=int, default=1)
    d.add_argument("--dt", type=float, default=2.0**-5)
    d.add_argument("--t-end", dest="t_end", type=float, default=12.0)
    d.add_argument("--sample-every", type=float, default=None, help="trajectory sampling interval")
    d.add_argument("--snapshots", type=float, nargs="*", default=[1, 2, 3, 4, 5, 6])
    d.add_argument("--ldlt-reuse", choices=("on", "off"), default="on")
    d.add_argument("--canonical-check", action="store_true")
    d.add_argument("--check-every", type=int, default=0, help="verify algebraic rows every N steps")
    d.add_argument("--vtk-scale", type=float, default=1.0)
    d.add_argument("--out", default="out")
    d.set_defaults(func=cmd_dynamic)

    a = sub.add_parser("analyze-dae", help="canonical form of the evolution pencil")
    a.add_argument("network")
    a.add_argument("-k", type=int, default=1)
    a.add_argument("--split", type=int, default=1)
    a.set_defaults(func=cmd_analyze_dae)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except SingularSystemError as exc:
        print(f"singular system: {exc}", file=sys.stderr)
        if exc.kernel_dimension is not None:
            print(f"kernel_dimension {exc.kernel_dimension}", file=sys.stderr)
        return EXIT_SINGULAR
    except RankAmbiguityError as exc:
        print(f"rank decision ambiguous: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except ArithmeticError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Command line front end.

Subcommands:

    partition verify   partition-of-unity deviation on a lattice
    besov              Besov norm of a field stored in a .vdsf file
    green decay        L^2 decay curve of the 2x2 mode semigroup
    green sumbound     three-part split of the dyadic exponential sum
    simulate           nonlinear run driven by an INI config
    decay fit          log-log slope fit of a CSV column

Exit codes: 0 success, 1 a requested verification failed, 2 usage
error, 3 the nonlinear run left the resolvable regime.  All file
outputs are written atomically and reruns with equal arguments produce
byte-identical artifacts.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import fileio
from .config import RunConfig
from .green import GreenParams, radial_decay_quadrature, sum_bound_scan
from .harness import (DecayExperiment, PROFILE_NAMES, fit_slope, initial_pair,
                      run_experiment)
from .lattice import Lattice, SpectralField, VectorField, MatrixField, dft_forward
from .littlewood_paley import (BesovSpec, besov_norm, bump_chi, bump_phi,
                               build_partition)
from .solver import BlowUpError, simulate

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_BLOWUP = 3


def _times_from_args(args) -> np.ndarray:
    if args.t_min <= 0 and args.log_times:
        raise SystemExit("--t-min must be positive for logarithmic spacing")
    if args.num_times < 1:
        raise SystemExit("--num-times must be at least 1")
    if args.log_times:
        return np.geomspace(args.t_min, args.t_max, args.num_times)
    return np.linspace(args.t_min, args.t_max, args.num_times)


def _add_time_grid(p, t_min, t_max, num, log_default=True):
    p.add_argument("--t-min", type=float, default=t_min)
    p.add_argument("--t-max", type=float, default=t_max)
    p.add_argument("--num-times", type=int, default=num)
    p.add_argument("--linear-times", dest="log_times", action="store_false",
                   help="evenly spaced instead of logarithmic times")
    p.set_defaults(log_times=log_default)


def cmd_partition_verify(args) -> int:
    lat = Lattice(args.dim, args.points, args.period)
    partition = build_partition(lat)
    r = lat.xi_mag
    total = np.zeros(lat.shape)
    for q in partition.qs(homogeneous=True):
        total += bump_phi(r * 2.0 ** (-q))
    nonzero = r > 0
    dev_h = float(np.abs(total[nonzero] - 1.0).max())
    total_in = bump_chi(r).copy()
    for q in range(0, partition.q_max + 1):
        total_in += bump_phi(r * 2.0 ** (-q))
    dev_i = float(np.abs(total_in - 1.0).max())
    dev = max(dev_h, dev_i)
    print(f"blocks q = {partition.q_min} .. {partition.q_max}")
    print(f"homogeneous deviation   {dev_h:.3e}")
    print(f"inhomogeneous deviation {dev_i:.3e}")
    if dev > args.tol:
        print(f"FAIL: deviation {dev:.3e} exceeds tolerance {args.tol:.3e}")
        return EXIT_VERIFY
    print(f"PASS: deviation {dev:.3e} within tolerance {args.tol:.3e}")
    return EXIT_OK


def _load_field_group(path: str, name: str):
    dim, n, period, fields = fileio.read_vdsf(path)
    lat = Lattice(dim, n, period)
    exact = [arr for fname, arr in fields if fname == name]
    if exact:
        return dft_forward(exact[0], lat)
    group = [(fname, arr) for fname, arr in fields
             if fname.startswith(name) and fname[len(name):].isdigit()]
    if not group:
        known = ", ".join(fname for fname, _ in fields)
        raise SystemExit(f"field {name!r} not in {path} (has: {known})")
    group.sort(key=lambda item: item[0])
    comps = tuple(dft_forward(arr, lat) for _, arr in group)
    d = lat.dim
    if len(comps) == d:
        return VectorField(comps)
    if len(comps) == d * d:
        rows = tuple(tuple(comps[d * i + j] for j in range(d)) for i in range(d))
        return MatrixField(rows)
    return list(comps)


def cmd_besov(args) -> int:
    obj = _load_field_group(args.input, args.field)
    lat = obj.lattice if isinstance(obj, (SpectralField, VectorField, MatrixField)) \
        else obj[0].lattice
    partition = build_partition(lat)
    spec = BesovSpec(args.s, args.p, args.r, homogeneous=not args.inhomogeneous)
    value = besov_norm(obj, spec, partition)
    print(f"{value:.12e}")
    return EXIT_OK


def cmd_green_decay(args) -> int:
    params = GreenParams(args.alpha, args.beta, args.kappa)
    times = _times_from_args(args)
    exp = DecayExperiment(kind=args.kind, params=params, dim=args.dim,
                          profile=args.profile, weights=(args.w1, args.w2),
                          r_cut=args.r_cut, points_per_dim=args.points,
                          period=args.period)
    if exp.kind == "quadrature" and args.jobs > 1:
        pair = initial_pair(exp.profile, exp.dim, exp.weights)
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            values = list(pool.map(
                lambda t: radial_decay_quadrature(params, pair, exp.dim,
                                                  float(t), exp.r_cut),
                times))
        values = np.asarray(values)
    else:
        values = run_experiment(exp, times)
    rows = [(float(t), float(v)) for t, v in zip(times, values)]
    if args.out:
        fileio.write_csv(args.out, ["t", "value"], rows)
        print(f"wrote {args.out} ({len(rows)} rows)")
    else:
        for t, v in rows:
            print(f"{t:.6e} {v:.12e}")
    fit = fit_slope(times, values)
    print(f"slope {fit.slope:+.4f}  r2 {fit.r_squared:.6f}")
    return EXIT_OK


def cmd_green_sumbound(args) -> int:
    times = _times_from_args(args)
    rows = sum_bound_scan(args.theta, args.r_index, times)
    if args.out:
        fileio.write_csv(args.out, ["t", "S", "I", "II", "III"], rows)
        print(f"wrote {args.out} ({len(rows)} rows)")
    sup = max(r[1] for r in rows)
    sup_i = max(r[2] for r in rows)
    print(f"sup S {sup:.6f}  sup I {sup_i:.6f}  (R + 1 = {args.r_index + 1})")
    if args.max is not None and sup > args.max:
        print(f"FAIL: sup S {sup:.6f} exceeds {args.max:.6f}")
        return EXIT_VERIFY
    return EXIT_OK


def _state_fields(state):
    d = state.lattice.dim
    out = [("a", state.a.physical())]
    for i in range(d):
        out.append((f"v{i}", state.v[i].physical()))
    for i in range(d):
        for j in range(d):
            out.append((f"F{i}{j}", state.F[i, j].physical()))
    return out


def cmd_simulate(args) -> int:
    cfg = RunConfig.from_file(args.config)
    os.makedirs(args.out_dir, exist_ok=True)
    fileio.atomic_write_text(os.path.join(args.out_dir, "resolved.ini"),
                             cfg.resolved_text())
    lat = cfg.lattice()
    state = cfg.initial_state()

    def observer(t, st):
        name = f"state_t{t:012.6f}.vdsf"
        fileio.write_vdsf(os.path.join(args.out_dir, name), lat.dim, lat.n,
                          lat.period, _state_fields(st))

    header = ["t", "mass", "l2_a", "l2_v", "l2_F", "res_det", "res_div",
              "res_curl", "res_divUoverDet", "M1", "M2", "M3", "M4", "M"]

    def write_series(result):
        rows = [[t] + [result.series[c][i] for c in header[1:]]
                for i, t in enumerate(result.times)]
        fileio.write_csv(os.path.join(args.out_dir, "timeseries.csv"),
                         header, rows)

    try:
        result = simulate(state, cfg.physical_params(), cfg.solver_config(),
                          observer=observer if cfg.snapshot_stride > 0 else None)
    except BlowUpError as err:
        if err.partial is not None:
            write_series(err.partial)
        print(f"blow-up: {err}", file=sys.stderr)
        return EXIT_BLOWUP
    write_series(result)
    fileio.write_vdsf(os.path.join(args.out_dir, "state_final.vdsf"),
                      lat.dim, lat.n, lat.period,
                      _state_fields(result.final_state))
    print(f"completed t = {result.final_time:g}, "
          f"{len(result.times)} series rows -> {args.out_dir}")
    return EXIT_OK


def cmd_decay_fit(args) -> int:
    header, rows = fileio.read_csv(args.input)
    if args.column not in header:
        raise SystemExit(f"column {args.column!r} not in {args.input} "
                         f"(has: {', '.join(header)})")
    tcol = header.index("t")
    vcol = header.index(args.column)
    t = np.array([r[tcol] for r in rows])
    v = np.array([r[vcol] for r in rows])
    keep = v > 0
    window = None
    if args.t_min is not None or args.t_max is not None:
        window = (args.t_min if args.t_min is not None else -math.inf,
                  args.t_max if args.t_max is not None else math.inf)
    fit = fit_slope(t[keep], v[keep], window)
    print(f"column {args.column}: slope {fit.slope:+.6f}  "
          f"intercept {fit.intercept:+.6f}  r2 {fit.r_squared:.6f}  "
          f"points {fit.n_points}")
    if args.expect is not None and abs(fit.slope - args.expect) > args.slope_tol:
        print(f"FAIL: slope {fit.slope:+.6f} not within {args.slope_tol} "
              f"of {args.expect:+.6f}")
        return EXIT_VERIFY
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vedlab",
        description="spectral laboratory for a damped compressible system")
    sub = parser.add_subparsers(dest="command", required=True)

    p_part = sub.add_parser("partition", help="dyadic partition checks")
    part_sub = p_part.add_subparsers(dest="subcommand", required=True)
    pv = part_sub.add_parser("verify", help="partition-of-unity deviation")
    pv.add_argument("--dim", type=int, default=3)
    pv.add_argument("--points", type=int, default=32)
    pv.add_argument("--period", type=float, default=2.0 * math.pi)
    pv.add_argument("--tol", type=float, default=1e-10)
    pv.set_defaults(func=cmd_partition_verify)

    pb = sub.add_parser("besov", help="Besov norm of a stored field")
    pb.add_argument("--input", required=True)
    pb.add_argument("--field", required=True,
                    help="field name or component prefix (a, v, F, ...)")
    pb.add_argument("--s", type=float, required=True)
    pb.add_argument("--p", type=float, default=2.0)
    pb.add_argument("--r", type=float, default=1.0)
    pb.add_argument("--inhomogeneous", action="store_true")
    pb.set_defaults(func=cmd_besov)

    p_green = sub.add_parser("green", help="2x2 mode semigroup studies")
    green_sub = p_green.add_subparsers(dest="subcommand", required=True)
    gd = green_sub.add_parser("decay", help="L^2 decay curve")
    gd.add_argument("--alpha", type=float, required=True)
    gd.add_argument("--beta", type=float, required=True)
    gd.add_argument("--kappa", type=float, required=True)
    gd.add_argument("--dim", type=int, default=3)
    gd.add_argument("--profile", choices=PROFILE_NAMES, default="gaussian")
    gd.add_argument("--kind", choices=("quadrature", "lattice"),
                    default="quadrature")
    gd.add_argument("--w1", type=float, default=1.0)
    gd.add_argument("--w2", type=float, default=1.0)
    gd.add_argument("--r-cut", type=float, default=10.0)
    gd.add_argument("--points", type=int, default=64)
    gd.add_argument("--period", type=float, default=2.0 * math.pi * 16.0)
    gd.add_argument("--jobs", type=int, default=1)
    gd.add_argument("--out", default=None)
    _add_time_grid(gd, 1e2, 1e4, 41)
    gd.set_defaults(func=cmd_green_decay)

    gs = green_sub.add_parser("sumbound", help="dyadic exponential sum split")
    gs.add_argument("--theta", type=float, required=True)
    gs.add_argument("--r-index", type=int, required=True)
    gs.add_argument("--max", type=float, default=None,
                    help="fail (exit 1) if sup S exceeds this")
    gs.add_argument("--out", default=None)
    _add_time_grid(gs, 1e-2, 1e6, 41)
    gs.set_defaults(func=cmd_green_sumbound)

    ps = sub.add_parser("simulate", help="nonlinear run from an INI config")
    ps.add_argument("--config", required=True)
    ps.add_argument("--out-dir", required=True)
    ps.set_defaults(func=cmd_simulate)

    p_decay = sub.add_parser("decay", help="decay-rate tools")
    decay_sub = p_decay.add_subparsers(dest="subcommand", required=True)
    df = decay_sub.add_parser("fit", help="log-log slope of a CSV column")
    df.add_argument("--input", required=True)
    df.add_argument("--column", default="value")
    df.add_argument("--t-min", type=float, default=None)
    df.add_argument("--t-max", type=float, default=None)
    df.add_argument("--expect", type=float, default=None)
    df.add_argument("--slope-tol", type=float, default=0.05)
    df.set_defaults(func=cmd_decay_fit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

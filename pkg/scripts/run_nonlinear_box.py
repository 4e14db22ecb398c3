"""Run the nonlinear box solver and summarize constraint drift and decay.

Marches the compressible system from seeded band-limited displacement
data, then reports peak geometric-constraint residuals, mass drift,
and the range of each weighted decay functional over the run.

Usage:
    python3 scripts/run_nonlinear_box.py
    python3 scripts/run_nonlinear_box.py --config run.ini --out-dir runs/box
    python3 scripts/run_nonlinear_box.py --points 16 --dt 2e-3 --t-end 0.5
"""
import argparse
import dataclasses
import os

import numpy as np

from vedlab import fileio
from vedlab.config import RunConfig
from vedlab.solver import BlowUpError, simulate

RES_KEYS = ("res_det", "res_div", "res_curl", "res_divUoverDet")
DECAY_KEYS = ("M1", "M2", "M3", "M4", "M")
SERIES_HEADER = ["t", "mass", "l2_a", "l2_v", "l2_F", "res_det", "res_div",
                 "res_curl", "res_divUoverDet", "M1", "M2", "M3", "M4", "M"]


def write_artifacts(result, cfg, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    fileio.atomic_write_text(os.path.join(out_dir, "resolved.ini"),
                             cfg.resolved_text())
    rows = [[t] + [result.series[c][i] for c in SERIES_HEADER[1:]]
            for i, t in enumerate(result.times)]
    fileio.write_csv(os.path.join(out_dir, "timeseries.csv"),
                     SERIES_HEADER, rows)
    st = result.final_state
    lat = st.lattice
    fields = [("a", st.a.physical())]
    fields += [(f"v{i}", st.v[i].physical()) for i in range(lat.dim)]
    fields += [(f"F{i}{j}", st.F[i, j].physical())
               for i in range(lat.dim) for j in range(lat.dim)]
    fileio.write_vdsf(os.path.join(out_dir, "state_final.vdsf"),
                      lat.dim, lat.n, lat.period, fields)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=None, help="INI file; flags override it")
    ap.add_argument("--points", type=int, default=None)
    ap.add_argument("--amplitude", type=float, default=None)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--dt", type=float, default=None)
    ap.add_argument("--t-end", type=float, default=None)
    ap.add_argument("--series-stride", type=int, default=None)
    ap.add_argument("--out-dir", default=None)
    args = ap.parse_args(argv)

    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {k: getattr(args, k) for k in
                 ("points", "amplitude", "seed", "dt", "t_end", "series_stride")
                 if getattr(args, k) is not None}
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)

    state = cfg.initial_state()
    try:
        result = simulate(state, cfg.physical_params(), cfg.solver_config())
    except BlowUpError as exc:
        print(f"blow-up at t = {exc.t:g}: {exc.reason}")
        result = exc.partial

    times = np.asarray(result.times)
    masses = np.asarray(result.series["mass"])
    print(f"status {result.status}, {len(times)} recorded times, "
          f"final t = {result.final_time:g}")
    print(f"mass drift      {np.abs(masses - masses[0]).max():.3e}")
    for key in RES_KEYS:
        print(f"{key:15s} peak {max(result.series[key]):.3e}")
    for key in DECAY_KEYS:
        vals = result.series[key]
        print(f"{key:15s} first {vals[0]:.6e}  last {vals[-1]:.6e}  "
              f"peak {max(vals):.6e}")

    if args.out_dir:
        write_artifacts(result, cfg, args.out_dir)
        print(f"wrote artifacts to {args.out_dir}")


if __name__ == "__main__":
    main()

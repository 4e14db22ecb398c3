"""End-to-end acceptance checks.

Each test covers one numbered criterion, prints exactly one
PASS/FAIL line (bypassing capture), and asserts the stated
tolerances and runtime budget.  Criterion 5 marches 10^4 steps of
the 32^3 nonlinear solver and dominates the suite's runtime.
"""
import math
import os
import time

import numpy as np

from vedlab import (
    BesovSpec,
    GreenParams,
    HybridSpec,
    Lattice,
    PhysicalParams,
    SolverConfig,
    apply_semigroup,
    band_limited_displacement,
    besov_norm,
    build_partition,
    bump_chi,
    bump_phi,
    dft_forward,
    fit_slope,
    green_hat,
    high_freq_energy,
    hybrid_norm,
    init_from_displacement,
    initial_pair,
    l2_norm_spectral,
    leray_div,
    ode_oracle,
    radial_decay_quadrature,
    simulate,
    step,
    sum_bound_scan,
    trig_band_state,
)
from vedlab.cli import main as cli_main
from vedlab.green import green_entries_scalar

PRESETS = (GreenParams(1.0, 2.0, 1.0),
           GreenParams(2.0, 1.0, 1.5),
           GreenParams(1.0, 1.0, 1.0))

# frozen equivalence constant for criterion 8 (measured 3.7474 on both
# the 32^3 and 64^3 lattices, identical to rounding)
D1 = 3.75

# wavevector shells |k|^2 whose frequencies 32|k| land in block q
BAND_SHELLS = {4: (1,), 5: (2, 4), 6: (8, 9), 7: (29, 36), 8: (121, 144)}


def report(capsys, n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    with capsys.disabled():
        print(line)
    assert ok, line


class Clock:
    """Budget clock: asserts run against process CPU time.

    The budgets bound what the algorithms cost. Asserting CPU time
    discounts periods where this process is descheduled by competing
    load, which the suite cannot control; wall time is reported
    alongside but not asserted. Hypervisor-level frequency or credit
    throttling slows the CPU clock itself and is indistinguishable
    from algorithm cost from inside the guest, so neither clock can
    filter it out.
    """

    def __init__(self):
        self.w0 = time.perf_counter()
        self.c0 = time.process_time()

    @property
    def cpu(self):
        return time.process_time() - self.c0

    def text(self, budget):
        cpu = self.cpu
        wall = time.perf_counter() - self.w0
        if wall - cpu > 0.10 * max(cpu, 1.0):
            return f"cpu {cpu:.1f}s (wall {wall:.1f}s) < {budget:g}s"
        return f"{cpu:.2f}s < {budget:g}s"


def random_field(lat, rng, zero_mean=True):
    vals = rng.standard_normal(lat.shape)
    f = dft_forward(vals, lat)
    coeffs = f.coeffs * (1.0 / (1.0 + (lat.xi_mag / lat.xi_min) ** 2))
    if zero_mean:
        coeffs[(0,) * lat.dim] = 0.0
    from vedlab import SpectralField
    return dft_forward(SpectralField(lat, coeffs, True).physical(), lat)


def test_criterion_1_linear_decay_slope(capsys):
    times = np.geomspace(1e2, 1e4, 17)
    pair = initial_pair("gaussian", 3)
    slopes, worst_rt = [], 0.0
    for params in PRESETS:
        t0 = time.process_time()
        values = np.array([radial_decay_quadrature(params, pair, 3, float(t))
                           for t in times])
        worst_rt = max(worst_rt, time.process_time() - t0)
        slopes.append(fit_slope(times, values).slope)
    ok = all(-0.80 <= s <= -0.70 for s in slopes) and worst_rt < 10.0
    report(capsys, 1, ok,
           f"slopes {[round(s, 4) for s in slopes]} in [-0.80, -0.70], "
           f"max per-preset cpu {worst_rt:.2f}s < 10s")


def test_criterion_2_summation_bound(capsys):
    clock = Clock()
    times = np.geomspace(1e-2, 1e6, 41)
    rows = sum_bound_scan(1.0, 10, times)
    sup_s = max(r[1] for r in rows)
    sup_i = max(r[2] for r in rows)
    ok = sup_s <= 10.0 and sup_i <= 11.0 and clock.cpu < 1.0
    report(capsys, 2, ok,
           f"sup S {sup_s:.3f} <= 10, sup I {sup_i:.3f} <= R+1 = 11, "
           f"runtime {clock.text(1)}")


def test_criterion_3_green_matrix_exactness(capsys):
    clock = Clock()
    rng = np.random.default_rng(321)
    checks = []

    # identity at t = 0, exactly
    for params in PRESETS:
        r = np.geomspace(1e-4, 50.0, 40)
        G = green_hat(params, r, np.zeros_like(r))
        exact = (np.all(G.g11 == 1.0) and np.all(G.g22 == 1.0)
                 and np.all(G.g12 == 0.0) and np.all(G.g21 == 0.0))
        checks.append((exact, "identity at t = 0"))

    # semigroup property on 1000 random triples
    worst_semi = 0.0
    for i, params in enumerate(PRESETS):
        m = 334 if i == 0 else 333
        r = rng.uniform(1e-3, 20.0, m)
        t = rng.uniform(0.0, 5.0, m)
        s = rng.uniform(0.0, 5.0, m)
        prod = np.einsum("...ij,...jk->...ik",
                         green_hat(params, r, t).as_array(),
                         green_hat(params, r, s).as_array())
        direct = green_hat(params, r, t + s).as_array()
        num = np.abs(prod - direct).max(axis=(-2, -1))
        den = 1.0 + np.abs(direct).max(axis=(-2, -1))
        worst_semi = max(worst_semi, float((num / den).max()))
    checks.append((worst_semi < 1e-9, "semigroup"))

    # determinant, relative, where doubles can represent the cancellation
    worst_det = 0.0
    for params in PRESETS:
        r = rng.uniform(1e-3, 10.0, 300)
        t = rng.uniform(0.0, 1.0, 300) * 12.0 / (params.kappa * r ** 2)
        det = green_hat(params, r, t).det()
        ref = np.exp(-params.kappa * r ** 2 * t)
        worst_det = max(worst_det, float(np.max(np.abs(det - ref) / ref)))
    checks.append((worst_det < 1e-10, "determinant"))

    # adaptive ODE oracle on 100 points including the degenerate circle
    params = PRESETS[0]
    r0 = params.degenerate_radius
    pts = [(r0, 1.0), (r0 + 1e-8, 1.0), (r0 - 1e-8, 1.0),
           (r0 + 1e-8, 0.3), (r0 - 1e-8, 0.3), (r0, 0.3)]
    pts += [(rng.uniform(0.01, 8.0), rng.uniform(0.01, 3.0)) for _ in range(94)]
    worst_ode = 0.0
    for r, t in pts:
        g11, g12, g21, g22 = green_entries_scalar(params, r, t)
        diff = np.abs(np.array([[g11, g12], [g21, g22]]) - ode_oracle(params, r, t))
        worst_ode = max(worst_ode, float(diff.max()))
    checks.append((worst_ode < 1e-9, "ode oracle"))

    checks.append((clock.cpu < 5.0, "runtime"))
    ok = all(c for c, _ in checks)
    report(capsys, 3, ok,
           f"identity exact, semigroup {worst_semi:.2e} < 1e-9, "
           f"det {worst_det:.2e} < 1e-10, oracle {worst_ode:.2e} < 1e-9, "
           f"runtime {clock.text(5)}")


def test_criterion_4_partition_besov_suite(capsys):
    clock = Clock()
    rng = np.random.default_rng(432)

    # partition-of-unity deviation on 32^3 and 64^3
    devs = []
    for n in (32, 64):
        lat = Lattice(dim=3, n=n, period=2.0 * math.pi)
        part = build_partition(lat)
        total = sum(bump_phi(lat.xi_mag * 2.0 ** (-q)) for q in part.qs())
        devs.append(float(np.abs(total[lat.xi_mag > 0] - 1.0).max()))
        total_in = bump_chi(lat.xi_mag) + sum(
            bump_phi(lat.xi_mag * 2.0 ** (-q)) for q in range(0, part.q_max + 1))
        devs.append(float(np.abs(total_in - 1.0).max()))
    dev = max(devs)

    lat = Lattice(dim=3, n=32, period=2.0 * math.pi)
    part = build_partition(lat)

    # interpolation inequality with constant 1 on 100 random fields
    s1, s2 = -0.5, 1.5
    worst_interp = 0.0
    for i in range(100):
        theta = (0.25, 0.5, 0.75)[i % 3]
        s = theta * s1 + (1.0 - theta) * s2
        f = random_field(lat, rng)
        mid = besov_norm(f, BesovSpec(s=s), part)
        bound = (besov_norm(f, BesovSpec(s=s1), part) ** theta
                 * besov_norm(f, BesovSpec(s=s2), part) ** (1.0 - theta))
        worst_interp = max(worst_interp, mid / bound)

    # hybrid norm with equal exponents is the homogeneous norm, exactly
    hybrid_exact = True
    for i in range(10):
        f = random_field(lat, rng)
        for s in (-0.5, 0.0, 1.0):
            if hybrid_norm(f, HybridSpec(s_low=s, s_high=s), part) \
                    != besov_norm(f, BesovSpec(s=s), part):
                hybrid_exact = False

    # block l^2 norm against L^2 on zero-mean fields
    ratios = []
    spec022 = BesovSpec(s=0.0, r=2.0)
    for _ in range(100):
        f = random_field(lat, rng, zero_mean=True)
        ratios.append(besov_norm(f, spec022, part) / l2_norm_spectral(f))
    lo, hi = min(ratios), max(ratios)

    ok = (dev < 1e-10 and worst_interp <= 1.0 + 1e-9 and hybrid_exact
          and lo >= 1.0 / math.sqrt(2.0) - 1e-12 and hi <= 1.0 + 1e-12
          and clock.cpu < 30.0)
    report(capsys, 4, ok,
           f"partition deviation {dev:.1e} < 1e-10, interpolation ratio "
           f"{worst_interp:.9f} <= 1+1e-9, hybrid identity exact, "
           f"B0_22/L2 in [{lo:.3f}, {hi:.3f}] within [0.7071, 1], "
           f"runtime {clock.text(30)}")


def test_criterion_5_constraint_propagation(capsys):
    clock = Clock()
    lat = Lattice(dim=3, n=32, period=2.0 * math.pi)
    params = PhysicalParams()
    res_keys = ("res_det", "res_div", "res_curl", "res_divUoverDet")

    psi, v = band_limited_displacement(lat, amplitude=1e-3, k_max=2, seed=7)
    state = init_from_displacement(psi, v)
    out = simulate(state, params, SolverConfig(dt=1e-3, t_end=10.0,
                                               series_stride=200))
    res_peak = max(max(out.series[k]) for k in res_keys)
    masses = np.asarray(out.series["mass"])
    mass_drift = float(np.abs(masses - masses[0]).max())

    # order check: peak residual drift under dt halving on a short window
    def drift(dt):
        r = simulate(state, params, SolverConfig(dt=dt, t_end=0.2,
                                                 series_stride=5))
        return max(max(r.series[k]) - r.series[k][0] for k in res_keys)

    d_coarse, d_fine = drift(4e-3), drift(2e-3)
    ratio = d_coarse / d_fine

    ok = (res_peak < 1e-5 and mass_drift < 1e-12 and ratio >= 3.0
          and clock.cpu < 600.0)
    report(capsys, 5, ok,
           f"peak residual {res_peak:.2e} < 1e-5, mass drift "
           f"{mass_drift:.1e} < 1e-12, dt-halving drift ratio "
           f"{ratio:.1f} >= 3, runtime {clock.text(600)}")


def test_criterion_6_linear_cross_oracle(capsys):
    clock = Clock()
    lat = Lattice(dim=3, n=32, period=2.0 * math.pi)
    params = PhysicalParams(mu=1.0, lam=0.0)
    eps, dt, t_end = 1e-5, 5e-3, 1.0

    psi, v = band_limited_displacement(lat, amplitude=eps, k_max=2, seed=7,
                                       irrotational=True)
    state = init_from_displacement(psi, v)
    cur = state
    for _ in range(int(round(t_end / dt))):
        cur = step(cur, dt, params)

    a_lin, d_lin = apply_semigroup((state.a, leray_div(state.v)), t_end,
                                   GreenParams(1.0, 3.0, params.nu))
    err = math.sqrt(l2_norm_spectral(cur.a - a_lin) ** 2
                    + l2_norm_spectral(leray_div(cur.v) - d_lin) ** 2)
    tol = max(10.0 * eps ** 2, 10.0 * dt ** 2)

    ok = err < tol and clock.cpu < 120.0
    report(capsys, 6, ok,
           f"L2 mismatch {err:.2e} < max(10 eps^2, 10 dt^2) = {tol:.1e}, "
           f"runtime {clock.text(120)}")


def test_criterion_7_forcing_quadratic_scaling(capsys):
    from vedlab import State, forcing_terms

    clock = Clock()
    lat = Lattice(dim=3, n=16, period=2.0 * math.pi)
    psi, v = band_limited_displacement(lat, amplitude=1e-2, k_max=2, seed=11)
    base = init_from_displacement(psi, v)
    params = PhysicalParams()

    eps = (1e-2, 1e-3, 1e-4)
    norms = []
    for e in eps:
        c = e / 1e-2
        st = State(c * base.a, c * base.v, c * base.F)
        norms.append({k: l2_norm_spectral(t) for k, t in
                      forcing_terms(st, params).items()})
    slopes = {}
    x = np.log(eps)
    for key in norms[0]:
        y = np.log([n[key] for n in norms])
        slopes[key] = float(np.polyfit(x, y, 1)[0])

    bad = {k: round(s, 3) for k, s in slopes.items() if abs(s - 2.0) > 0.1}
    ok = not bad and clock.cpu < 60.0
    worst = max(slopes.values(), key=lambda s: abs(s - 2.0))
    report(capsys, 7, ok,
           f"all {len(slopes)} forcing terms scale with slope 2.0 +- 0.1 "
           f"(worst {worst:.4f}){', offenders ' + str(bad) if bad else ''}, "
           f"runtime {clock.text(60)}")


def test_criterion_8_high_frequency_equivalence(capsys):
    clock = Clock()
    params = PhysicalParams(mu=3.0, lam=0.0)
    period = 2.0 * math.pi / 32.0

    def measured_d1(n):
        lat = Lattice(dim=3, n=n, period=period)
        part = build_partition(lat)
        worst = 1.0
        ratios = []
        for q, shells in BAND_SHELLS.items():
            for index in range(20):
                st = trig_band_state(lat, shells, index, amplitude=1.0)
                blk = high_freq_energy(st, q, params, part)
                ratio = blk.Eq / blk.Eq_ref
                ratios.append(ratio)
                worst = max(worst, ratio, 1.0 / ratio)
        return worst, ratios

    d_coarse, ratios = measured_d1(32)
    d_fine, _ = measured_d1(64)
    refine_rel = abs(d_fine - d_coarse) / d_coarse

    in_band = all(1.0 / D1 <= r <= D1 for r in ratios)
    ok = in_band and refine_rel < 0.10 and clock.cpu < 60.0
    report(capsys, 8, ok,
           f"100 band states: Eq/Eq_ref within [1/{D1}, {D1}] "
           f"(measured D1 {d_coarse:.4f}), refinement x2 shift "
           f"{refine_rel:.1e} < 10%, runtime {clock.text(60)}")


def test_criterion_9_cli_determinism(capsys, tmp_path):
    clock = Clock()
    cfg = tmp_path / "run.ini"
    cfg.write_text("[lattice]\npoints = 16\n"
                   "[initial]\namplitude = 1e-3\nseed = 3\n"
                   "[time]\ndt = 2e-3\nt_end = 0.02\n"
                   "series_stride = 5\nsnapshot_stride = 10\n")
    pairs = []
    for tag in ("r1", "r2"):
        out = str(tmp_path / tag)
        code = cli_main(["simulate", "--config", str(cfg), "--out-dir", out])
        assert code == 0
        curve = str(tmp_path / f"curve_{tag}.csv")
        code = cli_main(["green", "decay", "--alpha", "1", "--beta", "2",
                         "--kappa", "1", "--num-times", "5", "--out", curve])
        assert code == 0
        pairs.append((out, curve))
    capsys.readouterr()

    same = open(pairs[0][1], "rb").read() == open(pairs[1][1], "rb").read()
    names = ["timeseries.csv", "resolved.ini", "state_final.vdsf",
             "state_t00000.000000.vdsf", "state_t00000.020000.vdsf"]
    for name in names:
        a = open(os.path.join(pairs[0][0], name), "rb").read()
        b = open(os.path.join(pairs[1][0], name), "rb").read()
        same = same and a == b

    ok = same and clock.cpu < 120.0
    report(capsys, 9, ok,
           f"repeated simulate + green decay runs byte-identical across "
           f"{len(names) + 1} artifacts, runtime {clock.text(120)}")

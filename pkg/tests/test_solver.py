"""Nonlinear box solver: initial data, conservation, convergence, guards."""
import math

import numpy as np
import pytest

from vedlab import (
    BlowUpError,
    GreenParams,
    Lattice,
    PhysicalParams,
    SolverConfig,
    State,
    VectorField,
    apply_semigroup,
    band_limited_displacement,
    check_constraints,
    dft_forward,
    init_from_displacement,
    l2_norm_spectral,
    leray_div,
    rhs,
    simulate,
    step,
    zero_field,
)


def make_state(lattice, amplitude, seed=3, irrotational=False):
    psi, v = band_limited_displacement(lattice, amplitude, k_max=2, seed=seed,
                                       irrotational=irrotational)
    return init_from_displacement(psi, v)


def test_params_validation():
    p = PhysicalParams()
    assert p.mu == 1.0 and p.lam == 0.0 and p.pressure_gamma == 1.4
    assert p.nu == pytest.approx(p.lam + 2.0 * p.mu)
    assert PhysicalParams(mu=1.0, lam=-1.5).nu == pytest.approx(0.5)
    with pytest.raises(ValueError):
        PhysicalParams(mu=0.0)
    with pytest.raises(ValueError):
        PhysicalParams(mu=1.0, lam=-2.0)
    with pytest.raises(ValueError):
        PhysicalParams(pressure_gamma=1.0)


def test_state_validation(lat16_3d, lat32_3d):
    a = zero_field(lat16_3d)
    v = VectorField((a, a, a))
    F = None
    from vedlab import MatrixField
    F = MatrixField(((a, a, a), (a, a, a), (a, a, a)))
    st = State(a, v, F)
    assert st.lattice is lat16_3d
    with pytest.raises(ValueError):
        State(zero_field(lat32_3d), v, F)


def test_initial_data_satisfies_constraints(lat16_3d):
    st = make_state(lat16_3d, amplitude=1e-2)
    res = check_constraints(st)
    assert set(res) == {"res_det", "res_div", "res_curl", "res_divUoverDet"}
    for name, val in res.items():
        assert val < 1e-11, (name, val)
    # the data is genuinely nontrivial
    assert l2_norm_spectral(st.a) > 1e-4
    assert l2_norm_spectral(st.F) > 1e-4


def test_large_displacement_rejected(lat16_3d):
    with pytest.raises(ValueError, match="det"):
        make_state(lat16_3d, amplitude=0.9)


def test_non_gradient_deformation_breaks_curl(lat16_3d, rng):
    st = make_state(lat16_3d, amplitude=1e-2)
    x = lat16_3d.grid()
    bump = 1e-2 * np.sin(x[0]) * np.cos(2.0 * x[1])
    comps = [[st.F[i, j] for j in range(3)] for i in range(3)]
    comps[0][1] = comps[0][1] + dft_forward(bump, lat16_3d)
    from vedlab import MatrixField
    broken = State(st.a, st.v, MatrixField(tuple(tuple(r) for r in comps)))
    assert check_constraints(broken)["res_curl"] > 1e-3


def test_equilibrium_is_a_fixed_point(lat16_3d):
    a = zero_field(lat16_3d)
    v = VectorField((a, a, a))
    from vedlab import MatrixField
    F = MatrixField(((a, a, a), (a, a, a), (a, a, a)))
    st = State(a, v, F)
    params = PhysicalParams()
    out = rhs(st, params)
    assert l2_norm_spectral(out.a) == 0.0
    assert l2_norm_spectral(out.v) == 0.0
    assert l2_norm_spectral(out.F) == 0.0
    nxt = step(st, 1e-2, params)
    assert l2_norm_spectral(nxt.a) == 0.0
    assert l2_norm_spectral(nxt.v) == 0.0


def test_rhs_consistency_with_step(lat16_3d):
    # (step(dt) - state)/dt converges to rhs(state) at first order
    st = make_state(lat16_3d, amplitude=1e-3)
    params = PhysicalParams()
    ref = rhs(st, params)
    errs = []
    for dt in (4e-3, 2e-3):
        nxt = step(st, dt, params)
        diff_a = (nxt.a - st.a) * (1.0 / dt) - ref.a
        diff_v = (nxt.v - st.v) * (1.0 / dt) - ref.v
        errs.append(math.sqrt(l2_norm_spectral(diff_a) ** 2
                              + l2_norm_spectral(diff_v) ** 2))
    assert errs[1] < 0.6 * errs[0]  # O(dt)


def test_mass_is_bit_constant(lat16_3d):
    st = make_state(lat16_3d, amplitude=1e-2)
    cfg = SolverConfig(dt=2e-3, t_end=0.05, series_stride=5)
    out = simulate(st, PhysicalParams(), cfg)
    masses = np.asarray(out.series["mass"])
    assert masses.size >= 3
    assert np.all(masses == masses[0])


def test_self_convergence_is_second_order(lat16_3d):
    st = make_state(lat16_3d, amplitude=1e-2)
    params = PhysicalParams()
    t_end = 0.08

    def advance(dt):
        cur = st
        for _ in range(int(round(t_end / dt))):
            cur = step(cur, dt, params)
        return cur

    fine = advance(1e-3)
    errs = []
    for dt in (8e-3, 4e-3, 2e-3):
        got = advance(dt)
        errs.append(math.sqrt(l2_norm_spectral(got.a - fine.a) ** 2
                              + l2_norm_spectral(got.v - fine.v) ** 2
                              + l2_norm_spectral(got.F - fine.F) ** 2))
    assert errs[0] / errs[1] > 3.0
    assert errs[1] / errs[2] > 3.0


def test_constraints_propagate(lat16_3d):
    st = make_state(lat16_3d, amplitude=1e-3)
    cfg = SolverConfig(dt=2e-3, t_end=0.1, series_stride=10)
    out = simulate(st, PhysicalParams(), cfg)
    assert out.status == "ok"
    for key in ("res_det", "res_div", "res_curl", "res_divUoverDet"):
        assert max(out.series[key]) < 1e-7


def test_cfl_guard_raises(lat16_3d):
    st = make_state(lat16_3d, amplitude=1e-3)
    x = lat16_3d.grid()
    huge = VectorField(tuple(dft_forward(50.0 * np.cos(x[i]), lat16_3d)
                             for i in range(3)))
    fast = State(st.a, huge, st.F)
    with pytest.raises(BlowUpError, match="CFL"):
        step(fast, 0.1, PhysicalParams())


def test_negative_density_guard(lat16_3d):
    st = make_state(lat16_3d, amplitude=1e-3)
    # push the mean of a below -1 so rho = 1 + a goes negative
    coeffs = st.a.coeffs.copy()
    coeffs[(0, 0, 0)] = -1.5 * lat16_3d.n ** 1.5
    from vedlab import SpectralField
    sick = State(SpectralField(lat16_3d, coeffs, True), st.v, st.F)
    with pytest.raises(BlowUpError, match="density"):
        step(sick, 1e-3, PhysicalParams())


def test_simulate_requires_commensurate_times(lat16_3d):
    st = make_state(lat16_3d, amplitude=1e-3)
    with pytest.raises(ValueError, match="multiple"):
        simulate(st, PhysicalParams(), SolverConfig(dt=3e-3, t_end=0.01))


def test_simulate_series_and_snapshots(lat16_3d):
    st = make_state(lat16_3d, amplitude=1e-3)
    cfg = SolverConfig(dt=5e-3, t_end=0.05, series_stride=2, snapshot_stride=5)
    seen = []
    out = simulate(st, PhysicalParams(), cfg, observer=lambda t, s: seen.append(t))
    assert out.times[0] == 0.0
    assert out.times[-1] == pytest.approx(0.05)
    assert len(out.times) == len(out.series["l2_a"]) == 7  # k = 0,2,4,...,10
    assert [t for t, _ in out.snapshots] == pytest.approx([0.0, 0.025, 0.05])
    assert seen == pytest.approx([0.0, 0.025, 0.05])
    assert out.final_time == pytest.approx(0.05)
    assert isinstance(out.final_state, State)
    for col, vals in out.series.items():
        assert len(vals) == len(out.times), col
        assert np.all(np.isfinite(vals)), col
    # decay functionals are sups over time, hence monotone along the series
    for col in ("M1", "M2", "M3", "M4", "M"):
        assert np.all(np.diff(out.series[col]) >= 0.0), col


def test_blow_up_attaches_partial_result(lat16_3d):
    st = make_state(lat16_3d, amplitude=1e-3)
    x = lat16_3d.grid()
    huge = VectorField(tuple(dft_forward(80.0 * np.cos(x[i]), lat16_3d)
                             for i in range(3)))
    fast = State(st.a, huge, st.F)
    cfg = SolverConfig(dt=0.05, t_end=0.5, series_stride=1)
    with pytest.raises(BlowUpError) as exc:
        simulate(fast, PhysicalParams(), cfg)
    err = exc.value
    assert err.partial is not None
    assert err.partial.status == "blowup"
    assert len(err.partial.times) >= 1  # the initial record survives


def test_linear_regime_tracks_semigroup(lat16_3d):
    # irrotational tiny data: (a, Lambda^{-1} div v) follows the 2x2
    # solution operator with (alpha, beta, kappa) = (1, 3, nu)
    eps = 1e-6
    st = make_state(lat16_3d, amplitude=eps, irrotational=True)
    params = PhysicalParams(mu=1.0, lam=0.0)
    t_end, dt = 0.5, 5e-3
    cur = st
    for _ in range(int(round(t_end / dt))):
        cur = step(cur, dt, params)
    d0 = leray_div(st.v)
    a1, d1 = apply_semigroup((st.a, d0), t_end, GreenParams(1.0, 3.0, params.nu))
    err = math.sqrt(l2_norm_spectral(cur.a - a1) ** 2
                    + l2_norm_spectral(leray_div(cur.v) - d1) ** 2)
    assert err < 10.0 * max(eps ** 2, dt ** 2)

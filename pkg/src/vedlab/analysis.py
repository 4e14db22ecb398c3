"""Diagnostics on solver states: reformulated variables, effective
nonlinear forcings, blockwise energies, and weighted decay functionals.

Everything here is read-only: products are evaluated pointwise on the
lattice without dealiasing (these are measurements of a given state,
not tendencies fed back into time stepping), derivatives and the
nonlocal operators Lambda^{-1} d_j are exact Fourier multipliers with
the zero mode sent to zero.

L^2 quantities are computed through the Parseval identity, which on
the lattice agrees exactly with midpoint quadrature of |f|^2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import (MatrixField, SpectralField, VectorField, derivative,
                      dft_forward, l2_inner, l2_norm_spectral, leray_curl,
                      leray_div)
from .littlewood_paley import DyadicPartition, dyadic_block
from .solver import PhysicalParams, State


@dataclass(frozen=True)
class ReformulatedState:
    """Variables of the first-order symmetrized system.

    d and e are the compressible part and the scaled velocity
    gradient, d = Lambda^{-1} div v and e^{ij} = Lambda^{-1} d_j v^i,
    so ||e||_{L^2} = ||v||_{L^2} and d = tr e.  Omega is the
    normalized vorticity, Ecal the scalar strain potential
    Lambda^{-2} d_i d_j (F + F^T)^{ij}, skew = F^T - F.
    """

    a: SpectralField
    d: SpectralField
    e: MatrixField
    Ecal: SpectralField
    Omega: MatrixField
    skew: MatrixField


def _lam_inv_grad_syms(lat):
    """Multiplier arrays for Lambda^{-1} d_j, zero mode zeroed."""
    with np.errstate(invalid="ignore", divide="ignore"):
        syms = [1j * lat.xi[j] / lat.xi_mag for j in range(lat.dim)]
    origin = (0,) * lat.dim
    for s in syms:
        s[origin] = 0.0
    return syms


def reformulate(state: State) -> ReformulatedState:
    lat = state.lattice
    d = lat.dim
    syms = _lam_inv_grad_syms(lat)

    dd = leray_div(state.v)
    om = leray_curl(state.v)
    e_rows = tuple(tuple(SpectralField(lat, syms[j] * state.v[i].coeffs, True)
                         for j in range(d)) for i in range(d))
    ecal = np.zeros(lat.shape, dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            ecal += syms[i] * syms[j] * (state.F[i, j].coeffs + state.F[j, i].coeffs)
    skew = state.F.transpose() - state.F
    return ReformulatedState(state.a, dd, MatrixField(e_rows),
                             SpectralField(lat, ecal, True), om, skew)


# ---------------------------------------------------------------------------
# effective forcings

def forcing_terms(state: State, params: PhysicalParams) -> dict:
    """The nonlinear sources seen by the reformulated linear system.

    Keys: L, G (compressible pair with the strain divergence folded
    in), K (without it), H (vorticity), W (its strain part), I (skew
    strain), J (scalar strain potential), and the velocity-gradient
    family G0..G3.  Every term is quadratic or higher in (a, v, F):
    evaluated on eps-scaled states their norms shrink like eps^2.
    """
    lat = state.lattice
    d = lat.dim
    xi = lat.xi
    syms = _lam_inv_grad_syms(lat)
    ref = reformulate(state)

    a = state.a.physical()
    v = [state.v[i].physical() for i in range(d)]
    F = [[state.F[i, j].physical() for j in range(d)] for i in range(d)]
    ga = [derivative(state.a, j).physical() for j in range(d)]
    gv = [[derivative(state.v[i], k).physical() for k in range(d)]
          for i in range(d)]
    gF = [[[derivative(state.F[i, j], l).physical() for j in range(d)]
           for i in range(d)] for l in range(d)]

    mu, lam = params.mu, params.lam
    xi2 = lat.xi_mag ** 2
    sdotv = sum(xi[j] * state.v[j].coeffs for j in range(d))
    Av = []
    for i in range(d):
        coeff = -mu * xi2 * state.v[i].coeffs - (mu + lam) * xi[i] * sdotv
        Av.append(SpectralField(lat, coeff, True).physical())

    rho = 1.0 + a
    kfac = rho ** (params.pressure_gamma - 2.0) - 1.0
    cfac = a / rho
    div_v = sum(gv[i][i] for i in range(d))

    out = {}
    out["L"] = dft_forward(-a * div_v, lat)
    out["G1"] = dft_forward(a * div_v, lat)

    # composite momentum source R^i = -v.grad v^i + F^{jk} d_j F^{ik}
    #                                 - K(a) d_i a - C(a) (A v)^i
    R = []
    for i in range(d):
        acc = -kfac * ga[i] - cfac * Av[i]
        for k in range(d):
            acc -= v[k] * gv[i][k]
            for j in range(d):
                acc += F[j][k] * gF[j][i][k]
        R.append(acc)
    R_spec = VectorField(tuple(dft_forward(R[i], lat) for i in range(d)))

    # G0^j = -d_i (a F^{ij})
    aF_spec = [[dft_forward(a * F[i][j], lat) for j in range(d)] for i in range(d)]
    g0 = []
    for j in range(d):
        acc = np.zeros(lat.shape, dtype=np.complex128)
        for i in range(d):
            acc -= (1j * xi[i]) * aF_spec[i][j].coeffs
        g0.append(SpectralField(lat, acc, True))
    out["G0"] = VectorField(tuple(g0))

    gd = [derivative(ref.d, k).physical() for k in range(d)]
    v_grad_d = dft_forward(sum(v[k] * gd[k] for k in range(d)), lat)
    out["K"] = v_grad_d + leray_div(R_spec)
    R_plus = VectorField(tuple(R_spec[i] + out["G0"][i] for i in range(d)))
    out["G"] = v_grad_d + leray_div(R_plus)

    # W^{ij}: antisymmetrized strain transport residue
    curlR = leray_curl(R_spec)
    w_rows = []
    for i in range(d):
        row = []
        for j in range(d):
            acc = np.zeros(lat.shape, dtype=np.complex128)
            for k in range(d):
                p1 = sum(F[l][k] * gF[l][i][j] - F[l][j] * gF[l][i][k]
                         for l in range(d))
                p2 = sum(F[l][k] * gF[l][j][i] - F[l][i] * gF[l][j][k]
                         for l in range(d))
                acc += syms[k] * dft_forward(p1 - p2, lat).coeffs
            row.append(SpectralField(lat, acc, True))
        w_rows.append(tuple(row))
    out["W"] = MatrixField(tuple(w_rows))

    gOm = [[[derivative(ref.Omega[i, j], k).physical() for j in range(d)]
            for i in range(d)] for k in range(d)]
    h_rows = []
    for i in range(d):
        row = []
        for j in range(d):
            transport = sum(v[k] * gOm[k][i][j] for k in range(d))
            row.append(dft_forward(transport, lat) + curlR[i, j]
                       + out["W"][i, j])
        h_rows.append(tuple(row))
    out["H"] = MatrixField(tuple(h_rows))

    # (grad v F)^{ij} = d_k v^i F^{kj}
    nvf = [[sum(gv[i][k] * F[k][j] for k in range(d)) for j in range(d)]
           for i in range(d)]
    out["G3"] = MatrixField(tuple(tuple(dft_forward(nvf[i][j], lat)
                                        for j in range(d)) for i in range(d)))
    out["I"] = MatrixField(tuple(tuple(dft_forward(nvf[j][i] - nvf[i][j], lat)
                                       for j in range(d)) for i in range(d)))

    # scalar potential source J
    def t_contract(mats):
        """T : X = Lambda^{-2} d_i d_j X^{ij} on spectral components."""
        with np.errstate(invalid="ignore", divide="ignore"):
            inv2 = 1.0 / xi2
        inv2[(0,) * d] = 0.0
        acc = np.zeros(lat.shape, dtype=np.complex128)
        for i in range(d):
            for j in range(d):
                acc -= xi[i] * xi[j] * inv2 * mats[i][j]
        return acc

    v_grad_y = [[sum(v[k] * (gF[k][i][j] + gF[k][j][i]) for k in range(d))
                 for j in range(d)] for i in range(d)]
    term1 = t_contract([[dft_forward(v_grad_y[i][j], lat).coeffs
                         for j in range(d)] for i in range(d)])
    g_ecal = [derivative(ref.Ecal, k).physical() for k in range(d)]
    v_grad_te = dft_forward(sum(v[k] * g_ecal[k] for k in range(d)), lat)
    term2 = t_contract([[dft_forward(nvf[i][j] + nvf[j][i], lat).coeffs
                         for j in range(d)] for i in range(d)])
    out["J"] = (SpectralField(lat, -term1, True) + v_grad_te
                + SpectralField(lat, term2, True))

    # velocity-gradient source G2
    ge = [[[derivative(ref.e[i, j], k).physical() for j in range(d)]
           for i in range(d)] for k in range(d)]
    bracket = []
    for i in range(d):
        acc = cfac * Av[i]
        for k in range(d):
            acc += v[k] * gv[i][k]
            for l in range(d):
                acc += F[l][k] * gF[l][i][k]
        bracket.append(dft_forward(acc, lat).coeffs)
    g2_rows = []
    for i in range(d):
        row = []
        for j in range(d):
            transport = sum(v[k] * ge[k][i][j] for k in range(d))
            acc = dft_forward(transport, lat).coeffs - syms[j] * bracket[i]
            for k in range(d):
                q = sum(F[l][j] * gF[l][i][k] - F[l][k] * gF[l][i][j]
                        for l in range(d))
                acc += syms[k] * dft_forward(q, lat).coeffs
            row.append(SpectralField(lat, acc, True))
        g2_rows.append(tuple(row))
    out["G2"] = MatrixField(tuple(g2_rows))
    return out


# ---------------------------------------------------------------------------
# blockwise energies

@dataclass(frozen=True)
class EnergyBlock:
    q: int
    fq2: float
    fq2_tilde: float
    Eq: float
    Eq_ref: float


def high_freq_energy(state: State, q: int, params: PhysicalParams,
                     partition: DyadicPartition) -> EnergyBlock:
    """Quadratic block functionals f_q^2, their dissipative companion,
    and the weighted energies E_q and the reference combination Eq_ref.

    f_q^2 is positive definite once mu and nu = lam + 2 mu exceed 5/2;
    below that the cross terms may win and Eq is not defined (ValueError).
    """
    lat = state.lattice
    n = lat.dim
    mu, lam, nu = params.mu, params.lam, params.nu
    syms = _lam_inv_grad_syms(lat)

    def blk(f):
        return dyadic_block(f, q, partition, homogeneous=True)

    def lam_mul(f):
        return SpectralField(f.lattice, f.coeffs * lat.xi_mag, f.hermitian)

    # only d = Lambda^{-1} div v and e^{ij} = Lambda^{-1} d_j v^i enter
    ba = blk(state.a)
    bd = blk(leray_div(state.v))
    be = [[blk(SpectralField(lat, syms[j] * state.v[i].coeffs, True))
           for j in range(n)] for i in range(n)]
    bF = [[blk(state.F[i, j]) for j in range(n)] for i in range(n)]

    n_e2 = sum(l2_norm_spectral(be[i][j]) ** 2 for i in range(n) for j in range(n))
    n_la = l2_norm_spectral(lam_mul(ba))
    n_lF2 = sum(l2_norm_spectral(lam_mul(bF[i][j])) ** 2
                for i in range(n) for j in range(n))
    n_le2 = sum(l2_norm_spectral(lam_mul(be[i][j])) ** 2
                for i in range(n) for j in range(n))
    n_ld = l2_norm_spectral(lam_mul(bd))

    # Lambda^{-1} d_i d_j F^{ij} (scalar)
    with np.errstate(invalid="ignore", divide="ignore"):
        inv_mag = 1.0 / lat.xi_mag
    inv_mag[(0,) * n] = 0.0
    acc = np.zeros(lat.shape, dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            acc -= lat.xi[i] * lat.xi[j] * inv_mag * bF[i][j].coeffs
    n_ddF = l2_norm_spectral(SpectralField(lat, acc, True))

    ip_lad = l2_inner(lam_mul(ba), bd)
    ip_ald = l2_inner(ba, lam_mul(bd))
    ip_lFe = sum(l2_inner(lam_mul(bF[i][j]), be[i][j])
                 for i in range(n) for j in range(n))

    fq2 = (n_e2 + nu * n_la ** 2 + mu * n_lF2 + (mu + lam) * n_ddF ** 2
           - 2.0 * ip_lad + 2.0 * ip_lFe)
    fq2_t = ((mu - 1.0) * n_le2 + (nu - 1.0) * n_ld ** 2 + n_la ** 2
             + n_lF2 - ip_ald + ip_lFe)

    n_a = l2_norm_spectral(ba)
    n_F2 = sum(l2_norm_spectral(bF[i][j]) ** 2 for i in range(n) for j in range(n))
    eq_ref = (2.0 ** (0.5 * n * q) * np.sqrt(n_a ** 2 + n_F2)
              + 2.0 ** ((0.5 * n - 1.0) * q) * np.sqrt(n_e2))

    if fq2 < 0:
        raise ValueError(
            f"block functional negative (f_q^2 = {fq2:g}); "
            "requires mu and lam + 2 mu above 5/2")
    eq = 2.0 ** ((0.5 * n - 1.0) * q) * float(np.sqrt(fq2))
    return EnergyBlock(q, float(fq2), float(fq2_t), eq, float(eq_ref))


# ---------------------------------------------------------------------------
# decay functionals

def _block_l2(obj, q: int, partition: DyadicPartition,
              homogeneous: bool = True) -> float:
    if isinstance(obj, SpectralField):
        fields = [obj]
    elif isinstance(obj, VectorField):
        fields = list(obj)
    else:
        fields = list(obj.flat())
    total = 0.0
    for f in fields:
        total += l2_norm_spectral(dyadic_block(f, q, partition, homogeneous)) ** 2
    return float(np.sqrt(total))


def _besov21(obj, s: float, partition: DyadicPartition,
             homogeneous: bool = True) -> float:
    return sum(2.0 ** (q * s) * _block_l2(obj, q, partition, homogeneous)
               for q in partition.qs(homogeneous))


def _hybrid(obj, s_low: float, s_high: float, threshold: int,
            partition: DyadicPartition) -> float:
    total = 0.0
    for q in partition.qs(homogeneous=True):
        s = s_low if q <= threshold else s_high
        total += 2.0 ** (q * s) * _block_l2(obj, q, partition, True)
    return total


def decay_functionals(ref: ReformulatedState, state: State,
                      partition: DyadicPartition, t: float,
                      threshold: int = 0) -> dict:
    """Instantaneous weighted norms whose running sups are M1..M4, M.

    All use weight (1 + t)^{n/4}.  M1: hybrid norm of a (exponents
    n/2 - 1 below the threshold block, n/2 above) plus the homogeneous
    B^{n/2-1}_{2,1} norm of d.  M2: same with (Ecal, d).  M3: same
    with (F^T - F, Omega).  M4: plain L^2 of (a, F, v).  M:
    inhomogeneous B^{n/2}_{2,1} of a and F plus B^{n/2-1}_{2,1} of v.

    Spectral Parseval block norms (p = 2), identical to the
    physical-space quadrature values.
    """
    n = state.lattice.dim
    w = (1.0 + t) ** (0.25 * n)
    s_lo, s_hi = 0.5 * n - 1.0, 0.5 * n

    m1 = w * (_hybrid(state.a, s_lo, s_hi, threshold, partition)
              + _besov21(ref.d, s_lo, partition))
    m2 = w * (_hybrid(ref.Ecal, s_lo, s_hi, threshold, partition)
              + _besov21(ref.d, s_lo, partition))
    m3 = w * (_hybrid(ref.skew, s_lo, s_hi, threshold, partition)
              + _besov21(ref.Omega, s_lo, partition))
    m4 = w * (l2_norm_spectral(state.a) + l2_norm_spectral(state.F)
              + l2_norm_spectral(state.v))
    m = w * (_besov21(state.a, s_hi, partition, homogeneous=False)
             + _besov21(state.F, s_hi, partition, homogeneous=False)
             + _besov21(state.v, s_lo, partition, homogeneous=False))
    return {"M1": m1, "M2": m2, "M3": m3, "M4": m4, "M": m}

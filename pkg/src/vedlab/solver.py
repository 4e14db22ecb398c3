"""Nonlinear evolution of the compressible viscoelastic system.

State variables on the lattice: relative density a = rho - 1, velocity
v, and strain perturbation F = U - I.  The evolved equations are

    da/dt = -div((1 + a) v)
    dv/dt = -v.grad v + (1/rho) (mu Lap v + (mu + lam) grad div v)
            - rho^{gamma-2} grad a + U^{jk} d_j (2 U^{ik})
    dF/dt = -v.grad F + grad(v) U,      (grad v)^{ij} = d_j v^i

with pressure P(rho) = rho^gamma / gamma (so P'(1) = 1) and the
Hookean elastic force with energy |U|^2.

Time stepping is an integrating-factor Heun scheme: the stiff
constant-coefficient viscous operator (the rho = 1 part) is applied
exactly in Fourier space through its Helmholtz split, everything else
is explicit.  Products are formed pointwise in physical space and the
resulting tendencies are dealiased by the 2/3 rule.  The density
tendency is assembled in divergence form, so the mean of a is
conserved to machine precision.

Initial data built by init_from_displacement satisfies the four
constraint identities (unit rho det U, the two divergence-free
combinations, and the curl-type identity) to spectral accuracy, and
the scheme propagates them with O(dt^2) drift.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.fft as sfft

from .lattice import (Lattice, MatrixField, SpectralField, VectorField,
                      dft_forward, l2_norm_spectral)


@dataclass(frozen=True)
class PhysicalParams:
    """Shear/bulk viscosities and the pressure exponent."""

    mu: float = 1.0
    lam: float = 0.0
    pressure_gamma: float = 1.4

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.lam + 2.0 * self.mu > 0:
            raise ValueError(f"lam + 2 mu must be positive, got {self.lam + 2 * self.mu}")
        if not self.pressure_gamma > 1:
            raise ValueError(f"pressure_gamma must exceed 1, got {self.pressure_gamma}")

    @property
    def nu(self) -> float:
        """Longitudinal viscosity lam + 2 mu."""
        return self.lam + 2.0 * self.mu


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    series_stride: int = 50      # steps between timeseries rows
    snapshot_stride: int = 0     # steps between kept states; 0 keeps only endpoints
    cfl_safety: float = 0.5
    check_stride: int = 25       # steps between full finiteness checks

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")


@dataclass(frozen=True)
class State:
    """Spectral (a, v, F); all components hermitian (real fields)."""

    a: SpectralField
    v: VectorField
    F: MatrixField

    def __post_init__(self):
        lat = self.a.lattice
        if self.v.lattice != lat or self.F.lattice != lat:
            raise ValueError("state components live on different lattices")
        if not (self.a.hermitian and self.v.hermitian and self.F.hermitian):
            raise ValueError("state fields must be hermitian (real-valued)")

    @property
    def lattice(self) -> Lattice:
        return self.a.lattice


class BlowUpError(RuntimeError):
    """Raised when the run leaves the resolvable regime."""

    def __init__(self, reason: str, t: float, partial=None):
        super().__init__(f"blow-up at t = {t:g}: {reason}")
        self.reason = reason
        self.t = t
        self.partial = partial


# ---------------------------------------------------------------------------
# internal half-spectrum workspace


class _Work:
    """Precomputed rfft-layout arrays for one (lattice, params) pair."""

    def __init__(self, lattice: Lattice, params: PhysicalParams):
        self.lattice = lattice
        self.params = params
        d = lattice.dim
        n = lattice.n
        full_xi = lattice.xi
        m = n // 2 + 1
        sl = (slice(None),) * d
        self.xi = np.ascontiguousarray(full_xi[(slice(None),) + sl[:-1] + (slice(0, m),)])
        self.xi2 = np.sum(self.xi ** 2, axis=0)
        with np.errstate(all="ignore"):
            inv_xi2 = 1.0 / self.xi2
        inv_xi2[(0,) * d] = 0.0
        self.inv_xi2 = inv_xi2
        keep = np.ones(self.xi2.shape, dtype=bool)
        kint = lattice.k_int[(slice(None),) + sl[:-1] + (slice(0, m),)]
        for a in range(d):
            keep &= np.abs(kint[a]) <= n / 3.0
        self.mask = keep
        self.rshape = self.xi2.shape
        self.pshape = lattice.shape

        self.dim = d
        self.n_fields = 1 + d + d * d
        self.s_v = slice(1, 1 + d)
        self.s_F = slice(1 + d, self.n_fields)
        self._if_cache = {}
        # scratch populated by each rhs call
        self.last_max_speed = 0.0
        self.last_min_rho = 1.0

        # hot-loop workspaces; rhs_nonstiff runs twice per step and its
        # result is consumed before the next call, so one tendency
        # buffer is enough (heun_step is ordered around that)
        self.ixi = 1j * self.xi
        self.neg_mu_xi2 = -params.mu * self.xi2
        self.mulam_xi = (params.mu + params.lam) * self.xi
        n_inv = self.n_fields + d + d * d + d ** 3 + d
        self._inv = np.empty((n_inv,) + self.rshape, dtype=np.complex128)
        self._outp = np.empty((2 * d + d * d,) + self.pshape)
        self._tend = np.empty((self.n_fields,) + self.rshape,
                              dtype=np.complex128)

    # -- transforms -----------------------------------------------------

    def inverse_batch(self, spec: np.ndarray) -> np.ndarray:
        axes = tuple(range(1, self.dim + 1))
        return sfft.irfftn(spec, s=self.pshape, axes=axes, norm="ortho")

    def forward_batch(self, phys: np.ndarray) -> np.ndarray:
        axes = tuple(range(1, self.dim + 1))
        return sfft.rfftn(phys, axes=axes, norm="ortho")

    # -- integrating factor ---------------------------------------------

    def _factors(self, dt: float):
        key = float(dt)
        if key not in self._if_cache:
            mu, nu = self.params.mu, self.params.nu
            self._if_cache[key] = (np.exp(-mu * self.xi2 * dt),
                                   np.exp(-nu * self.xi2 * dt))
        return self._if_cache[key]

    def apply_viscous_semigroup(self, state: np.ndarray, dt: float) -> None:
        """In place: exact e^{dt A} on the velocity rows, identity elsewhere.

        A = mu Lap + (mu + lam) grad div splits into -mu |xi|^2 on the
        solenoidal part and -nu |xi|^2 on the potential part.
        """
        fac_sol, fac_pot = self._factors(dt)
        v = state[self.s_v]
        s = np.einsum("a...,a...->...", self.xi, v)
        coef = s * self.inv_xi2
        for a in range(self.dim):
            pot = self.xi[a] * coef
            v[a] = fac_sol * (v[a] - pot) + fac_pot * pot

    # -- explicit tendency ----------------------------------------------

    def rhs_nonstiff(self, state: np.ndarray) -> np.ndarray:
        """Tendency with the rho = 1 viscous operator removed (it is
        integrated exactly); includes the variable-coefficient viscous
        remainder -C(a) A v.

        Returns a view of a shared workspace: the result of one call is
        invalidated by the next (callers copy or consume in between).
        """
        d = self.dim
        nf = self.n_fields
        xi = self.xi
        ixi = self.ixi
        gamma = self.params.pressure_gamma

        inv = self._inv
        inv[:nf] = state
        o_ga = nf                    # grad a
        o_gv = o_ga + d              # d_k v^i at o_gv + d*i + k
        o_gf = o_gv + d * d          # d_l F^{ij} at o_gf + d*d*l + d*i + j
        o_av = o_gf + d ** 3         # constant-coefficient viscous operator on v
        np.multiply(ixi, state[0], out=inv[o_ga:o_gv])
        np.multiply(state[self.s_v][:, None], ixi[None, :],
                    out=inv[o_gv:o_gf].reshape((d, d) + self.rshape))
        np.multiply(ixi[:, None], state[self.s_F][None, :],
                    out=inv[o_gf:o_av].reshape((d, d * d) + self.rshape))
        sdotv = np.einsum("a...,a...->...", xi, state[self.s_v])
        av_spec = inv[o_av:o_av + d]
        np.multiply(self.neg_mu_xi2, state[self.s_v], out=av_spec)
        av_spec -= self.mulam_xi * sdotv

        p = self.inverse_batch(inv)

        a = p[0]
        v = p[self.s_v]
        F = p[self.s_F].reshape((d, d) + self.pshape)
        ga = p[o_ga:o_ga + d]
        gv = p[o_gv:o_gv + d * d].reshape((d, d) + self.pshape)      # gv[i, k] = d_k v^i
        gF = p[o_gf:o_gf + d ** 3].reshape((d, d, d) + self.pshape)  # gF[l, i, j]
        av = p[o_av:o_av + d]

        rho = 1.0 + a
        min_rho = float(rho.min())
        self.last_min_rho = min_rho
        if min_rho <= 0.0:
            raise _NegativeDensity(min_rho)
        speed2 = np.einsum("a...,a...->...", v, v)
        self.last_max_speed = math.sqrt(float(speed2.max()))

        cfac = a / rho                      # C(a) = a / (1 + a)
        pg = rho ** (gamma - 2.0)           # P'(rho) / rho

        out = self._outp
        o_m, o_nv, o_nf = 0, d, 2 * d
        # momentum-form density flux
        np.multiply(rho, v, out=out[o_m:o_m + d])
        # velocity tendency (explicit part); elastic force 2 U^{jk} d_j U^{ik}
        nv = out[o_nv:o_nv + d]
        np.multiply(pg, ga, out=nv)
        nv += cfac * av
        nv *= -1.0
        nv -= np.einsum("k...,ik...->i...", v, gv)
        nv += 2.0 * np.einsum("jij...->i...", gF)
        nv += 2.0 * np.einsum("jk...,jik...->i...", F, gF)
        # strain tendency grad(v) U - v.grad F
        nfm = out[o_nf:].reshape((d, d) + self.pshape)
        np.einsum("ik...,kj...->ij...", gv, F, out=nfm)
        nfm += gv
        nfm -= np.einsum("k...,kij...->ij...", v, gF)

        oc = self.forward_batch(out)
        tend = self._tend
        np.einsum("a...,a...->...", xi, oc[o_m:o_m + d], out=tend[0])
        tend[0] *= -1j
        tend[1:] = oc[o_nv:]
        tend *= self.mask
        return tend

    def heun_step(self, state: np.ndarray, dt: float) -> np.ndarray:
        k1 = self.rhs_nonstiff(state)
        max_dt = self.cfl_limit()
        if dt > max_dt:
            raise _CflViolation(self.last_max_speed, max_dt)
        pred = state + dt * k1
        nxt = state + (0.5 * dt) * k1
        # k1 is consumed; the second rhs call may now reuse its buffer
        self.apply_viscous_semigroup(pred, dt)
        self.apply_viscous_semigroup(nxt, dt)
        k2 = self.rhs_nonstiff(pred)
        nxt += (0.5 * dt) * k2
        return nxt

    def cfl_limit(self) -> float:
        if self.last_max_speed == 0.0:
            return math.inf
        return 0.5 * self.lattice.spacing / self.last_max_speed


class _NegativeDensity(Exception):
    def __init__(self, value):
        self.value = value


class _CflViolation(Exception):
    def __init__(self, speed, max_dt):
        self.speed = speed
        self.max_dt = max_dt


# ---------------------------------------------------------------------------
# state packing

def _pack(state: State, work: _Work) -> np.ndarray:
    d = work.dim
    m = work.lattice.n // 2 + 1
    cut = (Ellipsis, slice(0, m))
    arr = np.empty((work.n_fields,) + work.rshape, dtype=np.complex128)
    arr[0] = state.a.coeffs[cut]
    for i in range(d):
        arr[1 + i] = state.v[i].coeffs[cut]
    for i in range(d):
        for j in range(d):
            arr[1 + d + d * i + j] = state.F[i, j].coeffs[cut]
    return arr


def _unpack(arr: np.ndarray, work: _Work) -> State:
    d = work.dim
    lat = work.lattice
    phys = work.inverse_batch(arr)

    def mk(p):
        return dft_forward(p, lat)

    a = mk(phys[0])
    v = VectorField(tuple(mk(phys[1 + i]) for i in range(d)))
    F = MatrixField(tuple(tuple(mk(phys[1 + d + d * i + j]) for j in range(d))
                          for i in range(d)))
    return State(a, v, F)


# ---------------------------------------------------------------------------
# pointwise small-matrix helpers (leading axes (d, d))

def _det(mat: np.ndarray) -> np.ndarray:
    d = mat.shape[0]
    if d == 2:
        return mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
    return (mat[0, 0] * (mat[1, 1] * mat[2, 2] - mat[1, 2] * mat[2, 1])
            - mat[0, 1] * (mat[1, 0] * mat[2, 2] - mat[1, 2] * mat[2, 0])
            + mat[0, 2] * (mat[1, 0] * mat[2, 1] - mat[1, 1] * mat[2, 0]))


def _inv(mat: np.ndarray, det: np.ndarray) -> np.ndarray:
    d = mat.shape[0]
    out = np.empty_like(mat)
    if d == 2:
        out[0, 0] = mat[1, 1]
        out[0, 1] = -mat[0, 1]
        out[1, 0] = -mat[1, 0]
        out[1, 1] = mat[0, 0]
        return out / det
    for i in range(3):
        for j in range(3):
            i1, i2 = [k for k in range(3) if k != j]
            j1, j2 = [k for k in range(3) if k != i]
            cof = mat[i1, j1] * mat[i2, j2] - mat[i1, j2] * mat[i2, j1]
            out[i, j] = cof if (i + j) % 2 == 0 else -cof
    return out / det


def init_from_displacement(psi: VectorField, v: Optional[VectorField] = None) -> State:
    """Constraint-compatible data from a small displacement field.

    With A = I + grad(psi) the state is U_0 = A^{-1}, rho_0 = det A.
    Then rho_0 det U_0 = 1 pointwise, and because rho_0 U_0^T is the
    cofactor matrix of the gradient A, both divergence identities and
    the curl-type identity hold exactly (Piola), leaving only spectral
    differentiation error in the residuals.
    """
    lat = psi.lattice
    d = lat.dim
    grad = np.empty((d, d) + lat.shape)
    for i in range(d):
        ci = psi[i].coeffs
        for j in range(d):
            gij = sfft.ifftn(ci * (1j * lat.xi[j]), norm="ortho")
            grad[i, j] = gij.real
    amat = grad.copy()
    for i in range(d):
        amat[i, i] += 1.0
    det = _det(amat)
    if float(det.min()) <= 0.5:
        raise ValueError(f"displacement too large: min det(I + grad psi) = {det.min():g}")
    u0 = _inv(amat, det)

    a0 = dft_forward(det - 1.0, lat)
    f_rows = []
    for i in range(d):
        row = []
        for j in range(d):
            fij = u0[i, j] - (1.0 if i == j else 0.0)
            row.append(dft_forward(fij, lat))
        f_rows.append(tuple(row))
    if v is None:
        zero = np.zeros(lat.shape)
        v = VectorField(tuple(dft_forward(zero, lat) for _ in range(d)))
    return State(a0, v, MatrixField(tuple(f_rows)))


def check_constraints(state: State) -> dict:
    """Max-norm residuals of the four propagated identities.

    Returns res_det, res_div, res_curl, res_divUoverDet; derivatives
    are spectral, products pointwise.
    """
    lat = state.lattice
    d = lat.dim
    xi = lat.xi

    F_spec = [[state.F[i, j].coeffs for j in range(d)] for i in range(d)]
    inv_list = [state.a.coeffs]
    inv_list += [F_spec[i][j] for i in range(d) for j in range(d)]
    inv_list += [(1j * xi[l]) * F_spec[i][j]
                 for l in range(d) for i in range(d) for j in range(d)]
    p = sfft.ifftn(np.stack(inv_list), axes=tuple(range(1, d + 1)), norm="ortho").real

    a = p[0]
    U = p[1:1 + d * d].reshape((d, d) + lat.shape).copy()
    for i in range(d):
        U[i, i] += 1.0
    gU = p[1 + d * d:].reshape((d, d, d) + lat.shape)  # gU[l, i, j] = d_l U^{ij}

    rho = 1.0 + a
    det = _det(U)
    res_det = float(np.abs(rho * det - 1.0).max())

    # divergence residuals: (div M)^i = d_j M^{ij} with M = rho U^T and U^T/det U
    w1 = np.empty((d, d) + lat.shape)
    w2 = np.empty((d, d) + lat.shape)
    for i in range(d):
        for j in range(d):
            w1[i, j] = rho * U[j, i]
            w2[i, j] = U[j, i] / det
    wc = sfft.fftn(np.concatenate([w1.reshape((-1,) + lat.shape),
                                   w2.reshape((-1,) + lat.shape)]),
                   axes=tuple(range(1, d + 1)), norm="ortho")
    div1 = np.zeros((d,) + lat.shape, dtype=np.complex128)
    div2 = np.zeros((d,) + lat.shape, dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            div1[i] += (1j * xi[j]) * wc[d * i + j]
            div2[i] += (1j * xi[j]) * wc[d * d + d * i + j]
    divs = sfft.ifftn(np.concatenate([div1, div2]),
                      axes=tuple(range(1, d + 1)), norm="ortho").real
    res_div = float(np.abs(divs[:d]).max())
    res_div_inv = float(np.abs(divs[d:]).max())

    res_curl = 0.0
    for i in range(d):
        for j in range(d):
            for k in range(j + 1, d):
                t = np.zeros(lat.shape)
                for l in range(d):
                    t += U[l, k] * gU[l, i, j] - U[l, j] * gU[l, i, k]
                res_curl = max(res_curl, float(np.abs(t).max()))

    return {"res_det": res_det, "res_div": res_div, "res_curl": res_curl,
            "res_divUoverDet": res_div_inv}


def rhs(state: State, params: PhysicalParams) -> State:
    """Full tendency (da/dt, dv/dt, dF/dt) including the viscous part."""
    work = _Work(state.lattice, params)
    arr = _pack(state, work)
    tend = work.rhs_nonstiff(arr)
    d = work.dim
    xi, xi2 = work.xi, work.xi2
    sdotv = np.einsum("a...,a...->...", xi, arr[work.s_v])
    for i in range(d):
        tend[1 + i] += -params.mu * xi2 * arr[1 + i] - (params.mu + params.lam) * xi[i] * sdotv
    return _unpack(tend, work)


def step(state: State, dt: float, params: PhysicalParams) -> State:
    """One integrating-factor Heun step."""
    work = _Work(state.lattice, params)
    arr = _pack(state, work)
    try:
        nxt = work.heun_step(arr, dt)
    except _NegativeDensity as e:
        raise BlowUpError(f"density reached {e.value:g}", 0.0) from None
    except _CflViolation as e:
        raise BlowUpError(
            f"advective CFL exceeded: max speed {e.speed:g} allows dt <= {e.max_dt:g}",
            0.0) from None
    return _unpack(nxt, work)


@dataclass
class SimulationResult:
    times: list
    series: dict            # column name -> list of floats, aligned with times
    snapshots: list         # (t, State) at the snapshot cadence
    final_state: Optional[State]
    final_time: float
    status: str = "ok"


def simulate(state: State, params: PhysicalParams, cfg: SolverConfig,
             observer: Optional[Callable] = None) -> SimulationResult:
    """March to t_end recording norms/residuals every series_stride steps.

    observer(t, state), when given, is also called at the snapshot
    cadence.  Blow-up raises BlowUpError with the partial result
    attached.
    """
    from .analysis import decay_functionals, reformulate
    from .littlewood_paley import build_partition

    lat = state.lattice
    work = _Work(lat, params)
    partition = build_partition(lat)
    arr = _pack(state, work)
    n_steps = int(round(cfg.t_end / cfg.dt))
    if abs(n_steps * cfg.dt - cfg.t_end) > 1e-9 * max(1.0, cfg.t_end):
        raise ValueError("t_end must be an integer multiple of dt")

    cols = ["mass", "l2_a", "l2_v", "l2_F", "res_det", "res_div", "res_curl",
            "res_divUoverDet", "M1", "M2", "M3", "M4", "M"]
    result = SimulationResult([], {c: [] for c in cols}, [], None, 0.0)
    sups = {k: 0.0 for k in ("M1", "M2", "M3", "M4", "M")}

    # the stepper never writes the a zero mode, so this is bit-constant
    def mass_of(arr_):
        zm = arr_[0][(0,) * lat.dim].real
        return zm * lat.period ** lat.dim / lat.n ** (lat.dim / 2)

    def record(t: float, st: State, snapshot: bool, mass: float):
        ref = reformulate(st)
        raw = decay_functionals(ref, st, partition, t)
        for k in sups:
            sups[k] = max(sups[k], raw[k])
        res = check_constraints(st)
        result.times.append(t)
        row = {"mass": mass,
               "l2_a": l2_norm_spectral(st.a),
               "l2_v": l2_norm_spectral(st.v),
               "l2_F": l2_norm_spectral(st.F)}
        row.update(res)
        row.update(sups)
        for c in cols:
            result.series[c].append(float(row[c]))
        if snapshot:
            result.snapshots.append((t, st))
            if observer is not None:
                observer(t, st)

    record(0.0, state, True, mass_of(arr))
    for k in range(1, n_steps + 1):
        t = k * cfg.dt
        try:
            arr = work.heun_step(arr, cfg.dt)
        except (_NegativeDensity, _CflViolation) as e:
            result.status = "blowup"
            result.final_time = (k - 1) * cfg.dt
            if isinstance(e, _NegativeDensity):
                reason = f"density reached {e.value:g}"
            else:
                reason = (f"advective CFL exceeded: max speed {e.speed:g} "
                          f"allows dt <= {e.max_dt:g}")
            raise BlowUpError(reason, t, partial=result) from None
        if k % cfg.check_stride == 0 or k == n_steps:
            if not np.all(np.isfinite(arr.view(np.float64))):
                result.status = "blowup"
                result.final_time = t
                raise BlowUpError("non-finite state", t, partial=result)
        at_series = (k % cfg.series_stride == 0) or k == n_steps
        at_snap = (cfg.snapshot_stride > 0 and k % cfg.snapshot_stride == 0) or k == n_steps
        if at_series or at_snap:
            st = _unpack(arr, work)
            record(t, st, at_snap, mass_of(arr))

    result.final_state = _unpack(arr, work)
    result.final_time = n_steps * cfg.dt
    return result

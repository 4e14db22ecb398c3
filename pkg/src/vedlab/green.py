"""Explicit solution operator for the damped 2x2 mode system.

Each frequency of the coupled pair (c, u) obeying

    dc/dt = -alpha |xi| u,    du/dt = -kappa |xi|^2 u + beta |xi| c

evolves by the matrix exponential G(|xi|, t) of

    A = [[0, -alpha |xi|], [beta |xi|, -kappa |xi|^2]].

With m = -kappa |xi|^2 / 2 and h = sqrt(m^2 - alpha beta |xi|^2)
(possibly imaginary) the eigenvalues are lam_pm = m +- h and

    G11 = e^{mt} (cosh(ht) - m t sinhc(ht))
    G12 = -alpha |xi| t e^{mt} sinhc(ht)
    G21 =  beta |xi| t e^{mt} sinhc(ht)
    G22 = e^{mt} (cosh(ht) + m t sinhc(ht))

where sinhc(x) = sinh(x)/x.  This form is smooth across the
degenerate radius |xi| = 2 sqrt(alpha beta)/kappa (where h = 0 and
sinhc -> 1), needs no branch switch for complex h, and never
overflows since Re(lam_pm) <= 0.  Entries are exactly real; det G =
e^{-kappa |xi|^2 t}; G(|xi|, 0) = I; the zero mode evolves by the
identity.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .lattice import SpectralField, l2_norm_spectral
from .littlewood_paley import DyadicPartition, dyadic_block


@dataclass(frozen=True)
class GreenParams:
    alpha: float
    beta: float
    kappa: float

    def __post_init__(self):
        for name in ("alpha", "beta", "kappa"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def degenerate_radius(self) -> float:
        """|xi| where the two eigenvalues collide."""
        return 2.0 * math.sqrt(self.alpha * self.beta) / self.kappa


@dataclass(frozen=True)
class EigenPair:
    lam_plus: np.ndarray
    lam_minus: np.ndarray


@dataclass(frozen=True)
class GreenMatrix:
    """Entries of G(|xi|, t), broadcast over the input shapes."""

    g11: np.ndarray
    g12: np.ndarray
    g21: np.ndarray
    g22: np.ndarray

    def det(self) -> np.ndarray:
        return self.g11 * self.g22 - self.g12 * self.g21

    def as_array(self) -> np.ndarray:
        return np.stack([np.stack([self.g11, self.g12], axis=-1),
                         np.stack([self.g21, self.g22], axis=-1)], axis=-2)

    def apply(self, c: np.ndarray, u: np.ndarray):
        return (self.g11 * c + self.g12 * u,
                self.g21 * c + self.g22 * u)


def eigenvalues(params: GreenParams, xi_mag) -> EigenPair:
    r = np.asarray(xi_mag, dtype=float)
    m = -0.5 * params.kappa * r ** 2
    h = np.sqrt((m ** 2 - params.alpha * params.beta * r ** 2).astype(np.complex128))
    return EigenPair(m + h, m - h)


def _sinhc(x: np.ndarray) -> np.ndarray:
    """sinh(x)/x, equal to 1 at x = 0; accurate for all small x."""
    out = np.ones_like(x)
    nz = x != 0
    out[nz] = np.sinh(x[nz]) / x[nz]
    return out


def _entries_complex(params: GreenParams, r: np.ndarray, t: np.ndarray):
    r, t = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))
    m = -0.5 * params.kappa * r ** 2
    h = np.sqrt((m ** 2 - params.alpha * params.beta * r ** 2).astype(np.complex128))
    x = h * t
    mt = m * t

    small = np.abs(x) <= 0.5
    cosh_term = np.empty(r.shape, dtype=np.complex128)
    sfac = np.empty(r.shape, dtype=np.complex128)  # e^{mt} t sinhc(ht)

    # |ht| small: evaluate around the degenerate limit, no cancellation
    xs = x[small]
    cosh_term[small] = np.exp(mt[small]) * np.cosh(xs)
    sfac[small] = np.exp(mt[small]) * t[small] * _sinhc(xs)

    # |ht| large: exp(lam t) directly; Re(lam) <= 0 so this cannot overflow
    big = ~small
    ep = np.exp(mt[big] + x[big])
    em = np.exp(mt[big] - x[big])
    cosh_term[big] = 0.5 * (ep + em)
    sfac[big] = (ep - em) / (2.0 * h[big])

    g11 = cosh_term - m * sfac
    g22 = cosh_term + m * sfac
    g12 = -params.alpha * r * sfac
    g21 = params.beta * r * sfac
    return g11, g12, g21, g22


def green_hat(params: GreenParams, xi_mag, t) -> GreenMatrix:
    """The solution matrix, exactly real; inputs broadcast."""
    entries = _entries_complex(params, xi_mag, t)
    worst = max(float(np.max(np.abs(e.imag))) for e in entries)
    if worst > 1e-12:
        raise FloatingPointError(f"entry assembly left imaginary residue {worst:g}")
    return GreenMatrix(*(np.ascontiguousarray(e.real) for e in entries))


def green_entries_scalar(params: GreenParams, r: float, t: float):
    """Scalar fast path for quadrature loops; same formulas as green_hat."""
    m = -0.5 * params.kappa * r * r
    h = cmath.sqrt(m * m - params.alpha * params.beta * r * r)
    x = h * t
    mt = m * t
    if abs(x) <= 0.5:
        emt = math.exp(mt)
        ch = emt * cmath.cosh(x)
        sf = emt * t * (cmath.sinh(x) / x if x != 0 else 1.0)
    else:
        ep = cmath.exp(mt + x)
        em = cmath.exp(mt - x)
        ch = 0.5 * (ep + em)
        sf = (ep - em) / (2.0 * h)
    g11 = (ch - m * sf).real
    g22 = (ch + m * sf).real
    g12 = (-params.alpha * r * sf).real
    g21 = (params.beta * r * sf).real
    return g11, g12, g21, g22


def apply_semigroup(pair, t: float, params: GreenParams):
    """Evolve a lattice pair (c, u) by G(|xi|, t) mode by mode."""
    c, u = pair
    if c.lattice != u.lattice:
        raise ValueError("pair components live on different lattices")
    lat = c.lattice
    G = green_hat(params, lat.xi_mag, float(t))
    cc, uc = G.apply(c.coeffs, u.coeffs)
    return (SpectralField(lat, cc, c.hermitian),
            SpectralField(lat, uc, u.hermitian))


def band_decay_curve(pair, params: GreenParams, times: Sequence[float],
                     partition: DyadicPartition):
    """Per-block L^2 norms of the evolved pair; rows of (t, q, value).

    value is the joint norm sqrt(||D_q c||^2 + ||D_q u||^2) at time t.
    """
    rows = []
    for t in times:
        evolved = apply_semigroup(pair, t, params)
        for q in partition.qs(homogeneous=True):
            blocks = [dyadic_block(f, q, partition) for f in evolved]
            val = math.sqrt(sum(l2_norm_spectral(b) ** 2 for b in blocks))
            rows.append((float(t), q, val))
    return rows


def radial_decay_quadrature(params: GreenParams, profile: Callable,
                            dim: int, t: float, r_cut: float = 10.0,
                            rtol: float = 1e-9) -> float:
    """L^2 norm of the evolved radial profile,

        sqrt( integral_0^{r_cut} |G(r, t) v(r)|^2 r^{dim-1} dr )

    with v = profile(r) a 2-vector (the angular measure constant is
    omitted, consistently for all profiles).  Adaptive quadrature with
    the oscillatory/monotone transition radius supplied as a split
    point.
    """

    def integrand(r: float) -> float:
        g11, g12, g21, g22 = green_entries_scalar(params, r, t)
        v1, v2 = profile(r)
        w1 = g11 * v1 + g12 * v2
        w2 = g21 * v1 + g22 * v2
        return (w1 * w1 + w2 * w2) * r ** (dim - 1)

    pts = [p for p in (params.degenerate_radius,) if 0.0 < p < r_cut]
    # resolve the surviving low-frequency band at large t
    scale = 1.0 / math.sqrt(1.0 + params.kappa * t)
    pts.extend(p for p in (scale, 5.0 * scale) if 0.0 < p < r_cut)
    val, err = integrate.quad(integrand, 0.0, r_cut, points=sorted(set(pts)),
                              epsabs=0.0, epsrel=rtol, limit=800)
    if val < 0 or (val > 0 and err / val > 100 * rtol):
        raise RuntimeError(f"quadrature failed to converge: value {val:g}, error {err:g}")
    return math.sqrt(val)


def pointwise_bound_fit(params: GreenParams, r_max: float, t_max: float = 50.0,
                        nr: int = 200, nt: int = 200, bound_const: float = 2.0,
                        t_min: float = 1e-2) -> float:
    """Largest theta with max |G_ij(r, t)| <= bound_const * e^{-theta r^2 t}
    on the sampled grid (0, r_max] x [t_min, t_max].

    Returns theta_hat = min over the grid of -log(maxG / C) / (r^2 t).
    Raises if the plain bound maxG <= C fails anywhere.
    """
    r = np.linspace(r_max / nr, r_max, nr)
    t = np.geomspace(t_min, t_max, nt)
    R, T = np.meshgrid(r, t, indexing="ij")
    G = green_hat(params, R, T)
    maxg = np.max(np.abs(np.stack([G.g11, G.g12, G.g21, G.g22])), axis=0)
    if np.any(maxg > bound_const):
        worst = float(np.max(maxg))
        raise RuntimeError(f"|G| exceeds the bound constant: {worst:g} > {bound_const}")
    theta = -np.log(maxg / bound_const) / (R ** 2 * T)
    return float(np.min(theta))


def sum_bound_scan(theta: float, r_index: int, times: Sequence[float]):
    """Scan of S(t) = sum_{q <= R} e^{-(2/9) 4^q t theta}
    (1 - e^{-(20/3) 4^q t theta})^{1/2} with its three-part split.

    Writing k = -q, part I collects k in [-R, 0] (at most R + 1 terms,
    each <= 1), part II collects 1 <= k <= N0 with
    N0 = floor(log_4((20/3) t theta)) when that is >= 1, and part III
    is the remaining tail k > max(N0, 0).  Rows are
    (t, S, I, II, III).
    """
    if theta <= 0:
        raise ValueError(f"theta must be positive, got {theta}")
    if r_index < 0:
        raise ValueError(f"the top block index must be >= 0, got {r_index}")
    rows = []
    for t in times:
        tt = float(t) * theta
        n0 = math.floor(math.log((20.0 / 3.0) * tt, 4.0)) if tt > 0 else 0
        n0 = max(n0, 0)
        part = {"I": 0.0, "II": 0.0, "III": 0.0}
        q = r_index
        while True:
            x = 4.0 ** q * tt
            term = math.exp(-(2.0 / 9.0) * x) * math.sqrt(-math.expm1(-(20.0 / 3.0) * x))
            k = -q
            if k <= 0:
                part["I"] += term
            elif k <= n0:
                part["II"] += term
            else:
                part["III"] += term
            q -= 1
            if k > max(n0, 0) and term < 1e-18:
                break
            if q < r_index - 4000:
                raise RuntimeError("tail failed to converge")
        s = part["I"] + part["II"] + part["III"]
        rows.append((float(t), s, part["I"], part["II"], part["III"]))
    return rows


def ode_oracle(params: GreenParams, r: float, t: float, rtol: float = 1e-12,
               atol: float = 1e-14) -> np.ndarray:
    """Reference G(r, t) by adaptive integration of the mode system."""

    def rhs(_t, y):
        c1, u1, c2, u2 = y
        return [-params.alpha * r * u1,
                -params.kappa * r * r * u1 + params.beta * r * c1,
                -params.alpha * r * u2,
                -params.kappa * r * r * u2 + params.beta * r * c2]

    sol = integrate.solve_ivp(rhs, (0.0, t), [1.0, 0.0, 0.0, 1.0],
                              method="DOP853", rtol=rtol, atol=atol,
                              dense_output=False)
    if not sol.success:
        raise RuntimeError(f"oracle integration failed: {sol.message}")
    c1, u1, c2, u2 = sol.y[:, -1]
    return np.array([[c1, c2], [u1, u2]])

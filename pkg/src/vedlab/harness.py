"""Decay experiments: evolve radial data under the 2x2 mode semigroup,
either by adaptive quadrature over the continuum of frequencies or on
a periodic lattice, and fit algebraic decay rates.

Also hosts the deterministic initial-data builders shared by the
nonlinear runs and the blockwise-energy comparisons: seeded
band-limited displacement/velocity fields and hash-phased trigonometric
band states that have identical spectral content on any lattice that
resolves them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.fft as sfft
from scipy import special

from .green import GreenParams, apply_semigroup, radial_decay_quadrature
from .lattice import (Lattice, MatrixField, SpectralField, VectorField,
                      dft_forward, gradient, l2_norm_spectral)
from .solver import State

PROFILE_NAMES = ("gaussian", "annulus", "l1bump")


def radial_profile(name: str, dim: int) -> Callable:
    """Radial frequency profiles p(|xi|), normalized to p(0+) <= 1.

    gaussian: e^{-r^2}.  annulus: a smooth bump supported on
    1/2 < r < 1.  l1bump: the transform of the compact physical bump
    (1 - |x|^2)_+^2, proportional to J_{dim/2+2}(r) / r^{dim/2+2};
    this one has p(0) != 0 with slow (algebraic) frequency decay.
    """
    if name == "gaussian":
        def p(r):
            return np.exp(-np.square(r))
        return p
    if name == "annulus":
        def p(r):
            r = np.asarray(r, dtype=float)
            inside = (r > 0.5) & (r < 1.0)
            w = np.zeros_like(r)
            rr = np.where(inside, r, 0.75)
            w = np.where(inside, np.exp(16.0 - 1.0 / ((rr - 0.5) * (1.0 - rr))), 0.0)
            return w if w.ndim else float(w)
        return p
    if name == "l1bump":
        order = 0.5 * dim + 2.0
        limit = 2.0 ** (-order) / special.gamma(order + 1.0)
        def p(r):
            r = np.asarray(r, dtype=float)
            safe = np.where(r > 0, r, 1.0)
            with np.errstate(invalid="ignore", divide="ignore"):
                vals = special.jv(order, safe) / safe ** order
            vals = np.where(r > 0, vals, limit) / limit
            return vals if vals.ndim else float(vals)
        return p
    raise ValueError(f"unknown profile {name!r}, expected one of {PROFILE_NAMES}")


def initial_pair(name: str, dim: int, weights=(1.0, 1.0)) -> Callable:
    """Radial 2-vector r -> (c(r), u(r)) built from one named profile."""
    p = radial_profile(name, dim)
    w1, w2 = float(weights[0]), float(weights[1])

    def pair(r):
        v = p(r)
        return (w1 * v, w2 * v)

    return pair


def lattice_pair(name: str, lattice: Lattice, weights=(1.0, 1.0)):
    """The same radial data sampled on lattice frequencies.

    The zero mode is removed: the pair dynamics there is trivial and
    the decay norms are homogeneous.
    """
    p = radial_profile(name, lattice.dim)
    vals = np.asarray(p(lattice.xi_mag), dtype=float)
    vals[(0,) * lattice.dim] = 0.0
    c = SpectralField(lattice, weights[0] * vals.astype(np.complex128), True)
    u = SpectralField(lattice, weights[1] * vals.astype(np.complex128), True)
    return (c, u)


@dataclass(frozen=True)
class DecayExperiment:
    """One linear decay run: which norm curve to produce and how."""

    kind: str                       # "quadrature" or "lattice"
    params: GreenParams
    dim: int = 3
    profile: str = "gaussian"
    weights: tuple = (1.0, 1.0)
    r_cut: float = 10.0             # quadrature frequency cutoff
    points_per_dim: int = 64        # lattice kind only
    period: float = 2.0 * math.pi * 16.0

    def __post_init__(self):
        if self.kind not in ("quadrature", "lattice"):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.profile not in PROFILE_NAMES:
            raise ValueError(f"unknown profile {self.profile!r}")


def run_experiment(exp: DecayExperiment, times: Sequence[float]) -> np.ndarray:
    """Joint L^2 norm of the evolved pair at each time.

    The two kinds agree in shape (after normalizing by the t = 0
    value) once the lattice resolves the profile: the quadrature curve
    integrates over all of frequency space, the lattice sums its modes.
    """
    times = np.asarray(times, dtype=float)
    if exp.kind == "quadrature":
        pair = initial_pair(exp.profile, exp.dim, exp.weights)
        return np.array([radial_decay_quadrature(exp.params, pair, exp.dim,
                                                 float(t), exp.r_cut)
                         for t in times])
    lat = Lattice(exp.dim, exp.points_per_dim, exp.period)
    pair = lattice_pair(exp.profile, lat, exp.weights)
    out = np.empty(times.shape)
    for i, t in enumerate(times):
        c, u = apply_semigroup(pair, float(t), exp.params)
        out[i] = math.sqrt(l2_norm_spectral(c) ** 2 + l2_norm_spectral(u) ** 2)
    return out


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def fit_slope(times, values, window: Optional[tuple] = None) -> FitResult:
    """Least squares fit of log(value) against log(1 + t).

    A pure power law c (1 + t)^p is recovered exactly (slope = p,
    r_squared = 1).  window = (t_lo, t_hi) restricts the fitted points.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape:
        raise ValueError("times and values differ in shape")
    if window is not None:
        keep = (t >= window[0]) & (t <= window[1])
        t, v = t[keep], v[keep]
    if t.size < 2:
        raise ValueError(f"need at least two points to fit, got {t.size}")
    if np.any(v <= 0):
        raise ValueError("values must be positive for a log-log fit")
    x = np.log1p(t)
    y = np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return FitResult(float(slope), float(intercept), r2, int(t.size))


# ---------------------------------------------------------------------------
# deterministic initial data for the nonlinear solver

def _seeded_scalar(lattice: Lattice, rng, k_max: float) -> SpectralField:
    """Band-limited (|k| <= k_max, zero mean) white-noise scalar."""
    w = rng.standard_normal(lattice.shape)
    coeffs = sfft.fftn(w, norm="ortho")
    kk = np.sqrt(np.sum(lattice.k_int.astype(float) ** 2, axis=0))
    mask = kk <= k_max
    mask[(0,) * lattice.dim] = False
    coeffs *= mask
    # round-trip once so the field is exactly the transform of a real array
    phys = sfft.ifftn(coeffs, norm="ortho").real
    return dft_forward(phys, lattice)


def band_limited_displacement(lattice: Lattice, amplitude: float, k_max: float,
                              seed: int, irrotational: bool = False):
    """Seeded displacement psi and velocity v for nonlinear runs.

    Normalized so max_x |grad psi|_F = max_x |v| = amplitude.  With
    irrotational=True both come from scalar potentials (psi = grad eta,
    v = grad g), so the initial velocity is curl-free.
    """
    rng = np.random.default_rng(seed)
    d = lattice.dim
    if irrotational:
        eta = _seeded_scalar(lattice, rng, k_max)
        g = _seeded_scalar(lattice, rng, k_max)
        psi = gradient(eta)
        v = gradient(g)
    else:
        psi = VectorField(tuple(_seeded_scalar(lattice, rng, k_max) for _ in range(d)))
        v = VectorField(tuple(_seeded_scalar(lattice, rng, k_max) for _ in range(d)))

    grad_mag = np.zeros(lattice.shape)
    for i in range(d):
        gp = gradient(psi[i])
        for j in range(d):
            grad_mag += gp[j].physical() ** 2
    gmax = float(np.sqrt(grad_mag.max()))
    v_mag = np.zeros(lattice.shape)
    for i in range(d):
        v_mag += v[i].physical() ** 2
    vmax = float(np.sqrt(v_mag.max()))
    if gmax == 0.0 or vmax == 0.0:
        raise ValueError("seeded data vanished; enlarge k_max")
    psi = VectorField(tuple(psi[i] * (amplitude / gmax) for i in range(d)))
    v = VectorField(tuple(v[i] * (amplitude / vmax) for i in range(d)))
    return psi, v


def shell_vectors(shells: Sequence[int], dim: int):
    """One representative per +-k pair of integer vectors with |k|^2
    in `shells`, in a fixed (lexicographic) order."""
    shells = set(int(s) for s in shells)
    if any(s <= 0 for s in shells):
        raise ValueError("shells must be positive integers |k|^2")
    kmax = int(math.isqrt(max(shells)))
    rng = range(-kmax, kmax + 1)
    if dim == 2:
        candidates = [(i, j) for i in rng for j in rng]
    else:
        candidates = [(i, j, k) for i in rng for j in rng for k in rng]
    vecs = []
    for k in candidates:
        n2 = sum(c * c for c in k)
        if n2 in shells:
            nz = next(c for c in k if c != 0)
            if nz > 0:  # keep one of each +-k pair
                vecs.append(k)
    if not vecs:
        raise ValueError(f"no lattice vectors on shells {sorted(shells)}")
    return vecs


def trig_band_state(lattice: Lattice, shells: Sequence[int], index: int,
                    amplitude: float = 1.0) -> State:
    """State carrying fixed trigonometric content on integer wavevector
    shells |k|^2 in `shells`: each field is a sum of A cos(k.x + phase)
    with A and phase hash-like functions of (component, wavevector,
    index).

    Coefficients are assigned spectrally, so two lattices with the
    same period whose Nyquist exceeds the shells carry exactly the
    same function; norms and block functionals then agree to rounding.
    """
    d = lattice.dim
    vecs = shell_vectors(shells, d)
    kmax = max(max(abs(c) for c in k) for k in vecs)
    if kmax >= lattice.n // 2:
        raise ValueError(f"shells reach |k| = {kmax}, at or beyond "
                         f"Nyquist {lattice.n // 2}")

    golden = 2.0 * math.pi * 0.6180339887498949
    scale = 0.5 * amplitude * lattice.n ** (d / 2.0)

    def component(slot: int) -> SpectralField:
        coeffs = np.zeros(lattice.shape, dtype=np.complex128)
        for m, k in enumerate(vecs):
            h = (37 * slot + 101 * index + 7 * m
                 + sum((5 + 2 * i) * abs(k[i]) for i in range(d)))
            amp = 1.0 + 0.5 * math.sin(1.0 + 0.9 * h)
            c = scale * amp * complex(math.cos(golden * h), math.sin(golden * h))
            pos = tuple(ki % lattice.n for ki in k)
            neg = tuple(-ki % lattice.n for ki in k)
            coeffs[pos] += c
            coeffs[neg] += c.conjugate()
        return SpectralField(lattice, coeffs, True)

    a = component(0)
    v = VectorField(tuple(component(1 + i) for i in range(d)))
    F = MatrixField(tuple(tuple(component(1 + d + d * i + j) for j in range(d))
                          for i in range(d)))
    return State(a, v, F)

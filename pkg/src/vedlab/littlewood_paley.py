"""Dyadic frequency decomposition and Besov-type norms.

The radial bump phi is built from the mollifier profile e^{-1/x}:
a smooth step u rises from 0 to 1 on [3/4, 4/3] and

    phi(r) = u(r) - u(r/2),   chi(r) = 1 - u(r).

phi is supported in {3/4 <= r <= 8/3} and equals 1 on [4/3, 3/2];
chi is supported in {r <= 4/3} and equals 1 for r <= 3/4.  The sums
telescope exactly, so

    chi(xi) + sum_{q >= 0} phi(2^-q xi) = 1          (all xi)
    sum_{q in Z} phi(2^-q xi) = 1                    (xi != 0)

and at most two consecutive phi(2^-q .) are nonzero at any point.

Norms follow the block convention

    ||u||_{B^s_{p,r}} = ( sum_q (2^{qs} ||D_q u||_{L^p})^r )^{1/r}

with homogeneous blocks over the lattice's dyadic range, or the
low-frequency cutoff chi as the q = -1 inhomogeneous block.  Hybrid
norms weight blocks below and above a threshold with different
exponents and combine with a plain sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid

from .lattice import (Lattice, SpectralField, lp_norm,
                      _component_list)

_RISE_LO = 0.75
_RISE_HI = 4.0 / 3.0


def _mollifier_step(s: np.ndarray) -> np.ndarray:
    """Smooth 0 -> 1 step on [0, 1] built from e^{-1/x}."""
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    lo = s <= 0.0
    hi = s >= 1.0
    mid = ~(lo | hi)
    out[lo] = 0.0
    out[hi] = 1.0
    sm = s[mid]
    # f(x) = e^{-1/x}; step = f(s) / (f(s) + f(1-s)) = 1/(1 + e^{1/s - 1/(1-s)})
    # the exp may overflow to inf just inside the endpoints; 1/(1+inf) = 0 is the limit
    with np.errstate(over="ignore"):
        out[mid] = 1.0 / (1.0 + np.exp(1.0 / sm - 1.0 / (1.0 - sm)))
    return out


def bump_u(r) -> np.ndarray:
    """Smooth step in the radius, 0 below 3/4 and 1 above 4/3."""
    r = np.asarray(r, dtype=float)
    return _mollifier_step((r - _RISE_LO) / (_RISE_HI - _RISE_LO))


def bump_phi(r) -> np.ndarray:
    """Dyadic annulus bump, supported in [3/4, 8/3], equal to 1 on [4/3, 3/2]."""
    r = np.asarray(r, dtype=float)
    return bump_u(r) - bump_u(r / 2.0)


def bump_chi(r) -> np.ndarray:
    """Low-frequency cutoff, supported in [0, 4/3], equal to 1 on [0, 3/4]."""
    return 1.0 - bump_u(r)


@dataclass(frozen=True)
class DyadicPartition:
    """Dyadic block range hosted by a lattice.

    Block q sees the annulus {3/4 * 2^q < |xi| < 8/3 * 2^q}; q_min and
    q_max bracket every block whose annulus meets a lattice frequency,
    chosen so the blocks sum to 1 on all nonzero modes.
    """

    lattice: Lattice
    q_min: int
    q_max: int

    def phi(self, r):
        return bump_phi(r)

    def chi(self, r):
        return bump_chi(r)

    def qs(self, homogeneous: bool = True) -> range:
        if homogeneous:
            return range(self.q_min, self.q_max + 1)
        return range(-1, self.q_max + 1)


def build_partition(lattice: Lattice) -> DyadicPartition:
    ximin, ximax = lattice.xi_min, lattice.xi_max
    # u(2^-q_min xi) = 1 on every nonzero mode; u(2^-(q_max+1) xi) = 0 everywhere
    q_min = math.floor(math.log2(0.75 * ximin))
    q_max = math.ceil(math.log2(ximax / 0.75) - 1.0)
    if q_max - q_min + 1 < 3:
        raise ValueError(
            f"lattice hosts only {q_max - q_min + 1} dyadic blocks, need at least 3")
    return DyadicPartition(lattice, q_min, q_max)


def block_symbol_values(partition: DyadicPartition, q: int) -> np.ndarray:
    return bump_phi(partition.lattice.xi_mag * 2.0 ** (-q))


def dyadic_block(field: SpectralField, q: int, partition: DyadicPartition,
                 homogeneous: bool = True) -> SpectralField:
    """The block D_q f.

    Homogeneous blocks use phi(2^-q xi) for any integer q (out-of-range
    q simply yields the zero field).  Inhomogeneous blocks use chi for
    q = -1, phi(2^-q xi) for q >= 0, and zero for q < -1.
    """
    lat = field.lattice
    if not homogeneous:
        if q == -1:
            sym = bump_chi(lat.xi_mag)
            return SpectralField(lat, field.coeffs * sym, field.hermitian)
        if q < -1:
            return SpectralField(lat, np.zeros(lat.shape, dtype=np.complex128),
                                 field.hermitian)
    sym = bump_phi(lat.xi_mag * 2.0 ** (-q))
    return SpectralField(lat, field.coeffs * sym, field.hermitian)


def low_cutoff(field: SpectralField, q: int, partition: DyadicPartition,
               homogeneous: bool = True) -> SpectralField:
    """S_q f = sum of blocks below q; the multiplier chi(2^-q xi).

    The telescoping sum makes S_q f + sum_{k >= q} D_k f = f exact
    (including the zero mode, which chi passes unchanged).
    """
    lat = field.lattice
    sym = bump_chi(lat.xi_mag * 2.0 ** (-q))
    return SpectralField(lat, field.coeffs * sym, field.hermitian)


@dataclass(frozen=True)
class BesovSpec:
    s: float
    p: float = 2.0
    r: float = 1.0
    homogeneous: bool = True

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.r < 1:
            raise ValueError(f"r must be >= 1, got {self.r}")


@dataclass(frozen=True)
class HybridSpec:
    """Two-exponent norm split at a threshold block.

        sum_{q <= R0} 2^{q s_low} ||D_q u||_{L^p_low}
      + sum_{q >  R0} 2^{q s_high} ||D_q u||_{L^p_high}

    with homogeneous blocks.  s_low = s_high recovers the homogeneous
    B^s_{p,1} norm exactly.
    """

    s_low: float
    s_high: float
    threshold: int = 0
    p_low: float = 2.0
    p_high: float = 2.0


def _blocked(obj, q: int, partition: DyadicPartition, homogeneous: bool):
    return [dyadic_block(c, q, partition, homogeneous)
            for c in _component_list(obj)]


def block_norms(obj, partition: DyadicPartition, homogeneous: bool = True,
                p: float = 2.0) -> dict:
    """L^p norm of each block in the partition range, keyed by q."""
    comps = _component_list(obj)
    for c in comps:
        if not c.hermitian and p != 2.0:
            raise ValueError("L^p norms of non-hermitian fields are only "
                             "supported for p = 2")
    return {q: lp_norm(_blocked(obj, q, partition, homogeneous), p)
            for q in partition.qs(homogeneous)}


def _lr_combine(values: Sequence[float], r: float) -> float:
    if r == np.inf:
        return float(max(values)) if len(values) else 0.0
    return float(np.sum(np.asarray(values) ** r) ** (1.0 / r))


def besov_norm(obj, spec: BesovSpec, partition: DyadicPartition) -> float:
    norms = block_norms(obj, partition, spec.homogeneous, spec.p)
    weighted = [2.0 ** (q * spec.s) * n for q, n in norms.items()]
    return _lr_combine(weighted, spec.r)


def hybrid_norm(obj, spec: HybridSpec, partition: DyadicPartition) -> float:
    total = 0.0
    for q in partition.qs(homogeneous=True):
        if q <= spec.threshold:
            s, p = spec.s_low, spec.p_low
        else:
            s, p = spec.s_high, spec.p_high
        total += 2.0 ** (q * s) * lp_norm(_blocked(obj, q, partition, True), p)
    return total


def chemin_lerner_norm(snapshots: Sequence, times: Sequence[float], r: float,
                       spec: BesovSpec, partition: DyadicPartition) -> float:
    """Time-block norm: blockwise L^r quadrature in time, then the
    weighted l^{spec.r} combination over blocks.

    Snapshots are field-like objects at the given times; the time
    integral uses the trapezoid rule (r = inf takes the sup over
    snapshots).  Exchanging the order (time quadrature of besov_norm)
    gives a value <= this one for r >= 1, by Minkowski.
    """
    if len(snapshots) != len(times):
        raise ValueError("snapshots and times differ in length")
    if len(snapshots) == 0:
        raise ValueError("need at least one snapshot")
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    per_block = []
    qs = list(partition.qs(spec.homogeneous))
    series = {q: [] for q in qs}
    for snap in snapshots:
        norms = block_norms(snap, partition, spec.homogeneous, spec.p)
        for q in qs:
            series[q].append(norms[q])
    for q in qs:
        y = np.asarray(series[q])
        if r == np.inf:
            tq = float(np.max(y))
        elif len(times) == 1:
            tq = 0.0
        else:
            tq = float(trapezoid(y ** r, times) ** (1.0 / r))
        per_block.append(2.0 ** (q * spec.s) * tq)
    return _lr_combine(per_block, spec.r)

"""Run configuration for the nonlinear solver: a strict INI dialect.

Every recognized key has a default; unknown sections or keys are
rejected so a typo cannot silently fall back to a default.  The
resolved form (every key written out explicitly) is what `simulate`
copies next to its outputs, and parsing that text reproduces the
configuration exactly.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass

from .harness import band_limited_displacement
from .lattice import Lattice
from .solver import PhysicalParams, SolverConfig, State, init_from_displacement

_INIT_KINDS = ("displacement", "irrotational")

# section -> key -> (converter, default)
_SCHEMA = {
    "lattice": {
        "dim": (int, 3),
        "points": (int, 32),
        "period": (float, 2.0 * math.pi),
    },
    "physics": {
        "mu": (float, 1.0),
        "lam": (float, 0.0),
        "pressure_gamma": (float, 1.4),
    },
    "initial": {
        "kind": (str, "displacement"),
        "amplitude": (float, 1e-3),
        "k_max": (float, 2.0),
        "seed": (int, 7),
    },
    "time": {
        "dt": (float, 1e-3),
        "t_end": (float, 1.0),
        "series_stride": (int, 50),
        "snapshot_stride": (int, 0),
    },
}


@dataclass(frozen=True)
class RunConfig:
    dim: int = 3
    points: int = 32
    period: float = 2.0 * math.pi
    mu: float = 1.0
    lam: float = 0.0
    pressure_gamma: float = 1.4
    kind: str = "displacement"
    amplitude: float = 1e-3
    k_max: float = 2.0
    seed: int = 7
    dt: float = 1e-3
    t_end: float = 1.0
    series_stride: int = 50
    snapshot_stride: int = 0

    def __post_init__(self):
        if self.kind not in _INIT_KINDS:
            raise ValueError(f"initial kind must be one of {_INIT_KINDS}, got {self.kind!r}")

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None, strict=True)
        parser.read_string(text)
        unknown = []
        values = {}
        for section in parser.sections():
            if section not in _SCHEMA:
                unknown.append(f"[{section}]")
                continue
            for key, raw in parser[section].items():
                if key not in _SCHEMA[section]:
                    unknown.append(f"[{section}] {key}")
                    continue
                conv, _ = _SCHEMA[section][key]
                try:
                    values[(section, key)] = conv(raw)
                except ValueError:
                    raise ValueError(
                        f"bad value for [{section}] {key}: {raw!r} "
                        f"(expected {conv.__name__})") from None
        if unknown:
            raise ValueError("unknown configuration entries: " + ", ".join(unknown))
        kwargs = {}
        for section, keys in _SCHEMA.items():
            for key, (_, default) in keys.items():
                kwargs[key] = values.get((section, key), default)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def resolved_text(self) -> str:
        def fmt(x):
            if isinstance(x, float):
                return repr(x)
            return str(x)

        lines = []
        for section, keys in _SCHEMA.items():
            lines.append(f"[{section}]")
            for key in keys:
                lines.append(f"{key} = {fmt(getattr(self, key))}")
            lines.append("")
        return "\n".join(lines)

    # -- builders ---------------------------------------------------------

    def lattice(self) -> Lattice:
        return Lattice(self.dim, self.points, self.period)

    def physical_params(self) -> PhysicalParams:
        return PhysicalParams(self.mu, self.lam, self.pressure_gamma)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(dt=self.dt, t_end=self.t_end,
                            series_stride=self.series_stride,
                            snapshot_stride=self.snapshot_stride)

    def initial_state(self) -> State:
        lat = self.lattice()
        psi, v = band_limited_displacement(
            lat, self.amplitude, self.k_max, self.seed,
            irrotational=(self.kind == "irrotational"))
        return init_from_displacement(psi, v)

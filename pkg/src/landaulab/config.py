"""Plain key-value run configuration with dotted sections.

The format is one ``section.key = value`` assignment per line, ``#`` comments
and blank lines allowed, no embedded scripting.  Values are sniffed as int,
float, bool or string; vectors are comma-separated, lists of vectors
semicolon-separated.  All parameter constraints from the numerical modules
are re-validated when the run objects are built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coefficients import ModelParams
from .errors import ConfigError
from .grid import DistributionState, VelocityGrid, make_gaussian_mixture, make_maxwellian
from .solver import SolverConfig


def parse_config(path) -> dict:
    """Read a dotted key-value file into a flat ``{key: value}`` mapping."""
    path = Path(path)
    mapping: dict = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}",
                              line=lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key", line=lineno)
        if key in mapping:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}", key=key, line=lineno)
        mapping[key] = _sniff(value.strip())
    return mapping


def _sniff(text: str):
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if ";" in text:
        return [_sniff(part.strip()) for part in text.split(";")]
    if "," in text:
        return [_sniff(part.strip()) for part in text.split(",")]
    tokens = text.split()
    if len(tokens) > 1:
        return [_sniff(tok) for tok in tokens]
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


@dataclass
class RunConfig:
    """Validated configuration for a simulation or audit run."""

    params: ModelParams
    grid: VelocityGrid
    solver: SolverConfig
    initial_kind: str
    initial_spec: dict
    seed: int
    snapshots: bool
    barrier: dict = field(default_factory=dict)
    s_moment: float = 1.0
    rho: float = 1.0
    raw: dict = field(default_factory=dict)


def _require(mapping: dict, key: str):
    if key not in mapping:
        raise ConfigError(f"missing required key {key!r}", key=key)
    return mapping[key]


def _get(mapping: dict, key: str, default):
    return mapping.get(key, default)


def build_run_config(mapping: dict) -> RunConfig:
    """Re-validate every referenced module constraint and assemble run objects."""
    gamma = float(_require(mapping, "model.gamma"))
    a_gamma = mapping.get("model.a_gamma")
    delta = float(_get(mapping, "model.delta", 0.5))
    params = ModelParams(gamma, None if a_gamma is None else float(a_gamma), delta)

    n = _require(mapping, "grid.N")
    half_width = float(_require(mapping, "grid.L"))
    grid = VelocityGrid(half_width, int(n))

    s_val = float(_get(mapping, "model.s", 1.0))
    rho = float(_get(mapping, "diagnostics.rho", 1.0))
    dt_max = mapping.get("solver.dt_max")
    solver = SolverConfig(
        params=params,
        t_end=float(_require(mapping, "solver.T")),
        cfl=float(_get(mapping, "solver.cfl", 0.25)),
        scheme=str(_get(mapping, "solver.scheme", "explicit-euler")),
        positivity=str(_get(mapping, "solver.positivity", "clip-to-zero")),
        dt_max=None if dt_max is None else float(dt_max),
        cadence=int(_get(mapping, "diagnostics.cadence", 1)),
        s_moment=s_val,
        delta=delta,
        rho=rho,
    )

    kind = str(_get(mapping, "initial.kind", "maxwellian"))
    if kind == "maxwellian":
        spec = {
            "mass": float(_get(mapping, "initial.mass", 1.0)),
            "mean": _vector(_get(mapping, "initial.mean", [0.0, 0.0, 0.0])),
            "temperature": float(_get(mapping, "initial.temperature", 1.0)),
        }
    elif kind == "gaussian-mixture":
        masses = _floats(_require(mapping, "initial.masses"))
        means = _vectors(_require(mapping, "initial.means"))
        temps = _floats(_require(mapping, "initial.temperatures"))
        spec = {"masses": masses, "means": means, "temperatures": temps}
    elif kind == "seeded-mixture":
        spec = {"components": int(_get(mapping, "initial.components", 3))}
    else:
        raise ConfigError(f"unknown initial.kind {kind!r}", key="initial.kind")

    barrier = {}
    for name in ("C0", "mu_prime", "ell", "rho", "c0", "c1", "C1", "c_a"):
        key = f"barrier.{name}"
        if key in mapping:
            barrier[name] = float(mapping[key])

    return RunConfig(
        params=params,
        grid=grid,
        solver=solver,
        initial_kind=kind,
        initial_spec=spec,
        seed=int(_get(mapping, "seed", 0)),
        snapshots=bool(_get(mapping, "output.snapshots", True)),
        barrier=barrier,
        s_moment=s_val,
        rho=rho,
        raw=dict(mapping),
    )


def _floats(value) -> list:
    if isinstance(value, (int, float)):
        return [float(value)]
    return [float(v) for v in value]


def _vector(value) -> list:
    if isinstance(value, (int, float)):
        return [float(value)] * 3
    vec = [float(v) for v in value]
    if len(vec) != 3:
        raise ConfigError(f"expected a 3-vector, got {value!r}")
    return vec


def _vectors(value) -> list:
    if isinstance(value, list) and value and isinstance(value[0], list):
        return [_vector(v) for v in value]
    return [_vector(value)]


def initial_state(config: RunConfig) -> DistributionState:
    """Build the configured initial distribution (deterministic given the seed)."""
    if config.initial_kind == "maxwellian":
        s = config.initial_spec
        return make_maxwellian(config.grid, s["mass"], s["mean"], s["temperature"])
    if config.initial_kind == "gaussian-mixture":
        s = config.initial_spec
        return make_gaussian_mixture(config.grid, s["masses"], s["means"], s["temperatures"])
    rng = np.random.default_rng(config.seed)
    from .grid import random_gaussian_mixture

    return random_gaussian_mixture(config.grid, rng,
                                   n_components=config.initial_spec["components"])

"""Model parameters and key-value configuration files.

Defaults reproduce the reference simulation setup: unit link lengths and
masses, uniform-rod inertias, and 10 N m/rad springs at both joints.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError

GRAVITY = 9.81


def _as_vec(x, n, name):
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.size == 1:
        v = np.full(n, v[0])
    if v.size != n:
        raise ConfigError(f"{name} must have {n} entries, got {v.size}")
    return v


@dataclass(frozen=True)
class ModelParams:
    """Geometry, inertia and spring parameters of the elastic kinematic snake.

    H, R : link half-lengths [m]. The central body spans 2H with its joints
        at (+-H, 0) in its own frame; each outer body spans 2R with wheels
        and center of mass at distance R from its joint.
    masses : per-body masses (central, joint-1 body, joint-2 body) [kg].
    inertias : per-body rotational inertias about the body centers [kg m^2].
    k : diagonal joint stiffnesses [N m/rad].
    r_eq : spring equilibrium angles [rad].
    g : gravitational acceleration [m/s^2], used only by the cost of
        transport; the planar dynamics are gravity-free.
    singularity_guard : reject shapes with |Q(r)| below this value.
    cond_limit : reject reduced mass matrices with condition number above.
    """

    H: float = 1.0
    R: float = 1.0
    masses: np.ndarray = field(default_factory=lambda: np.ones(3))
    inertias: np.ndarray = field(default_factory=lambda: np.full(3, 1.0 / 3.0))
    k: np.ndarray = field(default_factory=lambda: np.full(2, 10.0))
    r_eq: np.ndarray = field(default_factory=lambda: np.zeros(2))
    g: float = GRAVITY
    singularity_guard: float = 1e-9
    cond_limit: float = 1e12

    def __post_init__(self):
        object.__setattr__(self, "masses", _as_vec(self.masses, 3, "masses"))
        object.__setattr__(self, "inertias", _as_vec(self.inertias, 3, "inertias"))
        object.__setattr__(self, "k", _as_vec(self.k, 2, "k"))
        object.__setattr__(self, "r_eq", _as_vec(self.r_eq, 2, "r_eq"))
        if self.H <= 0 or self.R <= 0:
            raise ConfigError("link half-lengths H, R must be positive")
        if np.any(self.masses <= 0):
            raise ConfigError("masses must be positive")
        if np.any(self.inertias <= 0):
            raise ConfigError("inertias must be positive")
        if np.any(self.k < 0):
            raise ConfigError("stiffnesses must be nonnegative")

    @property
    def K(self) -> np.ndarray:
        """2x2 diagonal stiffness matrix."""
        return np.diag(self.k)

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def with_equilibrium(self, r_eq) -> "ModelParams":
        """Copy of the parameters with the spring equilibria replaced."""
        return replace(self, r_eq=np.asarray(r_eq, dtype=float))

    def rescaled(self, k_ratio=1.0, m_ratio=1.0, l_ratio=1.0) -> "ModelParams":
        """Scale stiffness, mass and length; inertias follow m*l^2."""
        return replace(
            self,
            H=self.H * l_ratio,
            R=self.R * l_ratio,
            masses=self.masses * m_ratio,
            inertias=self.inertias * m_ratio * l_ratio**2,
            k=self.k * k_ratio,
        )


@dataclass(frozen=True)
class FrictionParams:
    """Loss model constants: constant rolling resistance per body [N] and
    viscous joint damping [N m s/rad]."""

    rolling_resistance: float = 0.03
    joint_damping: float = 0.023

    def __post_init__(self):
        if self.rolling_resistance < 0 or self.joint_damping < 0:
            raise ConfigError("friction coefficients must be nonnegative")


def parse_kv_file(path) -> dict:
    """Parse a `key = value` config file; '#' starts a comment."""
    entries = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected `key = value`, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        entries[key] = value
    return entries


_SCALAR_KEYS = {"H", "R", "g", "singularity_guard", "cond_limit"}
_VECTOR_KEYS = {
    "masses": 3,
    "inertias": 3,
    "k": 2,
    "r_eq": 2,
}


def load_params(path) -> ModelParams:
    """Build ModelParams from a key-value file; unknown keys are rejected."""
    entries = parse_kv_file(path)
    kwargs = {}
    for key, value in entries.items():
        if key in _SCALAR_KEYS:
            try:
                kwargs[key] = float(value)
            except ValueError as exc:
                raise ConfigError(f"{key}: not a number: {value!r}") from exc
        elif key in _VECTOR_KEYS:
            try:
                kwargs[key] = [float(v) for v in value.replace(",", " ").split()]
            except ValueError as exc:
                raise ConfigError(f"{key}: not a number list: {value!r}") from exc
        else:
            raise ConfigError(f"unknown parameter key {key!r}")
    return ModelParams(**kwargs)


def dump_params(params: ModelParams, path) -> None:
    """Write ModelParams in the same key-value format load_params reads."""
    lines = [
        f"H = {params.H!r}",
        f"R = {params.R!r}",
        "masses = " + " ".join(repr(v) for v in params.masses),
        "inertias = " + " ".join(repr(v) for v in params.inertias),
        "k = " + " ".join(repr(v) for v in params.k),
        "r_eq = " + " ".join(repr(v) for v in params.r_eq),
        f"g = {params.g!r}",
        f"singularity_guard = {params.singularity_guard!r}",
        f"cond_limit = {params.cond_limit!r}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")

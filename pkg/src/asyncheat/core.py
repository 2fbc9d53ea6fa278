"""Domain types shared by every solver: parameters, fields, boundary
conditions, grid partitions, initial conditions and the analytic oracles.

Grid indices are 0-based, i = 0, ..., N-1.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Union

import numpy as np

#: Post-run finiteness checks. Off by default so benchmark timings stay clean;
#: the test suite and the CLI switch them on.
CHECK_FINITE = os.environ.get("HEAT_CHECK_FINITE", "0") not in ("", "0")

R_MAX = 0.5


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class ContractError(RuntimeError):
    """A caller broke an operation's precondition."""


class NumericalDivergence(ArithmeticError):
    """A NaN or Inf showed up in a checked run."""


def derive_r(alpha: float, dt: float, dx: float) -> float:
    """Diffusion number ``alpha * dt / dx**2``."""
    for name, v in (("alpha", alpha), ("dt", dt), ("dx", dx)):
        if not v > 0:
            raise DomainError(f"{name} must be > 0, got {v!r}")
    return alpha * dt / (dx * dx)


@dataclass(frozen=True)
class SolverParams:
    """Thermal diffusivity, time step and grid spacing.

    The default constructor enforces the explicit-scheme stability window
    0 < r <= 0.5. Use :meth:`unchecked` to build parameters outside it.
    """

    alpha: float
    dt: float
    dx: float
    checked: bool = field(default=True, repr=False, compare=False, kw_only=True)

    def __post_init__(self):
        r = derive_r(self.alpha, self.dt, self.dx)
        if self.checked and not 0.0 < r <= R_MAX:
            raise DomainError(f"r = {r!r} outside the stability window (0, {R_MAX}]")

    @property
    def r(self) -> float:
        return derive_r(self.alpha, self.dt, self.dx)

    @property
    def stable(self) -> bool:
        return 0.0 < self.r <= R_MAX

    @classmethod
    def unchecked(cls, alpha: float, dt: float, dx: float) -> "SolverParams":
        """Build parameters without the stability-window check.

        Only meant for divergence demonstrations.
        """
        return cls(alpha, dt, dx, checked=False)

    @classmethod
    def from_r(cls, r: float, unchecked: bool = False) -> "SolverParams":
        """Parameters with alpha = r and dt = dx = 1, so that the derived r is exact."""
        if unchecked:
            return cls.unchecked(r, 1.0, 1.0)
        return cls(r, 1.0, 1.0)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class TemperatureField:
    """Temperatures at N >= 3 grid points. Immutable once built."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.dtype not in (np.float64, np.float32):
            v = v.astype(np.float64)
        if v.ndim != 1 or v.shape[0] < 3:
            raise DomainError(f"a field needs N >= 3 points, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("field contains NaN or Inf")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def N(self) -> int:
        return self.values.shape[0]

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, i):
        return self.values[i]

    def __eq__(self, other):
        if not isinstance(other, TemperatureField):
            return NotImplemented
        return (self.values.dtype == other.values.dtype
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash(self.values.tobytes())

    def scaled(self, s: float) -> "TemperatureField":
        return TemperatureField(self.values * s)

    def max_abs_diff(self, other: "TemperatureField") -> float:
        return float(np.max(np.abs(self.values.astype(np.float64)
                                   - other.values.astype(np.float64))))


@dataclass(frozen=True)
class Dirichlet:
    """End temperatures pinned to ``c1`` (i = 0) and ``c2`` (i = N-1)."""

    c1: float
    c2: float

    kind = "dirichlet"


@dataclass(frozen=True)
class Periodic:
    """Ring domain: the two end points are each other's neighbours."""

    kind = "periodic"


BoundaryCondition = Union[Dirichlet, Periodic]


def impose(u: TemperatureField, bc: BoundaryCondition) -> TemperatureField:
    """Return ``u`` with Dirichlet end values written in; a no-op otherwise."""
    if isinstance(bc, Dirichlet) and not _ends_match(u, bc):
        v = u.values.copy()
        v[0] = bc.c1
        v[-1] = bc.c2
        return TemperatureField(v)
    return u


def _ends_match(u: TemperatureField, bc: Dirichlet) -> bool:
    t = u.values.dtype.type
    return u.values[0] == t(bc.c1) and u.values[-1] == t(bc.c2)


def check_ends(u: TemperatureField, bc: BoundaryCondition) -> None:
    if isinstance(bc, Dirichlet) and not _ends_match(u, bc):
        raise ContractError(
            f"Dirichlet ends ({u.values[0]!r}, {u.values[-1]!r}) "
            f"do not match ({bc.c1!r}, {bc.c2!r})")


@dataclass(frozen=True)
class PartitionSpec:
    """Contiguous split of N grid points into P = N / n processing elements."""

    N: int
    n: int = 1
    P: int = field(init=False)

    def __post_init__(self):
        if self.N < 3:
            raise DomainError(f"N must be >= 3, got {self.N}")
        if self.n < 1 or self.N % self.n:
            raise DomainError(f"n = {self.n} does not divide N = {self.N}")
        object.__setattr__(self, "P", self.N // self.n)

    def owner(self, i: int) -> int:
        return i // self.n

    def block(self, p: int) -> range:
        return range(p * self.n, (p + 1) * self.n)

    @classmethod
    def single(cls, N: int) -> "PartitionSpec":
        return cls(N, N)


def _check_n(N: int) -> None:
    if N < 3:
        raise DomainError(f"N must be >= 3, got {N}")


def cosine_init(N: int) -> TemperatureField:
    """cos^2(3 pi i / (2 (N-1))) at each grid point."""
    _check_n(N)
    i = np.arange(N, dtype=np.float64)
    return TemperatureField(np.cos(3 * np.pi / 2 * i / (N - 1)) ** 2)


def constant_init(N: int, value: float) -> TemperatureField:
    _check_n(N)
    return TemperatureField(np.full(N, float(value)))


def linear_steady_state(N: int, c1: float, c2: float) -> TemperatureField:
    """Discrete steady state under Dirichlet ends: the straight line from c1 to c2."""
    _check_n(N)
    i = np.arange(N, dtype=np.float64)
    v = c1 + (c2 - c1) * i / (N - 1)
    v[0], v[-1] = c1, c2
    return TemperatureField(v)


def periodic_steady_state(u0: TemperatureField) -> TemperatureField:
    """Constant field carrying the same total heat as ``u0``."""
    return constant_init(u0.N, total_heat(u0) / u0.N)


def l2_norm(u: TemperatureField) -> float:
    v = np.abs(u.values.astype(np.float64))
    m = float(v.max())
    if m == 0.0:
        return 0.0
    # scaled so that tiny entries do not underflow to a zero norm
    return m * math.sqrt(math.fsum((v / m) ** 2))


def total_heat(u: TemperatureField) -> float:
    return math.fsum(float(x) for x in u.values)


def ensure_finite(a: np.ndarray, what: str = "field") -> None:
    if not np.all(np.isfinite(a)):
        raise NumericalDivergence(f"non-finite value in {what}")

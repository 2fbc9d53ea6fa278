"""Run configuration: JSON file, ``--set key=value`` overrides and validation.

Precedence, lowest first: built-in defaults, the JSON file, the ``HEAT_SEED``
environment variable (seed only), ``--set`` flags.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import core
from .asyncsim import DelayModel, Fixed, Geometric, Uniform
from .core import (Dirichlet, DomainError, PartitionSpec, Periodic, SolverParams,
                   TemperatureField)

MODES = ("sync", "async-sim", "exec-barriered", "exec-free")
BC_KINDS = ("dirichlet", "periodic")
IC_KINDS = ("cosine", "constant", "file")
DISTRIBUTIONS = ("uniform", "fixed", "geometric")


class ConfigError(ValueError):
    """Invalid configuration. ``source`` says where the offending key came from."""

    def __init__(self, key: str, message: str, source: str = "config"):
        self.key = key
        self.source = source
        super().__init__(f"{source}: {key}: {message}")


@dataclass
class RunConfig:
    N: int = 100
    n: int = 1
    alpha: float = 0.5
    dt: float = 0.01
    dx: float = 0.1
    r: float | None = None
    bc: str = "dirichlet"
    c1: float = 1.0
    c2: float = 0.0
    ic: str = "cosine"
    ic_value: float = 0.0
    ic_file: str | None = None
    q: int = 5
    distribution: str = "uniform"
    delay: int = 0
    p: float = 0.5
    seed: int = 0
    k_end: int = 2000
    record: int | None = None
    mode: str = "async-sim"
    workers: int | None = None
    yield_every: int | None = None
    precision: str = "double"
    allow_unstable: bool = False
    M: int = 50
    bench_sizes: list[int] = field(default_factory=lambda: [100, 1000, 10000])
    bench_modes: list[str] = field(default_factory=lambda: ["exec-barriered", "exec-free"])
    reps: int = 5
    bench_k_end: int = 10000

    def params(self) -> SolverParams:
        if self.r is not None:
            return SolverParams.from_r(self.r, unchecked=self.allow_unstable)
        if self.allow_unstable:
            return SolverParams.unchecked(self.alpha, self.dt, self.dx)
        return SolverParams(self.alpha, self.dt, self.dx)

    def boundary(self):
        return Dirichlet(self.c1, self.c2) if self.bc == "dirichlet" else Periodic()

    def partition(self) -> PartitionSpec:
        return PartitionSpec(self.N, self.n)

    def delay_model(self) -> DelayModel:
        dist = {"uniform": Uniform(), "fixed": Fixed(self.delay),
                "geometric": Geometric(self.p)}[self.distribution]
        return DelayModel(self.q, dist, self.seed)

    def initial(self) -> TemperatureField:
        if self.ic == "cosine":
            return core.cosine_init(self.N)
        if self.ic == "constant":
            return core.constant_init(self.N, self.ic_value)
        values = _load_values(Path(self.ic_file))
        if values.shape != (self.N,):
            raise ConfigError("ic_file", f"holds {values.size} values, expected N={self.N}")
        return TemperatureField(values)

    def steady_state(self) -> TemperatureField:
        if self.bc == "dirichlet":
            return core.linear_steady_state(self.N, self.c1, self.c2)
        return core.periodic_steady_state(self.initial())


def _load_values(path: Path) -> np.ndarray:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("ic_file", f"cannot read {path}: {exc.strerror}") from exc
    if path.suffix == ".json":
        return np.asarray(json.loads(text), dtype=np.float64)
    return np.asarray([float(tok) for line in text.splitlines()
                       for tok in line.split("#", 1)[0].replace(",", " ").split()])


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_INTS = {"N", "n", "q", "delay", "seed", "k_end", "record", "workers", "yield_every",
         "M", "reps", "bench_k_end"}
_FLOATS = {"alpha", "dt", "dx", "r", "c1", "c2", "ic_value", "p"}
_NULLABLE = {"r", "ic_file", "record", "workers", "yield_every"}
_CHOICES = {"bc": BC_KINDS, "ic": IC_KINDS, "distribution": DISTRIBUTIONS,
            "mode": MODES, "precision": ("double", "single")}


def _coerce(key: str, value: Any, source: str) -> Any:
    def bad(msg):
        return ConfigError(key, msg, source)

    if key not in _FIELDS:
        raise bad("unknown key")
    if value is None:
        if key in _NULLABLE:
            return None
        raise bad("may not be null")
    if key in _INTS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise bad(f"expected an integer, got {value!r}")
        return value
    if key in _FLOATS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise bad(f"expected a number, got {value!r}")
        return float(value)
    if key == "allow_unstable":
        if not isinstance(value, bool):
            raise bad(f"expected true or false, got {value!r}")
        return value
    if key in _CHOICES:
        if value not in _CHOICES[key]:
            raise bad(f"expected one of {', '.join(_CHOICES[key])}, got {value!r}")
        return value
    if key == "bench_sizes":
        if not isinstance(value, list) or not value or not all(
                isinstance(v, int) and not isinstance(v, bool) for v in value):
            raise bad(f"expected a non-empty list of integers, got {value!r}")
        return value
    if key == "bench_modes":
        if not isinstance(value, list) or not value or not all(
                v in ("exec-barriered", "exec-free") for v in value):
            raise bad(f"expected a list drawn from exec-barriered, exec-free, got {value!r}")
        return value
    if key == "ic_file":
        if not isinstance(value, str):
            raise bad(f"expected a path, got {value!r}")
        return value
    raise AssertionError(key)  # pragma: no cover


def _line_of(text: str, key: str) -> int | None:
    needle = json.dumps(key)
    for lineno, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return lineno
    return None


def _validate(cfg: RunConfig) -> None:
    def bad(key, msg):
        return ConfigError(key, msg, "config")

    positive = ("N", "n", "q", "k_end", "M", "reps", "bench_k_end")
    for key in positive:
        if getattr(cfg, key) < (0 if key == "k_end" else 1):
            raise bad(key, f"must be positive, got {getattr(cfg, key)}")
    if cfg.N < 3:
        raise bad("N", f"must be >= 3, got {cfg.N}")
    if cfg.N % cfg.n:
        raise bad("n", f"{cfg.n} does not divide N = {cfg.N}")
    if cfg.record is not None and cfg.record < 1:
        raise bad("record", f"must be >= 1, got {cfg.record}")
    if cfg.workers is not None and cfg.workers != cfg.N // cfg.n and cfg.mode.startswith("exec"):
        raise bad("workers", f"{cfg.workers} != N / n = {cfg.N // cfg.n} PEs")
    if cfg.yield_every is not None and cfg.yield_every < 0:
        raise bad("yield_every", "must be >= 0")
    if not 0 <= cfg.seed < 2**64:
        raise bad("seed", "must fit in 64 unsigned bits")
    if cfg.distribution == "fixed" and not 0 <= cfg.delay < cfg.q:
        raise bad("delay", f"fixed delay {cfg.delay} must lie in [0, q={cfg.q})")
    if cfg.distribution == "geometric" and not 0 < cfg.p <= 1:
        raise bad("p", f"must lie in (0, 1], got {cfg.p}")
    if cfg.ic == "file" and cfg.ic_file is None:
        raise bad("ic_file", "required when ic is 'file'")
    if any(s < 3 for s in cfg.bench_sizes):
        raise bad("bench_sizes", "every size must be >= 3")
    try:
        params = cfg.params()
    except DomainError as exc:
        key = "r" if cfg.r is not None else "alpha/dt/dx"
        hint = "" if cfg.allow_unstable else " (set allow_unstable to override)"
        raise bad(key, f"{exc}{hint}") from None
    if cfg.allow_unstable and not params.r > 0:
        raise bad("r", "must be > 0")


def parse_value(text: str) -> Any:
    """``--set`` values are JSON when they parse as JSON, plain strings otherwise."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_config(path: str | os.PathLike | None = None, sets: list[str] = (),
                 env: dict[str, str] | None = None) -> RunConfig:
    """Build and validate a :class:`RunConfig` from a JSON file and overrides."""
    env = os.environ if env is None else env
    values: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("--config", f"invalid JSON at line {exc.lineno}: {exc.msg}",
                              str(path)) from exc
        if not isinstance(data, dict):
            raise ConfigError("--config", "top level must be a JSON object", str(path))
        for key, value in data.items():
            line = _line_of(text, key)
            source = f"{path}:{line}" if line else str(path)
            values[key] = _coerce(key, value, source)
    if "HEAT_SEED" in env:
        try:
            values["seed"] = int(env["HEAT_SEED"], 0)
        except ValueError:
            raise ConfigError("seed", f"not an integer: {env['HEAT_SEED']!r}",
                              "HEAT_SEED") from None
    for item in sets:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(item, "expected key=value", "--set")
        key = key.strip()
        values[key] = _coerce(key, parse_value(raw), f"--set {item}")
    cfg = RunConfig(**values)
    _validate(cfg)
    return cfg

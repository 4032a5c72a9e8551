"""Sectioned key=value run configuration.

Format: ``[model]``/``[engine]``/``[econ]``/``[sweep]`` sections holding
``key = value`` lines, ``#`` comments allowed anywhere.  Laws are written
``exp(rate)``, ``gamma(shape, rate)`` or ``weibull(scale, shape)``; a hacker
list separates laws with ``;`` and supports ``law * count`` repetition.

Example::

    [model]
    n = 5
    mode = destructive
    hackers = exp(1.0) * 3; gamma(2, 1.5)
    detect = exp(1.0)
    reset = exp(1.0)

    [engine]
    reps = 30000
    seed = 0

    [sweep]
    m = 1:12
    t = 0:10:64
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .distributions import Exponential, Gamma, Law, Weibull
from .econ import EconSpec, RateExpr
from .errors import ConfigError
from .model import AttackModel, quorum_size

__all__ = ["RunConfig", "law_text", "parse_config"]

_SECTIONS = ("model", "engine", "econ", "sweep")

_LAW_RE = re.compile(r"^(exp|exponential|gamma|weibull)\s*\(([^()]*)\)$", re.IGNORECASE)


def law_text(law: Law) -> str:
    """Config-syntax rendering of a law (used when echoing metadata)."""
    if isinstance(law, Exponential):
        return f"exp({law.rate:g})"
    if isinstance(law, Gamma):
        return f"gamma({law.shape:g}, {law.rate:g})"
    return f"weibull({law.scale:g}, {law.shape:g})"


@dataclass
class RunConfig:
    """Validated run configuration with all defaults resolved."""

    hackers: tuple[Law, ...]
    detect: Law
    reset: Law
    n: Optional[int] = None
    quorum: Optional[int] = None
    mode: str = "destructive"
    reps: int = 30_000
    seed: int = 0
    grid_step: Optional[float] = None
    horizon: Optional[float] = None
    quad_tol: float = 1e-9
    workers: int = 1
    econ: Optional[EconSpec] = None
    sweep_m: Optional[tuple[int, int]] = None
    sweep_k: Optional[tuple[int, int]] = None
    t_grid: Optional[tuple[float, ...]] = None
    _base_quorum: int = field(init=False, repr=False)

    def __post_init__(self):
        if (self.n is None) == (self.quorum is None):
            raise ConfigError("the model needs exactly one of n or m")
        if self.quorum is not None:
            base = int(self.quorum)
            if base < 1:
                raise ConfigError("m must be at least 1")
        else:
            base = quorum_size(int(self.n), self.mode)
        self._base_quorum = base

    def build_model(self, m: Optional[int] = None, k: Optional[int] = None) -> AttackModel:
        """Model for one run or sweep arm.

        ``m`` overrides the quorum; ``k`` resizes the hacker list by cycling
        the configured laws.
        """
        quorum = int(m) if m is not None else self._base_quorum
        if k is None:
            hackers = self.hackers
        else:
            k = int(k)
            if k < 1:
                raise ValueError("k must be at least 1")
            hackers = tuple(self.hackers[i % len(self.hackers)] for i in range(k))
        return AttackModel(quorum=quorum, hackers=hackers, detect=self.detect, reset=self.reset)

    def echo(self) -> dict:
        """Resolved settings for the metadata sidecar."""
        return {
            "n": self.n,
            "m": self._base_quorum,
            "mode": self.mode,
            "hackers": [law_text(law) for law in self.hackers],
            "detect": law_text(self.detect),
            "reset": law_text(self.reset),
            "reps": self.reps,
            "seed": self.seed,
            "grid_step": self.grid_step,
            "horizon": self.horizon,
            "quad_tol": self.quad_tol,
            "workers": self.workers,
            "econ": None
            if self.econ is None
            else {
                "revenue": [self.econ.revenue.a, self.econ.revenue.b, self.econ.revenue.c],
                "reset_cost": [
                    self.econ.reset_cost.a,
                    self.econ.reset_cost.b,
                    self.econ.reset_cost.c,
                ],
                "run_cost": [self.econ.run_cost.a, self.econ.run_cost.b, self.econ.run_cost.c],
            },
            "sweep_m": list(self.sweep_m) if self.sweep_m else None,
            "sweep_k": list(self.sweep_k) if self.sweep_k else None,
            "t_grid": list(self.t_grid) if self.t_grid else None,
        }


def _parse_law(text: str, key: str, line: int) -> Law:
    match = _LAW_RE.match(text.strip())
    if match is None:
        raise ConfigError(
            f"{key}: cannot parse law {text!r} "
            "(expected exp(rate), gamma(shape, rate) or weibull(scale, shape))",
            line,
        )
    name = match.group(1).lower()
    try:
        args = [float(a) for a in match.group(2).split(",")]
    except ValueError:
        raise ConfigError(f"{key}: non-numeric law parameter in {text!r}", line) from None
    try:
        if name in ("exp", "exponential"):
            if len(args) != 1:
                raise ValueError("exp takes one parameter (rate)")
            return Exponential(rate=args[0])
        if name == "gamma":
            if len(args) != 2:
                raise ValueError("gamma takes two parameters (shape, rate)")
            return Gamma(shape=args[0], rate=args[1])
        if len(args) != 2:
            raise ValueError("weibull takes two parameters (scale, shape)")
        return Weibull(scale=args[0], shape=args[1])
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}", line) from None


def _parse_hackers(text: str, line: int) -> tuple[Law, ...]:
    laws: list[Law] = []
    for part in (p.strip() for p in text.split(";")):
        if not part:
            continue
        count = 1
        law_text_part = part
        if "*" in part:
            law_text_part, _, count_text = part.rpartition("*")
            try:
                count = int(count_text.strip())
            except ValueError:
                raise ConfigError(f"hackers: bad repeat count in {part!r}", line) from None
            if count < 1:
                raise ConfigError(f"hackers: repeat count must be positive in {part!r}", line)
        law = _parse_law(law_text_part.strip(), "hackers", line)
        laws.extend([law] * count)
    if not laws:
        raise ConfigError("hackers: at least one law is required", line)
    return tuple(laws)


def _parse_int_range(text: str, key: str, line: int) -> tuple[int, int]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"{key}: expected start:stop, got {text!r}", line)
    try:
        lo, hi = int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"{key}: non-integer bound in {text!r}", line) from None
    if lo < 1 or hi < lo:
        raise ConfigError(f"{key}: need 1 <= start <= stop, got {text!r}", line)
    return lo, hi


def _parse_t_grid(text: str, line: int) -> tuple[float, ...]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"t: expected start:stop:count, got {text!r}", line)
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"t: bad value in {text!r}", line) from None
    if start < 0.0 or stop <= start or count < 2:
        raise ConfigError(f"t: need 0 <= start < stop and count >= 2, got {text!r}", line)
    step = (stop - start) / (count - 1)
    return tuple(start + step * i for i in range(count))


def _parse_triple(text: str, key: str, line: int) -> RateExpr:
    try:
        args = [float(a) for a in text.split(",")]
    except ValueError:
        raise ConfigError(f"{key}: non-numeric coefficient in {text!r}", line) from None
    if len(args) != 3:
        raise ConfigError(f"{key}: expected a, b, c coefficients, got {text!r}", line)
    return RateExpr(a=args[0], b=args[1], c=args[2])


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document."""
    entries: dict[tuple[str, str], tuple[str, int]] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in _SECTIONS:
                raise ConfigError(f"unknown section [{name}]", lineno)
            section = name
            continue
        if section is None:
            raise ConfigError("assignment before any [section] header", lineno)
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {line!r}", lineno)
        key, _, value = line.partition("=")
        key, value = key.strip().lower(), value.strip()
        if not key or not value:
            raise ConfigError("empty key or value", lineno)
        if (section, key) in entries:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", lineno)
        entries[(section, key)] = (value, lineno)

    def take(section: str, key: str):
        return entries.pop((section, key), None)

    def take_scalar(section, key, conv, default, predicate=None, what=""):
        item = take(section, key)
        if item is None:
            return default
        value, line = item
        try:
            out = conv(value)
        except ValueError:
            raise ConfigError(f"{key}: bad value {value!r}", line) from None
        if predicate is not None and not predicate(out):
            raise ConfigError(f"{key}: {what}, got {value!r}", line)
        return out

    if ("model", "detect") not in entries:
        raise ConfigError("missing [model] detect law")
    if ("model", "reset") not in entries:
        raise ConfigError("missing [model] reset law")
    if ("model", "hackers") not in entries:
        raise ConfigError("missing [model] hackers list")

    n_item = take("model", "n")
    m_item = take("model", "m")
    if n_item is not None and m_item is not None:
        raise ConfigError("n conflicts with m: give exactly one", m_item[1])
    hackers_text, hackers_line = take("model", "hackers")
    detect_text, detect_line = take("model", "detect")
    reset_text, reset_line = take("model", "reset")
    mode = take_scalar(
        "model",
        "mode",
        str.lower,
        "destructive",
        lambda v: v in ("destructive", "ransom"),
        "must be destructive or ransom",
    )

    econ = None
    triples = {key: take("econ", key) for key in ("revenue", "reset_cost", "run_cost")}
    present = [k for k, v in triples.items() if v is not None]
    if present:
        missing = [k for k, v in triples.items() if v is None]
        if missing:
            raise ConfigError(f"econ section incomplete: missing {', '.join(missing)}")
        econ = EconSpec(
            revenue=_parse_triple(triples["revenue"][0], "revenue", triples["revenue"][1]),
            reset_cost=_parse_triple(
                triples["reset_cost"][0], "reset_cost", triples["reset_cost"][1]
            ),
            run_cost=_parse_triple(triples["run_cost"][0], "run_cost", triples["run_cost"][1]),
        )

    sweep_m_item = take("sweep", "m")
    sweep_k_item = take("sweep", "k")
    t_item = take("sweep", "t")

    try:
        n_value = int(n_item[0]) if n_item is not None else None
    except ValueError:
        raise ConfigError(f"n: bad value {n_item[0]!r}", n_item[1]) from None
    try:
        m_value = int(m_item[0]) if m_item is not None else None
    except ValueError:
        raise ConfigError(f"m: bad value {m_item[0]!r}", m_item[1]) from None

    cfg_kwargs = dict(
        hackers=_parse_hackers(hackers_text, hackers_line),
        detect=_parse_law(detect_text, "detect", detect_line),
        reset=_parse_law(reset_text, "reset", reset_line),
        n=n_value,
        quorum=m_value,
        mode=mode,
        reps=take_scalar("engine", "reps", int, 30_000, lambda v: v >= 2, "must be at least 2"),
        seed=take_scalar("engine", "seed", int, 0, lambda v: v >= 0, "must be nonnegative"),
        grid_step=take_scalar(
            "engine", "grid_step", float, None, lambda v: v > 0, "must be positive"
        ),
        horizon=take_scalar("engine", "horizon", float, None, lambda v: v > 0, "must be positive"),
        quad_tol=take_scalar(
            "engine", "quad_tol", float, 1e-9, lambda v: v > 0, "must be positive"
        ),
        workers=take_scalar("engine", "workers", int, 1, lambda v: v >= 1, "must be at least 1"),
        econ=econ,
        sweep_m=_parse_int_range(sweep_m_item[0], "m", sweep_m_item[1]) if sweep_m_item else None,
        sweep_k=_parse_int_range(sweep_k_item[0], "k", sweep_k_item[1]) if sweep_k_item else None,
        t_grid=_parse_t_grid(t_item[0], t_item[1]) if t_item else None,
    )

    if entries:
        (section, key), (_, line) = next(iter(entries.items()))
        raise ConfigError(f"unknown key {key!r} in [{section}]", line)

    try:
        return RunConfig(**cfg_kwargs)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None

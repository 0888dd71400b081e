"""Event-level generation of time-tagged click streams for a two-wing test.

A source emits pairs at Poisson times; each pair carries one hidden angle
``phi`` uniform on ``[0, 2*pi)``. Each wing turns ``phi`` and its local
analyzer angle into an outcome, a detection decision, and a registration
delay. Nothing a wing does depends on the other wing's setting.

Random numbers come from numpy's ``Philox`` counter-based generator, one
independent substream per role, keyed by ``SeedSequence(seed, spawn_key=(k,))``:

====  =====================================================================
k     role
====  =====================================================================
0     source: emission gaps, then one ``phi`` per pair
1     per-pair local draws, laid out ``(pair, slot, side)``: side A reads the
      even flat positions, side B the odd ones
2, 3  dark counts on side A, side B
====  =====================================================================

Models (angle ``a`` is the local setting, ``x = phi - a``):

* ``deterministic-lhv``: outcome ``sign(cos 2x)``, detected with probability
  ``efficiency``, delay ``delay_base_ns``.
* ``malus-lhv``: as above but detected with probability
  ``efficiency * cos(x)**2``.
* ``timedelay-lhv``: always detected; delay
  ``delay_base_ns + delay_spread_ns * r * sin(2x)**2`` with ``r`` a local
  uniform draw.

Every model adds ``channel_skew_ns[side]`` to the delay of clicks on the -1
detector (cable/electronics offset between the two detectors of a wing).
Click times are integer nanoseconds; a click landing on an occupied
timestamp is moved forward one nanosecond at a time until free, and clicks
at or past ``duration_ns`` are lost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError, ResourceError

MODELS = ("deterministic-lhv", "malus-lhv", "timedelay-lhv")
SIDES = ("A", "B")

_SOURCE, _LOCAL, _DARK_A, _DARK_B = range(4)


@dataclass(frozen=True)
class ModelConfig:
    model: str
    pair_rate_hz: float
    duration_ns: int
    settings: Mapping[str, float]
    seed: int
    efficiency: float = 1.0
    dark_rate_hz: float = 0.0
    delay_base_ns: float = 0.0
    delay_spread_ns: float = 0.0
    channel_skew_ns: tuple[float, float] = (0.0, 0.0)
    max_clicks: int = 20_000_000

    def __post_init__(self):
        object.__setattr__(self, "settings", dict(self.settings))
        object.__setattr__(self, "channel_skew_ns", tuple(float(x) for x in self.channel_skew_ns))
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if isinstance(self.duration_ns, bool) or not isinstance(self.duration_ns, int) or self.duration_ns < 1:
            raise ConfigError(f"duration_ns must be an integer >= 1, got {self.duration_ns!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        for name in ("pair_rate_hz", "dark_rate_hz", "delay_base_ns", "delay_spread_ns"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be a finite number >= 0, got {v!r}")
        if not 0 < self.efficiency <= 1:
            raise ConfigError(f"efficiency must lie in (0, 1], got {self.efficiency!r}")
        if len(self.channel_skew_ns) != 2 or min(self.channel_skew_ns) < 0:
            raise ConfigError(f"channel_skew_ns must be two values >= 0, got {self.channel_skew_ns!r}")
        if not self.settings:
            raise ConfigError("settings must name at least one analyzer angle")
        for label, angle in self.settings.items():
            if not isinstance(angle, (int, float)) or not math.isfinite(angle):
                raise ConfigError(f"setting {label!r} must be a finite angle in radians")

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "pair_rate_hz": self.pair_rate_hz,
            "duration_ns": self.duration_ns,
            "settings": dict(self.settings),
            "seed": self.seed,
            "efficiency": self.efficiency,
            "dark_rate_hz": self.dark_rate_hz,
            "delay_base_ns": self.delay_base_ns,
            "delay_spread_ns": self.delay_spread_ns,
            "channel_skew_ns": list(self.channel_skew_ns),
            "max_clicks": self.max_clicks,
        }


@dataclass(frozen=True, eq=False)
class TimeTaggedStream:
    """One wing's raw clicks, sorted by time with no repeated timestamps."""

    side: str
    setting: str
    t: np.ndarray
    outcome: np.ndarray
    duration_ns: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.int64)
        o = np.asarray(self.outcome, dtype=np.int8)
        if self.side not in SIDES:
            raise ValueError(f"side must be 'A' or 'B', got {self.side!r}")
        if t.shape != o.shape or t.ndim != 1:
            raise ValueError("t and outcome must be 1-d arrays of equal length")
        if t.size:
            if t[0] < 0 or t[-1] >= self.duration_ns:
                raise ValueError("click times must lie in [0, duration_ns)")
            if np.any(np.diff(t) <= 0):
                raise ValueError("click times must be strictly increasing")
            if not np.all(np.abs(o) == 1):
                raise ValueError("outcomes must be +1 or -1")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "outcome", o)

    def __len__(self) -> int:
        return int(self.t.size)

    @property
    def clicks(self) -> list[tuple[int, int]]:
        return list(zip(self.outcome.tolist(), self.t.tolist()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeTaggedStream):
            return NotImplemented
        return (
            self.side == other.side
            and self.setting == other.setting
            and self.duration_ns == other.duration_ns
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.outcome, other.outcome)
        )


def _generator(seed: int, role: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(role,))))


def poisson_times(rng: np.random.Generator, rate_hz: float, duration_ns: int, cap: int) -> np.ndarray:
    """Arrival times (integer ns, floored) of a Poisson process on ``[0, duration)``."""
    if rate_hz == 0:
        return np.empty(0, dtype=np.int64)
    mean_gap = 1e9 / rate_hz
    expected = duration_ns / mean_gap
    if expected - 10 * math.sqrt(expected) > cap:
        raise ResourceError(f"about {expected:.3g} events expected, cap is {cap}")
    chunk = int(expected + 10 * math.sqrt(expected) + 16)
    pieces = []
    last = 0.0
    while True:
        gaps = rng.exponential(mean_gap, size=chunk)
        times = last + np.cumsum(gaps)
        pieces.append(times)
        last = float(times[-1])
        if last >= duration_ns:
            break
        if sum(p.size for p in pieces) > cap:
            raise ResourceError(f"more than {cap} events generated")
    times = np.concatenate(pieces)
    times = times[times < duration_ns]
    if times.size > cap:
        raise ResourceError(f"{times.size} events exceed cap {cap}")
    return np.floor(times).astype(np.int64)


def _sign(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0, 1, -1).astype(np.int8)


def _wing(
    config: ModelConfig,
    side_index: int,
    angle: float,
    t_emit: np.ndarray,
    phi: np.ndarray,
    local: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Clicks caused by source pairs on one wing: ``(times, outcomes)``."""
    u_detect = local[:, 0, side_index]
    u_delay = local[:, 1, side_index]
    x = phi - angle
    outcome = _sign(np.cos(2 * x))
    if config.model == "deterministic-lhv":
        detected = u_detect < config.efficiency
        delay = np.full(phi.shape, float(config.delay_base_ns))
    elif config.model == "malus-lhv":
        detected = u_detect < config.efficiency * np.cos(x) ** 2
        delay = np.full(phi.shape, float(config.delay_base_ns))
    else:
        detected = np.ones(phi.shape, dtype=bool)
        delay = config.delay_base_ns + config.delay_spread_ns * u_delay * np.sin(2 * x) ** 2
    delay = delay + config.channel_skew_ns[side_index] * (outcome < 0)
    t = t_emit + np.floor(delay).astype(np.int64)
    return t[detected], outcome[detected]


def _dark(config: ModelConfig, side_index: int) -> tuple[np.ndarray, np.ndarray]:
    rng = _generator(config.seed, _DARK_A + side_index)
    t = poisson_times(rng, config.dark_rate_hz, config.duration_ns, config.max_clicks)
    outcome = (rng.integers(0, 2, size=t.size) * 2 - 1).astype(np.int8)
    return t, outcome


def _merge(parts: list[tuple[np.ndarray, np.ndarray]], duration_ns: int, cap: int):
    t = np.concatenate([p[0] for p in parts])
    o = np.concatenate([p[1] for p in parts])
    keep = t < duration_ns
    t, o = t[keep], o[keep]
    order = np.argsort(t, kind="stable")
    t, o = t[order], o[order]
    # t'_i = max(t_i, t'_{i-1} + 1): shift collisions forward one ns at a time
    idx = np.arange(t.size, dtype=np.int64)
    if t.size:
        t = np.maximum.accumulate(t - idx) + idx
    keep = t < duration_ns
    t, o = t[keep], o[keep]
    if t.size > cap:
        raise ResourceError(f"{t.size} clicks exceed cap {cap}")
    return t, o


def emissions(config: ModelConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Source pairs shared by both wings: ``(emission times, phi, local draws)``."""
    src = _generator(config.seed, _SOURCE)
    t_emit = poisson_times(src, config.pair_rate_hz, config.duration_ns, config.max_clicks)
    phi = src.uniform(0.0, 2 * math.pi, size=t_emit.size)
    local = _generator(config.seed, _LOCAL).random((t_emit.size, 2, 2))
    return t_emit, phi, local


def simulate_side(config: ModelConfig, side: str, setting: str, source=None) -> TimeTaggedStream:
    """One wing's stream; a pure function of the config and this wing's setting."""
    if setting not in config.settings:
        raise ConfigError(f"setting label {setting!r} not in config settings {sorted(config.settings)}")
    if side not in SIDES:
        raise ConfigError(f"side must be 'A' or 'B', got {side!r}")
    s = SIDES.index(side)
    t_emit, phi, local = source if source is not None else emissions(config)
    signal = _wing(config, s, float(config.settings[setting]), t_emit, phi, local)
    t, o = _merge([signal, _dark(config, s)], config.duration_ns, config.max_clicks)
    meta = {
        "model": config.model,
        "seed": config.seed,
        "pair_rate_hz": config.pair_rate_hz,
        "dark_rate_hz": config.dark_rate_hz,
        "pairs_emitted": int(t_emit.size),
    }
    return TimeTaggedStream(side, setting, t, o, config.duration_ns, meta)


def simulate_run(config: ModelConfig, setting_pair: tuple[str, str]) -> tuple[TimeTaggedStream, TimeTaggedStream]:
    """Raw streams of both wings for analyzer labels ``(x, y)``."""
    x, y = setting_pair
    for label in (x, y):
        if label not in config.settings:
            raise ConfigError(f"setting label {label!r} not in config settings {sorted(config.settings)}")
    source = emissions(config)
    return simulate_side(config, "A", x, source), simulate_side(config, "B", y, source)


def analytic_correlation(model: str, a: float, b: float) -> float | None:
    """Emission-level ``<AB>`` of the sign-readout models, before any pairing.

    ``1 - (4/pi) * d`` with ``d`` the distance from ``a - b`` to the nearest
    multiple of pi. ``malus-lhv`` only reveals outcomes through lossy
    detection, so it has no selection-free value and returns ``None``.
    """
    if model not in MODELS:
        raise ConfigError(f"unknown model {model!r}")
    if model == "malus-lhv":
        return None
    d = abs(math.remainder(a - b, math.pi))
    return 1.0 - 4.0 * d / math.pi

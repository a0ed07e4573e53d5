"""Stochastic hybrid systems: per-mode affine SDEs with guard-triggered jumps.

Each mode integrates ``dx = (a + b x) dt + sigma dB`` by Euler-Maruyama on the
dyadic step ``2^-n``, using increments of a Brownian path sampled on the same
grid.  After every step the first satisfied guard (declaration order) fires;
the jump keeps ``x`` unchanged.  Mode invariants are monitored, not enforced:
violations are logged in the trace.
"""

from __future__ import annotations

import io
import operator
from dataclasses import dataclass, field, replace

import numpy as np

from .brownian import BrownianSampler, sample_grid
from .dyadics import DyadicGrid

__all__ = [
    "Threshold",
    "Guard",
    "Mode",
    "HybridAutomaton",
    "Trace",
    "InvalidAutomaton",
    "thermostat",
    "simulate",
    "with_sigma",
    "affine_solution",
    "MAX_SIM_LEVEL",
]

MAX_SIM_LEVEL = 24

_OPS = {"<": operator.lt, ">": operator.gt, "<=": operator.le, ">=": operator.ge}


class InvalidAutomaton(ValueError):
    pass


@dataclass(frozen=True)
class Threshold:
    """Predicate ``x <op> c`` with op one of ``< > <= >=``."""

    op: str
    c: float

    def __post_init__(self):
        if self.op not in _OPS:
            raise InvalidAutomaton(f"unsupported comparison {self.op!r}")

    def __call__(self, x: float) -> bool:
        return _OPS[self.op](x, self.c)

    def __str__(self):
        return f"x {self.op} {self.c:g}"


@dataclass(frozen=True)
class Guard:
    when: Threshold
    target: str


@dataclass(frozen=True)
class Mode:
    name: str
    drift: tuple[float, float]  # (a, b): dx = (a + b x) dt
    sigma: float = 0.0
    invariant: Threshold | None = None
    guards: tuple[Guard, ...] = ()

    def __post_init__(self):
        if self.sigma < 0:
            raise InvalidAutomaton("sigma must be nonnegative")
        object.__setattr__(self, "guards", tuple(self.guards))
        object.__setattr__(self, "drift", tuple(float(v) for v in self.drift))


@dataclass(frozen=True)
class HybridAutomaton:
    modes: dict
    initial: tuple[str, float]

    def __post_init__(self):
        modes = self.modes
        if not isinstance(modes, dict):
            modes = {m.name: m for m in modes}
            object.__setattr__(self, "modes", modes)
        for key, mode in modes.items():
            if key != mode.name:
                raise InvalidAutomaton(f"mode stored under {key!r} is named {mode.name!r}")
        if self.initial[0] not in modes:
            raise InvalidAutomaton(f"initial mode {self.initial[0]!r} does not exist")
        for mode in modes.values():
            for g in mode.guards:
                if g.target not in modes:
                    raise InvalidAutomaton(f"guard in {mode.name!r} targets unknown mode {g.target!r}")


def thermostat() -> HybridAutomaton:
    """Two-mode thermostat: Off cools at rate 0.1, On heats towards 50.

    Off: dx = -0.1 x dt + 0.1 dB, invariant x >= 18, jumps to On when x < 19.
    On:  dx = (5 - 0.1 x) dt + 0.1 dB, invariant x <= 22, jumps to Off when x > 21.
    Starts in Off at x = 20.
    """
    off = Mode("Off", (0.0, -0.1), 0.1, Threshold(">=", 18.0), (Guard(Threshold("<", 19.0), "On"),))
    on = Mode("On", (5.0, -0.1), 0.1, Threshold("<=", 22.0), (Guard(Threshold(">", 21.0), "Off"),))
    return HybridAutomaton({"Off": off, "On": on}, ("Off", 20.0))


def with_sigma(automaton: HybridAutomaton, sigma: float) -> HybridAutomaton:
    modes = {k: replace(m, sigma=sigma) for k, m in automaton.modes.items()}
    return HybridAutomaton(modes, automaton.initial)


def affine_solution(a: float, b: float, x0: float, t):
    """Exact solution of ``dx = (a + b x) dt``."""
    t = np.asarray(t, dtype=float)
    if b == 0:
        return x0 + a * t
    return (x0 + a / b) * np.exp(b * t) - a / b


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class Trace:
    rows: list = field(default_factory=list)  # (time, mode, x)
    events: list = field(default_factory=list)  # (time, from, to)
    violations: list = field(default_factory=list)  # (time, mode, x)

    @property
    def times(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows])

    @property
    def xs(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    def rows_csv(self) -> str:
        buf = io.StringIO()
        buf.write("time,mode,x\n")
        for t, m, x in self.rows:
            buf.write(f"{_fmt(t)},{m},{_fmt(x)}\n")
        return buf.getvalue()

    def events_csv(self) -> str:
        buf = io.StringIO()
        buf.write("time,from,to\n")
        for t, a, b in self.events:
            buf.write(f"{_fmt(t)},{a},{b}\n")
        return buf.getvalue()


def simulate(automaton: HybridAutomaton, T: float, level: int, rng: np.random.Generator) -> Trace:
    """Euler-Maruyama run on ``D_level(T)``.

    ``rows`` records the mode in force after any jump at that time.  The
    Brownian increments come from a level-``level`` path drawn from ``rng``.
    """
    if not 0 <= level <= MAX_SIM_LEVEL:
        raise ValueError(f"level must lie in [0, {MAX_SIM_LEVEL}]")
    if not isinstance(automaton, HybridAutomaton):
        raise InvalidAutomaton("expected a HybridAutomaton")
    grid = DyadicGrid(level, T)
    times = grid.times
    dt = grid.step
    noisy = any(m.sigma > 0 for m in automaton.modes.values())
    if noisy:
        dB = np.diff(sample_grid(BrownianSampler(T), level, rng).values).tolist()
    else:
        dB = [0.0] * (len(grid) - 1)

    # flatten the modes for the hot loop
    table = {
        name: (m.drift[0], m.drift[1], m.sigma, m.invariant, [(g.when, g.target) for g in m.guards])
        for name, m in automaton.modes.items()
    }
    mode, x = automaton.initial
    x = float(x)
    trace = Trace()
    trace.rows.append((0.0, mode, x))
    a, b, sigma, inv, guards = table[mode]
    if inv is not None and not inv(x):
        trace.violations.append((0.0, mode, x))
    for k in range(1, len(times)):
        x = x + (a + b * x) * dt + sigma * dB[k - 1]
        t = float(times[k])
        for pred, target in guards:
            if pred(x):
                trace.events.append((t, mode, target))
                mode = target
                a, b, sigma, inv, guards = table[mode]
                break
        if inv is not None and not inv(x):
            trace.violations.append((t, mode, x))
        trace.rows.append((t, mode, x))
    return trace

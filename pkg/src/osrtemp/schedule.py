"""Temperature schedules: pure functions from a 1-indexed epoch to a temperature.

The generalized cosine schedule covers the cosine family through its phase
delay ``shift``: ``shift=0`` starts high and decays (``Cos``), ``shift=1``
starts low and rises (``NegCos``). With ``shift > 0`` the last ``shift*P/2``
epochs hold the upper temperature.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, replace

import numpy as np


class Kind(str, enum.Enum):
    CONST = "Const"
    GCOS = "GCos"
    COS = "Cos"
    NEGCOS = "NegCos"
    HALF_NEGCOS = "HalfNegCos"
    STEP_UP = "StepUp"
    RANDOM = "Random"


_COSINE_FAMILY = (Kind.GCOS, Kind.COS, Kind.NEGCOS)
_FIXED_SHIFT = {Kind.COS: 0.0, Kind.NEGCOS: 1.0}


@dataclass(frozen=True)
class ScheduleSpec:
    """Declarative description of a temperature schedule.

    ``Const`` keeps its value in ``tau_plus``; ``tau_minus`` defaults to (and
    must equal) it. ``Cos`` and ``NegCos`` have their ``shift`` pinned to 0
    and 1.
    """

    kind: Kind
    tau_plus: float
    tau_minus: float | None = None
    period: int = 200
    shift: float = 0.0
    total_epochs: int = 600
    steps: int = 10
    seed: int = 0

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        tau_plus = float(self.tau_plus)
        tau_minus = tau_plus if self.tau_minus is None else float(self.tau_minus)
        if kind is Kind.CONST and tau_minus != tau_plus:
            raise ValueError("Const schedule takes a single temperature")
        if not (tau_plus > 0 and tau_minus > 0):
            raise ValueError("temperatures must be positive")
        if tau_minus > tau_plus:
            raise ValueError(f"tau_minus={tau_minus} exceeds tau_plus={tau_plus}")
        shift = _FIXED_SHIFT.get(kind, float(self.shift))
        if not 0.0 <= shift <= 1.0:
            raise ValueError(f"shift must lie in [0, 1], got {shift}")
        if int(self.period) < 1 or int(self.total_epochs) < 1 or int(self.steps) < 1:
            raise ValueError("period, total_epochs and steps must be >= 1")
        if int(self.seed) < 0:
            raise ValueError("seed must be non-negative")
        object.__setattr__(self, "tau_plus", tau_plus)
        object.__setattr__(self, "tau_minus", tau_minus)
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "period", int(self.period))
        object.__setattr__(self, "total_epochs", int(self.total_epochs))
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "seed", int(self.seed))

    # convenience constructors
    @classmethod
    def const(cls, tau, total_epochs=600):
        return cls(Kind.CONST, tau, total_epochs=total_epochs)

    @classmethod
    def gcos(cls, tau_plus, tau_minus, period=200, shift=1.0, total_epochs=600):
        return cls(Kind.GCOS, tau_plus, tau_minus, period=period, shift=shift,
                   total_epochs=total_epochs)

    @classmethod
    def cos(cls, tau_plus, tau_minus, period=200, total_epochs=600):
        return cls(Kind.COS, tau_plus, tau_minus, period=period, total_epochs=total_epochs)

    @classmethod
    def negcos(cls, tau_plus, tau_minus, period=200, total_epochs=600):
        return cls(Kind.NEGCOS, tau_plus, tau_minus, period=period,
                   total_epochs=total_epochs)

    @property
    def hold_start(self):
        """First epoch value at which cosine-family schedules clamp to ``tau_plus``."""
        return self.total_epochs - self.shift * self.period / 2.0

    @property
    def label(self):
        if self.kind is Kind.CONST:
            return f"Const({self.tau_plus:g})"
        args = f"{self.tau_plus:g},{self.tau_minus:g}"
        if self.kind is Kind.GCOS:
            return f"GCos({args},P={self.period},k={self.shift:g})"
        if self.kind in (Kind.COS, Kind.NEGCOS, Kind.HALF_NEGCOS):
            return f"{self.kind.value}({args},P={self.period})"
        if self.kind is Kind.STEP_UP:
            return f"StepUp({args},steps={self.steps})"
        return f"Random({args},seed={self.seed})"

    def with_epochs(self, total_epochs):
        return replace(self, total_epochs=total_epochs)

    def to_dict(self):
        d = asdict(self)
        d["kind"] = self.kind.value
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "tau" in d:
            if "tau_plus" in d:
                raise ValueError("give either 'tau' or 'tau_plus', not both")
            d["tau_plus"] = d.pop("tau")
        return cls(**d)


def temperature_at(spec: ScheduleSpec, epoch: int) -> float:
    """Temperature for ``epoch`` (1-indexed, at most ``spec.total_epochs``)."""
    if not 1 <= epoch <= spec.total_epochs:
        raise ValueError(f"epoch {epoch} outside [1, {spec.total_epochs}]")
    hi, lo = spec.tau_plus, spec.tau_minus
    kind = spec.kind

    if kind is Kind.CONST:
        return hi
    if kind in _COSINE_FAMILY:
        if epoch < spec.hold_start:
            phase = 2.0 * math.pi * epoch / spec.period - spec.shift * math.pi
            return lo + 0.5 * (hi - lo) * (1.0 + math.cos(phase))
        return hi
    if kind is Kind.HALF_NEGCOS:
        r = epoch % spec.period or spec.period
        return lo + 0.5 * (hi - lo) * (1.0 - math.cos(math.pi * r / spec.period))
    if kind is Kind.STEP_UP:
        if spec.steps == 1:
            return lo
        level = (epoch - 1) * spec.steps // spec.total_epochs
        return lo + (hi - lo) * level / (spec.steps - 1)
    if kind is Kind.RANDOM:
        rng = np.random.default_rng([spec.seed, epoch])
        return float(rng.uniform(lo, hi)) if hi > lo else hi
    raise ValueError(f"unknown schedule kind {kind!r}")


def temperature_curve(spec: ScheduleSpec) -> np.ndarray:
    """Temperatures for epochs ``1..total_epochs`` as an array."""
    return np.array([temperature_at(spec, e) for e in range(1, spec.total_epochs + 1)])

"""Synthetic multivariate periodic series with known ground truth.

Noise comes from numpy's PCG64 bit generator (``default_rng(seed)``) through
``Generator.normal``; both algorithms are fixed by numpy's stream
compatibility policy, so a seed reproduces the same series everywhere.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import RawSeries
from .errors import DataError


@dataclass(frozen=True)
class Channel:
    """``amplitude * sin(2 pi t / period + phase) + N(0, noise^2)``.

    The default phase, ``pi / period``, shifts sampling by half a step so no
    sample falls exactly on a zero of the sine.
    """

    amplitude: float = 1.0
    period: float = 20.0
    phase: float | None = None
    noise: float = 0.0

    def resolved_phase(self) -> float:
        return math.pi / self.period if self.phase is None else self.phase


@dataclass(frozen=True)
class SynthSpec:
    """Informative channels, pure-noise distractors and a lagged linear target.

    ``target[t] = sum_k weights[k] * channel_k[t - lag]``, using each
    channel's noisy values.
    """

    d: int = 10_000
    channels: tuple[Channel, ...] = (Channel(),)
    n_distractors: int = 5
    distractor_noise: float = 0.05
    weights: tuple[float, ...] | None = None
    lag: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.channels:
            raise DataError("at least one informative channel is required")
        longest = max(c.period for c in self.channels)
        if self.d < 4 * longest:
            raise DataError(f"d={self.d} is shorter than 4 x the longest period ({longest})")
        if self.weights is not None and len(self.weights) != len(self.channels):
            raise DataError("one weight per informative channel is required")
        if self.lag < 0 or self.n_distractors < 0:
            raise DataError("lag and n_distractors must be non-negative")

    @property
    def resolved_weights(self) -> tuple[float, ...]:
        return self.weights if self.weights is not None else (1.0,) * len(self.channels)


@dataclass(frozen=True)
class GroundTruth:
    half_period: float
    informative_columns: tuple[int, ...]
    target_column: int
    spec: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "half_period": self.half_period,
            "informative_columns": list(self.informative_columns),
            "target_column": self.target_column,
            "spec": self.spec,
        }


def gen_periodic(spec: SynthSpec) -> tuple[RawSeries, GroundTruth]:
    rng = np.random.default_rng(spec.seed)
    k = len(spec.channels)
    # generate lag extra leading samples so every target row has a source
    t = np.arange(-spec.lag, spec.d, dtype=np.float64)
    informative = np.empty((t.size, k))
    for j, ch in enumerate(spec.channels):
        clean = ch.amplitude * np.sin(2.0 * math.pi * t / ch.period + ch.resolved_phase())
        noise = rng.normal(0.0, ch.noise, t.size) if ch.noise > 0 else 0.0
        informative[:, j] = clean + noise
    distractors = rng.normal(0.0, spec.distractor_noise, (spec.d, spec.n_distractors))
    weights = np.asarray(spec.resolved_weights)
    target = informative[: spec.d] @ weights
    values = np.column_stack([informative[spec.lag :], distractors, target])
    names = (
        [f"x{j + 1}" for j in range(k)]
        + [f"z{j + 1}" for j in range(spec.n_distractors)]
        + ["y"]
    )
    dominant = int(np.argmax(np.abs(weights) * [c.amplitude for c in spec.channels]))
    truth = GroundTruth(
        half_period=spec.channels[dominant].period / 2.0,
        informative_columns=tuple(range(k)),
        target_column=values.shape[1] - 1,
        spec=asdict(spec),
    )
    return RawSeries(values, tuple(names), values.shape[1] - 1), truth


def benchmark_scenario(seed: int = 0, d: int = 10_000) -> SynthSpec:
    """One informative period-20 channel, five distractors, noise 0.05."""
    return SynthSpec(
        d=d,
        channels=(Channel(amplitude=1.0, period=20.0, noise=0.05),),
        n_distractors=5,
        distractor_noise=0.05,
        lag=1,
        seed=seed,
    )

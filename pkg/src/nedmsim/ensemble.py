"""Monte Carlo contrast between the quantum and stochastic flip models.

Two readings of an ensemble of neutrons with dipole uncertainty delta:

* quantum: every neutron flips with the single probability
  ``flip_probability(state, xi)``; with d_n = 0 that probability is
  exactly zero, so no trial ever flips, however large delta is.
* stochastic: each neutron is imagined to carry a definite dipole drawn
  from Normal(d_n, delta) and flips with probability sin(d*xi)^2; with
  d_n = 0 and delta > 0 a fraction (1 - exp(-2 xi^2 delta^2))/2 of the
  ensemble flips.

The two models are therefore separable by counting statistics alone.
Trials draw one uniform per neutron against the per-trial probability;
draws come from counter-based substreams in fixed blocks, so a run is
reproducible from (seed, parameters) at any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .streams import BLOCK_TRIALS, DOMAIN_QUANTUM, DOMAIN_STOCHASTIC, substream
from .weak_measurement import DipoleState, flip_probability

__all__ = [
    "MODEL_QUANTUM",
    "MODEL_STOCHASTIC",
    "EnsembleRun",
    "simulate_quantum",
    "simulate_stochastic",
    "expected_stochastic_fraction",
]

MODEL_QUANTUM = "quantum"
MODEL_STOCHASTIC = "stochastic"


@dataclass(frozen=True)
class EnsembleRun:
    """Outcome of one counting run of either model."""

    model: str
    trials: int
    flips: int
    seed: int
    xi: float
    state: DipoleState

    def __post_init__(self) -> None:
        if self.model not in (MODEL_QUANTUM, MODEL_STOCHASTIC):
            raise ValueError(f"unknown model: {self.model!r}")
        if not 0 <= self.flips <= self.trials:
            raise ValueError("flips must lie in [0, trials]")

    @property
    def fraction(self) -> float:
        return self.flips / self.trials


def _block_ranges(trials: int):
    for b in range(0, (trials + BLOCK_TRIALS - 1) // BLOCK_TRIALS):
        start = b * BLOCK_TRIALS
        yield b, min(BLOCK_TRIALS, trials - start)


def _run_blocks(block_fn, trials: int, workers: int) -> int:
    blocks = list(_block_ranges(trials))
    if workers <= 1 or len(blocks) <= 1:
        return sum(block_fn(b, m) for b, m in blocks)
    # fixed-order reduction over block index keeps the total independent
    # of completion order
    with ThreadPoolExecutor(max_workers=workers) as pool:
        counts = pool.map(lambda bm: block_fn(*bm), blocks)
        return sum(counts)


def simulate_quantum(
    state: DipoleState, xi: float, trials: int, seed: int, workers: int = 1
) -> EnsembleRun:
    """Count flips when every trial uses the single quantum probability.

    Deterministic given ``seed``; with d_n = 0 the flip probability is
    exactly 0 and the count is exactly 0 for any number of trials.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = flip_probability(state, xi)

    def block_fn(b: int, m: int) -> int:
        rng = substream(seed, DOMAIN_QUANTUM, b)
        return int(np.count_nonzero(rng.random(m) < p))

    flips = _run_blocks(block_fn, trials, workers)
    return EnsembleRun(MODEL_QUANTUM, trials, flips, seed, xi, state)


def simulate_stochastic(
    state: DipoleState, xi: float, trials: int, seed: int, workers: int = 1
) -> EnsembleRun:
    """Count flips when each trial samples a definite dipole value.

    Per trial: d ~ Normal(d_n, delta), flip with probability sin(d*xi)^2.
    Deterministic given ``seed``; the flip fraction converges to
    :func:`expected_stochastic_fraction` as trials grow.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")

    def block_fn(b: int, m: int) -> int:
        rng = substream(seed, DOMAIN_STOCHASTIC, b)
        d = rng.normal(state.d_n, state.delta, size=m)
        u = rng.random(m)
        return int(np.count_nonzero(u < np.sin(d * xi) ** 2))

    flips = _run_blocks(block_fn, trials, workers)
    return EnsembleRun(MODEL_STOCHASTIC, trials, flips, seed, xi, state)


def expected_stochastic_fraction(state: DipoleState, xi: float) -> float:
    """Gaussian expectation of sin(d*xi)^2 under the stochastic model.

    E[sin^2] = (1 - cos(2 d_n xi) exp(-2 xi^2 delta^2)) / 2. Reduces to
    sin(d_n xi)^2 at delta = 0 and saturates at 1/2 when xi*delta is
    large (fully randomized phase).
    """
    damping = math.exp(-2.0 * (xi * state.delta) ** 2)
    return 0.5 * (1.0 - math.cos(2.0 * state.d_n * xi) * damping)

"""Sampling protocols driven by the walk, and the transition kernel they induce.

- direct: i.i.d. draws from the position distribution after T steps.
- cesaro: each draw picks t uniformly in {0, ..., T}, evolves to t and
  measures; the time draw consumes the external uniform source.
- reset: evolve m steps, measure, re-localise the walker at the outcome with
  the coin reset, repeat. The outcomes form a Markov chain with circulant
  transitions P(x_n | x_{n-1}) = mu(x_n - x_{n-1}).

Measurement is inverse-CDF sampling of the exact distribution with the
RandomSource stream. The coin is never measured.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterator, List, Optional

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import circulant

from services.errors import ValidationError
from services.rng import RandomSource
from services.utils import require_positive
from services.walk import (
    CoinState,
    CycleConfig,
    ProbDist,
    distribution_table,
    evolve,
    localized_state,
    position_distribution,
)

LOGGER = logging.getLogger(__name__)

PROTOCOLS = ("direct", "cesaro", "reset")
RESET_MODES = ("measured", "uniform")


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    mu: ProbDist
    config: CycleConfig
    steps_m: int
    coin0: CoinState

    @property
    def nodes(self) -> int:
        return self.config.nodes


@dataclass
class SequenceMeta:
    nodes: int
    protocol: str
    steps: int  # m for the reset protocol, T for direct and cesaro
    coin: str
    seed: int
    length: int
    x0: int = 0
    coin0: List[float] = field(default_factory=lambda: CoinState.balanced().to_floats())
    reset: Optional[str] = None
    algorithm: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SequenceMeta":
        known = {name: data[name] for name in cls.__dataclass_fields__ if name in data}
        missing = {"nodes", "protocol", "steps", "coin", "seed", "length"} - set(known)
        if missing:
            raise ValidationError(f"sequence metadata is missing {', '.join(sorted(missing))}")
        return cls(**known)


@dataclass(frozen=True, eq=False)
class SampleSequence:
    values: NDArray[np.int64]
    meta: SequenceMeta

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.int64)
        if values.ndim != 1:
            raise ValidationError("sample values must form a flat sequence")
        if values.size and (values.min() < 0 or values.max() >= self.meta.nodes):
            raise ValidationError(f"sample values must lie in [0, {self.meta.nodes - 1}]")
        if self.meta.length != values.size:
            raise ValidationError(f"metadata length {self.meta.length} does not match {values.size} values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def nodes(self) -> int:
        return self.meta.nodes


def transition_kernel(config: CycleConfig, m: int, coin0: CoinState) -> TransitionKernel:
    """mu(x) = P(X_1 = x | X_0 = 0) after m steps from |coin0> (x) |0>."""
    require_positive(m, "steps m")
    mu = position_distribution(evolve(localized_state(config, 0, coin0), m))
    return TransitionKernel(mu=mu, config=config, steps_m=m, coin0=coin0)


def _check_same_size(p: ProbDist, q: ProbDist) -> None:
    if p.nodes != q.nodes:
        raise ValidationError(f"distributions live on different cycles (N={p.nodes} vs N={q.nodes})")


def _renormalized(weights: NDArray[np.float64]) -> ProbDist:
    # rounding in each matvec drifts the total mass; clamp and rescale
    weights = np.clip(weights, 0.0, None)
    return ProbDist(weights / weights.sum())


def convolve(p: ProbDist, q: ProbDist) -> ProbDist:
    """Cyclic convolution (p * q)(x) = sum_j p(x - j) q(j), by direct summation."""
    _check_same_size(p, q)
    return _renormalized(circulant(p.weights) @ q.weights)


def iter_convolution_powers(mu: ProbDist, n_max: int) -> Iterator[ProbDist]:
    """Yield mu^{*n} for n = 1..n_max."""
    require_positive(n_max, "n")
    power = mu
    yield power
    operator = circulant(mu.weights)
    for _ in range(n_max - 1):
        power = _renormalized(operator @ power.weights)
        yield power


def iterated_kernel(kernel: TransitionKernel, n: int) -> ProbDist:
    """mu^{*n}, the n-fold cyclic self-convolution."""
    power = kernel.mu
    for power in iter_convolution_powers(kernel.mu, n):
        pass
    return power


def marginal(kernel: TransitionKernel, n: int) -> ProbDist:
    """P(X_n) for the reset protocol started at X_0 = 0."""
    return iterated_kernel(kernel, n)


def transition_matrix(kernel: TransitionKernel) -> NDArray[np.float64]:
    """Circulant matrix with P[a, b] = mu(b - a)."""
    return circulant(kernel.mu.weights).T


def _cdf(weights: NDArray[np.float64]) -> NDArray[np.float64]:
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    return cdf


def _draw(cdf: NDArray[np.float64], u):
    return np.searchsorted(cdf, u, side="right")


def _base_meta(config: CycleConfig, protocol: str, steps: int, coin0: CoinState, x0: int,
               samples: int, rng: RandomSource) -> SequenceMeta:
    return SequenceMeta(
        nodes=config.nodes,
        protocol=protocol,
        steps=steps,
        coin=config.coin.name,
        seed=rng.seed,
        length=samples,
        x0=x0,
        coin0=coin0.to_floats(),
        algorithm=rng.algorithm,
    )


def run_reset_protocol(
    config: CycleConfig,
    m: int,
    coin0: CoinState,
    samples: int,
    rng: RandomSource,
    x0: int = 0,
    reset: str = "measured",
) -> SampleSequence:
    """Measure-and-reset protocol.

    After re-localising at x_{n-1} the position distribution is mu shifted by
    x_{n-1} (translation covariance), so each outcome is x_{n-1} + d with d
    drawn from mu. With reset='uniform' the walker restarts from a vertex q
    drawn from the random source instead, and the outputs become i.i.d.
    """
    require_positive(m, "steps m")
    require_positive(samples, "samples")
    x0 = config.check_vertex(x0)
    if reset not in RESET_MODES:
        raise ValidationError(f"unknown reset mode '{reset}' (use one of {', '.join(RESET_MODES)})")

    kernel = transition_kernel(config, m, coin0)
    cdf = _cdf(kernel.mu.weights)
    nodes = config.nodes

    if reset == "measured":
        displacements = _draw(cdf, rng.uniforms(samples))
        values = (x0 + np.cumsum(displacements)) % nodes
    else:
        values = np.empty(samples, dtype=np.int64)
        for idx in range(samples):
            start = rng.integer(0, nodes - 1)
            values[idx] = (start + _draw(cdf, rng.uniform())) % nodes

    meta = _base_meta(config, "reset", m, coin0, x0, samples, rng)
    meta.reset = reset
    LOGGER.info("Reset protocol: N=%d m=%d S=%d seed=%d reset=%s", nodes, m, samples, rng.seed, reset)
    return SampleSequence(values=values, meta=meta)


def run_direct_protocol(
    config: CycleConfig,
    T: int,
    coin0: CoinState,
    x0: int,
    samples: int,
    rng: RandomSource,
) -> SampleSequence:
    """i.i.d. draws from the position distribution after exactly T steps."""
    require_positive(T, "timesteps T")
    require_positive(samples, "samples")
    distribution = position_distribution(evolve(localized_state(config, x0, coin0), T))
    values = _draw(_cdf(distribution.weights), rng.uniforms(samples))
    LOGGER.info("Direct protocol: N=%d T=%d S=%d seed=%d", config.nodes, T, samples, rng.seed)
    return SampleSequence(values=values, meta=_base_meta(config, "direct", T, coin0, x0, samples, rng))


def run_cesaro_protocol(
    config: CycleConfig,
    T: int,
    coin0: CoinState,
    x0: int,
    samples: int,
    rng: RandomSource,
) -> SampleSequence:
    """Each draw: t uniform in {0, ..., T}, evolve to t, measure position."""
    if T < 0:
        raise ValidationError(f"timesteps T must be >= 0 (got {T})")
    require_positive(samples, "samples")
    table = distribution_table(localized_state(config, x0, coin0), T)
    cdfs = [_cdf(row) for row in table]

    values = np.empty(samples, dtype=np.int64)
    for idx in range(samples):
        t = rng.integer(0, T)
        values[idx] = _draw(cdfs[t], rng.uniform())

    LOGGER.info("Cesaro protocol: N=%d T=%d S=%d seed=%d", config.nodes, T, samples, rng.seed)
    return SampleSequence(values=values, meta=_base_meta(config, "cesaro", T, coin0, x0, samples, rng))


def cesaro_mixture(config: CycleConfig, T: int, coin0: CoinState, x0: int = 0) -> ProbDist:
    """Exact output distribution of the Cesaro protocol: mean over t = 0..T."""
    if T < 0:
        raise ValidationError(f"timesteps T must be >= 0 (got {T})")
    table = distribution_table(localized_state(config, x0, coin0), T)
    return ProbDist(table.mean(axis=0))

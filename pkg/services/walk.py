"""State-vector dynamics of the coined quantum walk on the N-cycle.

Amplitudes live in a dense complex vector of length 2N with coin-major
layout: entry (c, x) sits at index c * N + x, with c = 0 for up and c = 1
for down. One step applies the coin at every vertex, then moves up
amplitudes x -> x + 1 and down amplitudes x -> x - 1 (mod N).
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, Optional, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import block_diag

from services.errors import ValidationError, VertexIndexError
from services.utils import enabled_coin_presets, parse_floats

LOGGER = logging.getLogger(__name__)

UNITARY_TOLERANCE = 1e-12
STATE_NORM_TOLERANCE = 1e-10
PROB_SUM_TOLERANCE = 1e-10
NEGATIVE_WEIGHT_TOLERANCE = 1e-12
MIN_NODES = 3

SQRT_HALF = 1.0 / np.sqrt(2.0)


def _readonly(array: NDArray) -> NDArray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class CoinOperator:
    """2x2 unitary acting on the (up, down) coin basis."""

    entries: NDArray[np.complex128]
    name: str = "custom"

    def __post_init__(self) -> None:
        matrix = np.asarray(self.entries, dtype=np.complex128)
        if matrix.shape != (2, 2):
            raise ValidationError(f"coin must be a 2x2 matrix (got shape {matrix.shape})")
        deviation = np.max(np.abs(matrix.conj().T @ matrix - np.eye(2)))
        if deviation > UNITARY_TOLERANCE:
            raise ValidationError(f"coin is not unitary: max |C^dag C - I| = {deviation:.3e}")
        object.__setattr__(self, "entries", _readonly(matrix))

    @classmethod
    def symmetric(cls) -> "CoinOperator":
        """The unbiased coin (I + i sigma_x) / sqrt(2)."""
        return cls(SQRT_HALF * np.array([[1.0, 1.0j], [1.0j, 1.0]]), name="symmetric")

    @classmethod
    def hadamard(cls) -> "CoinOperator":
        """The Hadamard coin (sigma_x + sigma_z) / sqrt(2)."""
        return cls(SQRT_HALF * np.array([[1.0, 1.0], [1.0, -1.0]]), name="hadamard")

    @classmethod
    def from_floats(cls, values: Sequence[float], name: str = "custom") -> "CoinOperator":
        """Build a coin from 8 floats: row-major (re, im) pairs."""
        if len(values) != 8:
            raise ValidationError(f"custom coin expects 8 numbers (got {len(values)})")
        pairs = np.asarray(values, dtype=float).reshape(4, 2)
        return cls((pairs[:, 0] + 1j * pairs[:, 1]).reshape(2, 2), name=name)

    def is_close(self, other: "CoinOperator", atol: float = UNITARY_TOLERANCE) -> bool:
        return bool(np.max(np.abs(self.entries - other.entries)) <= atol)

    def to_floats(self) -> list:
        flat = self.entries.reshape(4)
        return [float(v) for pair in zip(flat.real, flat.imag) for v in pair]


@dataclass(frozen=True)
class CoinState:
    up: complex
    down: complex

    def __post_init__(self) -> None:
        norm = abs(self.up) ** 2 + abs(self.down) ** 2
        if abs(norm - 1.0) > UNITARY_TOLERANCE:
            raise ValidationError(f"coin state must be normalized (|up|^2 + |down|^2 = {norm:.15g})")

    @classmethod
    def balanced(cls) -> "CoinState":
        """(|up> + |down>) / sqrt(2), the reset coin of the measure-and-reset protocol."""
        return cls(complex(SQRT_HALF), complex(SQRT_HALF))

    @classmethod
    def from_floats(cls, values: Sequence[float]) -> "CoinState":
        if len(values) != 4:
            raise ValidationError(f"coin state expects 4 numbers (got {len(values)})")
        re_up, im_up, re_down, im_down = (float(v) for v in values)
        return cls(complex(re_up, im_up), complex(re_down, im_down))

    @property
    def vector(self) -> NDArray[np.complex128]:
        return np.array([self.up, self.down], dtype=np.complex128)

    def to_floats(self) -> list:
        return [self.up.real, self.up.imag, self.down.real, self.down.imag]


@dataclass(frozen=True, eq=False)
class CycleConfig:
    nodes: int
    coin: CoinOperator = field(default_factory=CoinOperator.symmetric)

    def __post_init__(self) -> None:
        if isinstance(self.nodes, bool) or not isinstance(self.nodes, (int, np.integer)):
            raise ValidationError(f"nodes N must be an integer (got {type(self.nodes).__name__})")
        if self.nodes < MIN_NODES:
            raise ValidationError(f"nodes N must be >= {MIN_NODES} (got {self.nodes})")
        object.__setattr__(self, "nodes", int(self.nodes))

    def check_vertex(self, x: int, name: str = "x0") -> int:
        if isinstance(x, bool) or not isinstance(x, (int, np.integer)):
            raise ValidationError(f"{name} must be an integer vertex index")
        if not 0 <= x < self.nodes:
            raise VertexIndexError(f"{name} must lie in [0, {self.nodes - 1}] (got {x})")
        return int(x)


@dataclass(frozen=True, eq=False)
class ProbDist:
    """Probability vector over the vertices of the cycle."""

    weights: NDArray[np.float64]

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim != 1 or weights.size == 0:
            raise ValidationError("distribution must be a non-empty vector")
        if not np.all(np.isfinite(weights)):
            raise ValidationError("distribution contains non-finite weights")
        if np.min(weights) < -NEGATIVE_WEIGHT_TOLERANCE:
            raise ValidationError(f"distribution has a negative weight {np.min(weights):.3e}")
        weights = np.clip(weights, 0.0, None)
        total = float(np.sum(weights))
        if abs(total - 1.0) > PROB_SUM_TOLERANCE:
            raise ValidationError(f"distribution must sum to 1 (got {total:.15g})")
        object.__setattr__(self, "weights", _readonly(weights))

    @classmethod
    def from_counts(cls, counts: Sequence[int]) -> "ProbDist":
        counts = np.asarray(counts, dtype=float)
        total = counts.sum()
        if total <= 0:
            raise ValidationError("cannot normalise an empty histogram")
        return cls(counts / total)

    @property
    def nodes(self) -> int:
        return int(self.weights.size)

    def __len__(self) -> int:
        return self.nodes

    def __getitem__(self, x: int) -> float:
        return float(self.weights[x])

    def shift(self, d: int) -> "ProbDist":
        """Cyclic translation: result[x] = self[x - d]."""
        return ProbDist(np.roll(self.weights, d))

    def support(self, epsilon: float = 0.0) -> NDArray[np.int64]:
        return np.flatnonzero(self.weights > epsilon)


def uniform_dist(nodes: int) -> ProbDist:
    return ProbDist(np.full(nodes, 1.0 / nodes))


def point_mass(nodes: int, x: int) -> ProbDist:
    weights = np.zeros(nodes)
    weights[x] = 1.0
    return ProbDist(weights)


@dataclass(frozen=True, eq=False)
class WalkerState:
    amplitudes: NDArray[np.complex128]
    config: CycleConfig

    def __post_init__(self) -> None:
        amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        expected = 2 * self.config.nodes
        if amplitudes.shape != (expected,):
            raise ValidationError(f"state must have length 2N = {expected} (got shape {amplitudes.shape})")
        norm = float(np.linalg.norm(amplitudes))
        if abs(norm - 1.0) > STATE_NORM_TOLERANCE:
            raise ValidationError(f"state must have unit norm (got {norm:.15g})")
        object.__setattr__(self, "amplitudes", _readonly(amplitudes))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, coin: int, x: int) -> complex:
        return complex(self.amplitudes[coin * self.config.nodes + x])

    def grid(self) -> NDArray[np.complex128]:
        """Amplitudes reshaped to (coin, position)."""
        return self.amplitudes.reshape(2, self.config.nodes)


def coin_from_name(name: str) -> CoinOperator:
    """Resolve a preset name from coins.json or ``custom:<8 floats>``."""
    token = name.strip()
    if token.lower().startswith("custom:"):
        values = parse_floats(token[len("custom:"):], 8, "custom coin")
        # the name keeps the exact entries so sequence meta can rebuild the coin
        return CoinOperator.from_floats(values, name="custom:" + ",".join(repr(v) for v in values))

    presets = enabled_coin_presets()
    key = token.lower()
    entry: Optional[Dict[str, Any]] = presets.get(key)
    if entry is None:
        available = ", ".join(sorted(presets)) or "none"
        raise ValidationError(f"unknown coin '{name}' (available: {available}, custom:<8 floats>)")

    builtin = entry.get("builtin")
    if builtin == "symmetric":
        return CoinOperator.symmetric()
    if builtin == "hadamard":
        return CoinOperator.hadamard()
    if builtin:
        raise ValidationError(f"coin preset '{key}' names unknown builtin '{builtin}'")

    matrix = entry.get("matrix")
    if not matrix:
        raise ValidationError(f"coin preset '{key}' has neither 'builtin' nor 'matrix'")
    array = np.asarray(matrix, dtype=float)
    if array.shape != (2, 2, 2):
        raise ValidationError(f"coin preset '{key}' matrix must be 2x2 [re, im] pairs")
    return CoinOperator(array[..., 0] + 1j * array[..., 1], name=key)


def localized_state(config: CycleConfig, x0: int, coin0: CoinState) -> WalkerState:
    """|coin0> (x) |x0>."""
    x0 = config.check_vertex(x0)
    amplitudes = np.zeros(2 * config.nodes, dtype=np.complex128)
    amplitudes[x0] = coin0.up
    amplitudes[config.nodes + x0] = coin0.down
    return WalkerState(amplitudes, config)


def _step_amplitudes(amplitudes: NDArray[np.complex128], coin: NDArray[np.complex128], nodes: int) -> NDArray[np.complex128]:
    mixed = coin @ amplitudes.reshape(2, nodes)
    shifted = np.empty_like(mixed)
    shifted[0] = np.roll(mixed[0], 1)
    shifted[1] = np.roll(mixed[1], -1)
    return shifted.reshape(2 * nodes)


def apply_step(state: WalkerState) -> WalkerState:
    """One application of U = S (C (x) I)."""
    config = state.config
    return WalkerState(_step_amplitudes(state.amplitudes, config.coin.entries, config.nodes), config)


def _check_steps(t: int, name: str = "t") -> int:
    if isinstance(t, bool) or not isinstance(t, (int, np.integer)):
        raise ValidationError(f"{name} must be an integer (got {type(t).__name__})")
    if t < 0:
        raise ValidationError(f"{name} must be >= 0 (got {t})")
    return int(t)


def evolve(state: WalkerState, t: int) -> WalkerState:
    """Apply U^t. No renormalisation happens along the way."""
    t = _check_steps(t)
    if t == 0:
        return state
    config = state.config
    amplitudes = state.amplitudes
    for _ in range(t):
        amplitudes = _step_amplitudes(amplitudes, config.coin.entries, config.nodes)
    return WalkerState(amplitudes, config)


def position_distribution(state: WalkerState) -> ProbDist:
    """Born rule, summing |amplitude|^2 over the coin."""
    return ProbDist(np.sum(np.abs(state.grid()) ** 2, axis=0))


def iter_distributions(state: WalkerState, t_max: int) -> Iterator[NDArray[np.float64]]:
    """Yield the raw position weights for t = 0..t_max from one evolution pass."""
    t_max = _check_steps(t_max, "t_max")
    config = state.config
    amplitudes = state.amplitudes
    for t in range(t_max + 1):
        if t:
            amplitudes = _step_amplitudes(amplitudes, config.coin.entries, config.nodes)
        yield np.sum(np.abs(amplitudes.reshape(2, config.nodes)) ** 2, axis=0)


def distribution_table(state: WalkerState, t_max: int) -> NDArray[np.float64]:
    """Array of shape (t_max + 1, N); row t is the position distribution after t steps."""
    return np.vstack(list(iter_distributions(state, t_max)))


def step_operator_matrix(config: CycleConfig) -> NDArray[np.complex128]:
    """Dense 2N x 2N matrix of U in the coin-major basis."""
    identity = np.eye(config.nodes)
    forward = np.roll(identity, 1, axis=0)
    backward = np.roll(identity, -1, axis=0)
    shift = block_diag(forward, backward).astype(np.complex128)
    return shift @ np.kron(config.coin.entries, identity)

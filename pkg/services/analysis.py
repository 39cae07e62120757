import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.stats import chisquare, entropy

from services.errors import ValidationError
from services.protocols import SampleSequence, TransitionKernel, iter_convolution_powers
from services.utils import divisors, require_positive
from services.walk import (
    CoinState,
    CycleConfig,
    ProbDist,
    distribution_table,
    localized_state,
    uniform_dist,
)

LOGGER = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-12
SCAN_MODES = ("direct", "cesaro")
TV_FLOOR = 1e-14


@dataclass(frozen=True)
class ErgodicityVerdict:
    ergodic: bool
    witness: Optional[Tuple[int, int]]  # (d, r): support inside r + d Z_N
    support_threshold: float
    support: Tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "ergodic": self.ergodic,
            "witness": {"d": self.witness[0], "r": self.witness[1]} if self.witness else None,
            "support_threshold": self.support_threshold,
            "support": list(self.support),
        }


@dataclass(frozen=True, eq=False)
class FourierSpectrum:
    coefficients: NDArray[np.complex128]

    @property
    def nodes(self) -> int:
        return int(self.coefficients.size)

    def magnitudes(self) -> NDArray[np.float64]:
        return np.abs(self.coefficients)


@dataclass(frozen=True, eq=False)
class LagJoint:
    counts: NDArray[np.int64]
    lag: int

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def frequencies(self) -> NDArray[np.float64]:
        return self.counts / max(self.total, 1)


@dataclass(frozen=True)
class ChiSquare:
    statistic: float
    dof: int
    outside_support: int = 0


def _check_same_size(p: ProbDist, q: ProbDist) -> None:
    if p.nodes != q.nodes:
        raise ValidationError(f"distributions live on different cycles (N={p.nodes} vs N={q.nodes})")


def shannon_entropy(p: ProbDist) -> float:
    """H = -sum p log2 p in bits, with 0 log 0 = 0."""
    value = float(entropy(p.weights, base=2))
    return min(max(value, 0.0), float(np.log2(p.nodes)))


def total_variation(p: ProbDist, q: ProbDist) -> float:
    _check_same_size(p, q)
    return float(0.5 * np.sum(np.abs(p.weights - q.weights)))


def tv_to_uniform(p: ProbDist) -> float:
    return total_variation(p, uniform_dist(p.nodes))


def fourier_coefficients(mu: ProbDist) -> FourierSpectrum:
    """mu_hat(k) = sum_s mu(s) exp(-2 pi i k s / N)."""
    return FourierSpectrum(np.fft.fft(mu.weights))


def inverse_fourier(spectrum: FourierSpectrum) -> ProbDist:
    return ProbDist(np.fft.ifft(spectrum.coefficients).real)


def spectral_contraction(spectrum: FourierSpectrum) -> float:
    """max over k != 0 of |mu_hat(k)|; below 1 exactly when the walk is ergodic."""
    return float(np.max(spectrum.magnitudes()[1:]))


def ds_entropy_bound(spectrum: FourierSpectrum, n: int) -> float:
    """Lower bound on H(mu^{*n}); negative values are returned as-is."""
    require_positive(n, "n")
    log_n = float(np.log2(spectrum.nodes))
    tail = float(np.sum(spectrum.magnitudes()[1:] ** (2 * n)))
    return log_n - (log_n + 1.0) * float(np.sqrt(tail))


def check_ergodicity(mu: ProbDist, epsilon: float = DEFAULT_EPSILON) -> ErgodicityVerdict:
    """Ergodic iff the support of mu avoids every coset of a proper subgroup of Z_N."""
    nodes = mu.nodes
    if not 0.0 <= epsilon < 1.0 / nodes:
        raise ValidationError(f"epsilon must satisfy 0 <= epsilon < 1/N = {1.0 / nodes:.6g} (got {epsilon})")

    support = mu.support(epsilon)
    if support.size == 0:
        raise ValidationError(f"distribution has empty support above epsilon={epsilon}")
    members = tuple(int(x) for x in support)

    if support.size == 1:
        # the trivial subgroup {0}
        return ErgodicityVerdict(False, (nodes, members[0]), epsilon, members)

    for d in divisors(nodes):
        offset = members[0] % d
        if np.all(support % d == offset):
            LOGGER.debug("Support of size %d lies in coset %d + %dZ_%d", support.size, offset, d, nodes)
            return ErgodicityVerdict(False, (d, offset), epsilon, members)

    return ErgodicityVerdict(True, None, epsilon, members)


def empirical_distribution(seq: SampleSequence) -> ProbDist:
    if len(seq) == 0:
        raise ValidationError("sequence is empty")
    return ProbDist.from_counts(np.bincount(seq.values, minlength=seq.nodes))


def lag_joint(seq: SampleSequence, lag: int) -> LagJoint:
    """counts[a, b] = #{n : x_n = a, x_{n+lag} = b}."""
    require_positive(lag, "lag")
    if len(seq) <= lag:
        raise ValidationError(f"sequence of length {len(seq)} is too short for lag {lag}")
    nodes = seq.nodes
    pairs = seq.values[:-lag] * nodes + seq.values[lag:]
    counts = np.bincount(pairs, minlength=nodes * nodes).reshape(nodes, nodes)
    return LagJoint(counts=counts.astype(np.int64), lag=lag)


def mutual_information(joint: LagJoint) -> float:
    """Plug-in mutual information (bits) of the normalised joint counts."""
    if joint.total == 0:
        raise ValidationError("joint histogram is empty")
    p = joint.frequencies()
    row = p.sum(axis=1, keepdims=True)
    col = p.sum(axis=0, keepdims=True)
    mask = p > 0
    value = float(np.sum(p[mask] * np.log2(p[mask] / (row @ col)[mask])))
    return max(value, 0.0)


def chi_square_uniformity(seq: SampleSequence) -> ChiSquare:
    """Pearson statistic against the uniform distribution, df = N - 1."""
    nodes = seq.nodes
    if len(seq) < 5 * nodes:
        raise ValidationError(f"chi-square needs at least 5N = {5 * nodes} samples (got {len(seq)})")
    observed = np.bincount(seq.values, minlength=nodes)
    return ChiSquare(float(chisquare(observed).statistic), nodes - 1)


def transition_chi_square(seq: SampleSequence, mu: ProbDist, epsilon: float = DEFAULT_EPSILON) -> ChiSquare:
    """Pooled lag-1 test of x_{n+1} - x_n against mu.

    Displacements outside the support of mu cannot occur under the Markov
    model and are reported in ``outside_support`` rather than scored.
    """
    if mu.nodes != seq.nodes:
        raise ValidationError(f"kernel lives on N={mu.nodes} but sequence on N={seq.nodes}")
    if len(seq) < 2:
        raise ValidationError("transition test needs at least two samples")
    steps = np.mod(np.diff(seq.values), seq.nodes)
    observed = np.bincount(steps, minlength=seq.nodes).astype(float)
    support = mu.weights > epsilon
    probabilities = mu.weights[support] / mu.weights[support].sum()
    expected = steps.size * probabilities
    statistic = float(np.sum((observed[support] - expected) ** 2 / expected))
    outside = int(observed[~support].sum())
    return ChiSquare(statistic, int(support.sum()) - 1, outside)


def entropy_scan(
    config: CycleConfig,
    coin0: CoinState,
    x0: int,
    T_max: int,
    mode: str,
    convention: str = "main",
) -> List[Tuple[int, float]]:
    """Entropy of the exact direct or Cesaro distribution for T = 1..T_max."""
    require_positive(T_max, "t-max T")
    if mode not in SCAN_MODES:
        raise ValidationError(f"unknown scan mode '{mode}' (use one of {', '.join(SCAN_MODES)})")

    table = distribution_table(localized_state(config, x0, coin0), T_max)
    horizon = np.arange(1, T_max + 1)[:, None]
    if mode == "direct":
        rows = table[1:]
    elif convention == "main":
        rows = np.cumsum(table[1:], axis=0) / horizon
    elif convention == "appendix":
        rows = np.cumsum(table[:-1], axis=0) / horizon
    else:
        raise ValidationError(f"unknown Cesaro convention '{convention}'")

    values = np.clip(entropy(rows, base=2, axis=1), 0.0, np.log2(config.nodes))
    return [(int(T), float(H)) for T, H in zip(horizon[:, 0], values)]


def best_timestep(scan: Sequence[Tuple[int, float]]) -> Tuple[int, float]:
    """The (T, H) pair with the largest entropy; earliest T wins ties."""
    if not scan:
        raise ValidationError("entropy scan is empty")
    return max(scan, key=lambda item: (item[1], -item[0]))


def convergence_profile(kernel: TransitionKernel, n_max: int) -> NDArray[np.float64]:
    """TV(mu^{*n}, uniform) for n = 1..n_max."""
    uniform = uniform_dist(kernel.nodes)
    return np.array([total_variation(power, uniform) for power in iter_convolution_powers(kernel.mu, n_max)])


def halving_steps(profile: Sequence[float]) -> Optional[int]:
    """Smallest n* such that TV halves within n* steps from every measured n.

    Entries at or below round-off are ignored. Returns None when the first
    value never halves inside the profile.
    """
    values = np.asarray(profile, dtype=float)
    worst: Optional[int] = None
    for n, value in enumerate(values):
        if value <= TV_FLOOR:
            break
        later = np.flatnonzero(values[n + 1:] <= value / 2.0)
        if later.size == 0:
            if n == 0:
                return None
            break
        gap = int(later[0]) + 1
        worst = gap if worst is None else max(worst, gap)
    return worst

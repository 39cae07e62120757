"""Exact eigensystem of the step operator via momentum blocks.

With momentum states |chi_k> the step operator is block diagonal: on
|gamma> (x) |chi_k> it acts as the 2x2 matrix H_k = Lambda_k C, where
Lambda_k = diag(exp(-2 pi i k / N), exp(2 pi i k / N)) for the shift that
moves the up component forward. Each block is diagonalised on its own.

Eigenpair n = 2k + s, with s = 0 for the '+' branch (eigenphase in the lower
half of [0, 2 pi)) and s = 1 for the '-' branch.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import schur

from services.errors import UnsupportedConfigurationError, ValidationError, VertexIndexError
from services.walk import (
    CoinOperator,
    CoinState,
    CycleConfig,
    ProbDist,
    WalkerState,
    distribution_table,
    localized_state,
)

LOGGER = logging.getLogger(__name__)

PHASE_TOLERANCE = 1e-9
IMAGINARY_TOLERANCE = 1e-10
CESARO_CONVENTIONS = ("main", "appendix")
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class MomentumBlock:
    k: int
    matrix: NDArray[np.complex128]
    eigenvalues: NDArray[np.complex128]
    eigenvectors: NDArray[np.complex128]  # columns gamma_k^+, gamma_k^-

    @property
    def phases(self) -> NDArray[np.float64]:
        return np.mod(np.angle(self.eigenvalues), TWO_PI)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    config: CycleConfig
    blocks: List[MomentumBlock]
    eigenvalue_groups: List[Tuple[int, ...]]
    eigenvalues: NDArray[np.complex128]
    eigenvectors: NDArray[np.complex128]  # 2N x 2N, column n = |phi_n>

    @property
    def phases(self) -> NDArray[np.float64]:
        return np.mod(np.angle(self.eigenvalues), TWO_PI)

    def coefficients(self, state: WalkerState) -> NDArray[np.complex128]:
        """a_n = <phi_n | state>."""
        return self.eigenvectors.conj().T @ state.amplitudes


def momentum_state(k: int, nodes: int) -> NDArray[np.complex128]:
    if not 0 <= k < nodes:
        raise VertexIndexError(f"momentum k must lie in [0, {nodes - 1}] (got {k})")
    v = np.arange(nodes)
    return np.exp(2j * np.pi * k * v / nodes) / np.sqrt(nodes)


def _fix_phase(vector: NDArray[np.complex128]) -> NDArray[np.complex128]:
    for component in vector:
        if abs(component) > 1e-12:
            return vector * (np.conj(component) / abs(component))
    return vector


def momentum_block(coin: CoinOperator, k: int, nodes: int) -> MomentumBlock:
    alpha = TWO_PI * k / nodes
    matrix = np.diag([np.exp(-1j * alpha), np.exp(1j * alpha)]) @ coin.entries
    # Complex Schur form of a normal matrix is diagonal with unitary Z, so the
    # eigenvectors come out orthonormal even when the block is degenerate.
    triangular, unitary = schur(matrix, output="complex")
    eigenvalues = np.diag(triangular).copy()
    order = np.argsort(np.mod(np.angle(eigenvalues), TWO_PI), kind="stable")
    eigenvalues = eigenvalues[order]
    vectors = np.column_stack([_fix_phase(unitary[:, idx]) for idx in order])
    return MomentumBlock(k=k, matrix=matrix, eigenvalues=eigenvalues, eigenvectors=vectors)


def group_phases(phases: Sequence[float], tolerance: float = PHASE_TOLERANCE) -> List[Tuple[int, ...]]:
    """Partition indices into classes of equal phase on the circle."""
    phases = np.mod(np.asarray(phases, dtype=float), TWO_PI)
    order = np.argsort(phases, kind="stable")
    groups: List[List[int]] = []
    previous = None
    for idx in order:
        if previous is not None and phases[idx] - previous <= tolerance:
            groups[-1].append(int(idx))
        else:
            groups.append([int(idx)])
        previous = phases[idx]

    if len(groups) > 1:
        first, last = groups[0], groups[-1]
        if phases[first[0]] + TWO_PI - phases[last[-1]] <= tolerance:
            groups[0] = last + first
            groups.pop()

    return [tuple(sorted(group)) for group in sorted(groups, key=min)]


def decompose(config: CycleConfig) -> SpectralDecomposition:
    nodes = config.nodes
    blocks = [momentum_block(config.coin, k, nodes) for k in range(nodes)]

    eigenvalues = np.empty(2 * nodes, dtype=np.complex128)
    eigenvectors = np.empty((2 * nodes, 2 * nodes), dtype=np.complex128)
    for block in blocks:
        chi = momentum_state(block.k, nodes)
        for s in range(2):
            n = 2 * block.k + s
            eigenvalues[n] = block.eigenvalues[s]
            eigenvectors[:, n] = np.kron(block.eigenvectors[:, s], chi)

    groups = group_phases(np.angle(eigenvalues))
    LOGGER.debug(
        "Decomposed N=%d coin=%s into %d eigenvalue classes", nodes, config.coin.name, len(groups)
    )
    return SpectralDecomposition(
        config=config,
        blocks=blocks,
        eigenvalue_groups=groups,
        eigenvalues=eigenvalues,
        eigenvectors=eigenvectors,
    )


def eigenphases(decomp: SpectralDecomposition) -> List[Tuple[int, float, float]]:
    """(k, theta_k^+, theta_k^-) for every momentum block."""
    return [(block.k, float(block.phases[0]), float(block.phases[1])) for block in decomp.blocks]


def reconstruct_operator(decomp: SpectralDecomposition) -> NDArray[np.complex128]:
    phi = decomp.eigenvectors
    return phi @ np.diag(decomp.eigenvalues) @ phi.conj().T


def _check_state(decomp: SpectralDecomposition, state: WalkerState) -> None:
    if state.config.nodes != decomp.config.nodes:
        raise ValidationError(
            f"state lives on N={state.config.nodes} but decomposition is for N={decomp.config.nodes}"
        )


def evolve_spectral(decomp: SpectralDecomposition, initial: WalkerState, t: int) -> WalkerState:
    """U^t |initial> as sum_n lambda_n^t a_n |phi_n>."""
    if t < 0:
        raise ValidationError(f"t must be >= 0 (got {t})")
    _check_state(decomp, initial)
    coefficients = decomp.coefficients(initial)
    rotated = np.exp(1j * t * np.angle(decomp.eigenvalues)) * coefficients
    return WalkerState(decomp.eigenvectors @ rotated, decomp.config)


def time_average(config: CycleConfig, initial: WalkerState, start: int, stop: int) -> ProbDist:
    """Mean position distribution over t = start..stop inclusive."""
    if start < 0 or stop < start:
        raise ValidationError(f"time range must satisfy 0 <= start <= stop (got {start}..{stop})")
    state = WalkerState(initial.amplitudes, config)
    table = distribution_table(state, stop)
    return ProbDist(table[start:].mean(axis=0))


def cesaro_average(config: CycleConfig, initial: WalkerState, T: int, convention: str = "main") -> ProbDist:
    """Cesaro distribution: t = 1..T ('main') or t = 0..T-1 ('appendix')."""
    if T < 1:
        raise ValidationError(f"T must be >= 1 (got {T})")
    if convention == "main":
        return time_average(config, initial, 1, T)
    if convention == "appendix":
        return time_average(config, initial, 0, T - 1)
    raise ValidationError(f"unknown Cesaro convention '{convention}' (use one of {', '.join(CESARO_CONVENTIONS)})")


def limiting_distribution(decomp: SpectralDecomposition, initial: WalkerState) -> ProbDist:
    """T -> infinity time average: only pairs of equal eigenvalue contribute.

    Within one eigenvalue class G the surviving terms sum to
    sum_c |<c, v| psi_G>|^2 with psi_G = sum_{n in G} a_n |phi_n>.
    """
    _check_state(decomp, initial)
    nodes = decomp.config.nodes
    coefficients = decomp.coefficients(initial)
    weights = np.zeros(nodes)
    for group in decomp.eigenvalue_groups:
        members = list(group)
        projected = decomp.eigenvectors[:, members] @ coefficients[members]
        weights += np.sum(np.abs(projected.reshape(2, nodes)) ** 2, axis=0)
    return ProbDist(weights)


def limiting_correction_closed_form(config: CycleConfig, coin0: CoinState, x0: int = 0) -> ProbDist:
    """Closed-form limiting distribution for the symmetric coin on odd N.

    pi(v) = 1/N + 1/N^2 sum_{n=1}^{N-1} exp(-4 pi i n v / N)
                  sum_s <g_n^s|g_{N-n}^s> <g_{N-n}^s|P0|g_n^s>
    with P0 = |coin0><coin0|.
    """
    nodes = config.nodes
    if nodes % 2 == 0:
        raise UnsupportedConfigurationError(
            f"closed form requires odd N and the symmetric coin (got even N={nodes})"
        )
    if not config.coin.is_close(CoinOperator.symmetric()):
        raise UnsupportedConfigurationError(
            f"closed form requires odd N and the symmetric coin (got coin '{config.coin.name}')"
        )
    x0 = config.check_vertex(x0)

    gammas = [momentum_block(config.coin, k, nodes).eigenvectors for k in range(nodes)]
    c0 = coin0.vector
    coefficients = np.zeros(nodes, dtype=np.complex128)
    for n in range(1, nodes):
        own, partner = gammas[n], gammas[nodes - n]
        for s in range(2):
            overlap = np.vdot(own[:, s], partner[:, s])
            projector = np.vdot(partner[:, s], c0) * np.vdot(c0, own[:, s])
            coefficients[n] += overlap * projector

    v = np.arange(nodes)
    n = np.arange(nodes)
    phases = np.exp(-4j * np.pi * np.outer(v, n) / nodes)
    values = 1.0 / nodes + (phases @ coefficients) / nodes**2

    residue = float(np.max(np.abs(values.imag)))
    if residue > IMAGINARY_TOLERANCE:
        LOGGER.warning("Closed-form limiting distribution has imaginary residue %.3e", residue)
    return ProbDist(np.roll(values.real, x0))


def limiting_from_localized(config: CycleConfig, coin0: CoinState, x0: int = 0) -> ProbDist:
    return limiting_distribution(decompose(config), localized_state(config, x0, coin0))

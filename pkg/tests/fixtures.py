import numpy as np

from services.walk import CoinOperator, CoinState, CycleConfig, ProbDist, WalkerState

COINS = (CoinOperator.symmetric(), CoinOperator.hadamard())


def random_state(rng: np.random.Generator, config: CycleConfig) -> WalkerState:
    amplitudes = rng.normal(size=2 * config.nodes) + 1j * rng.normal(size=2 * config.nodes)
    return WalkerState(amplitudes / np.linalg.norm(amplitudes), config)


def random_coin_state(rng: np.random.Generator) -> CoinState:
    vector = rng.normal(size=2) + 1j * rng.normal(size=2)
    vector /= np.linalg.norm(vector)
    return CoinState(complex(vector[0]), complex(vector[1]))


def random_coin(rng: np.random.Generator) -> CoinOperator:
    """Haar-ish unitary from the QR decomposition of a complex Gaussian matrix."""
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return CoinOperator(q * (np.diag(r) / np.abs(np.diag(r))), name="random")


def random_dist(rng: np.random.Generator, nodes: int) -> ProbDist:
    weights = rng.random(nodes)
    return ProbDist(weights / weights.sum())

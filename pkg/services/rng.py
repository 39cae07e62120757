"""Seedable random source simulating measurement collapse.

Uses the PCG64 bit generator from numpy (seeded through SeedSequence) and
maps its raw 64-bit outputs to doubles and bounded integers by explicit
integer arithmetic, so the stream depends only on the seed:

- uniform double: (raw >> 11) * 2**-53, in [0, 1)
- integer in [low, high]: rejection below 2**64 - (2**64 mod span), then
  low + raw mod span
"""

import logging
from typing import Dict

import numpy as np
from numpy.typing import NDArray

from services.errors import ValidationError

LOGGER = logging.getLogger(__name__)

ALGORITHM = "pcg64-seedsequence/raw53"
_TWO_64 = 1 << 64
_INV_TWO_53 = 1.0 / (1 << 53)


class RandomSource:
    """Deterministic uniform stream for a fixed 64-bit seed."""

    algorithm = ALGORITHM

    def __init__(self, seed: int) -> None:
        if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
            raise ValidationError(f"seed must be an integer (got {type(seed).__name__})")
        if not 0 <= seed < _TWO_64:
            raise ValidationError(f"seed must lie in [0, 2**64) (got {seed})")
        self._seed = int(seed)
        self._bits = np.random.PCG64(self._seed)

    @property
    def seed(self) -> int:
        return self._seed

    def raw(self, size: int) -> NDArray[np.uint64]:
        return np.asarray(self._bits.random_raw(size), dtype=np.uint64)

    def uniform(self) -> float:
        """Return a float in [0.0, 1.0)."""
        return (int(self._bits.random_raw()) >> 11) * _INV_TWO_53

    def uniforms(self, size: int) -> NDArray[np.float64]:
        """Return ``size`` floats in [0.0, 1.0), identical to ``size`` calls of uniform()."""
        return (self.raw(size) >> np.uint64(11)).astype(np.float64) * _INV_TWO_53

    def integer(self, low: int, high: int) -> int:
        """Return an integer N such that low <= N <= high."""
        if high < low:
            raise ValidationError(f"empty integer range [{low}, {high}]")
        span = high - low + 1
        if span == 1:
            return low
        limit = _TWO_64 - (_TWO_64 % span)
        while True:
            value = int(self._bits.random_raw())
            if value < limit:
                return low + value % span

    def describe(self) -> Dict[str, object]:
        return {"seed": self._seed, "algorithm": self.algorithm}

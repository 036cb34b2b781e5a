"""Sign-flip plans.

A plan is a w-by-n matrix of +-1 signs whose first row is the identity
flip (all ones).  Rows come from a counter-based Philox stream keyed by
the plan seed, so the matrix for a given (n, w, mode, seed) is identical
regardless of how the downstream statistics are scheduled or chunked.

Modes
-----
with-replacement
    Rows 2..w i.i.d. uniform on {-1,+1}^n.
without-replacement
    Rows 2..w distinct, uniform on {-1,+1}^n minus the identity; needs
    w <= 2^n.  For n <= 20 this samples from the full enumeration, for
    larger n it rejection-samples against a seen-set (w << 2^n there).
exhaustive
    All 2^n sign vectors exactly once (w must equal 2^n, n <= 20),
    ordered as binary counting with the last coordinate moving fastest.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import DesignError

__all__ = ["FlipPlan", "make_flip_plan", "MODES"]

MODES = ("with-replacement", "without-replacement", "exhaustive")

_EXHAUSTIVE_MAX_N = 20
_SEED_MASK = (1 << 64) - 1
_PLAN_STREAM = 0x666C6970  # distinguishes plan streams from other keyed streams


def keyed_rng(seed, stream=0):
    """Counter-based generator keyed by (seed, stream)."""
    key = np.array(
        [np.uint64(int(seed) & _SEED_MASK), np.uint64(int(stream) & _SEED_MASK)]
    )
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class FlipPlan:
    """Sign matrix with its provenance; row 0 is the identity flip."""

    n: int
    w: int
    mode: str
    seed: int
    signs: np.ndarray  # (w, n) int8 in {-1, +1}


@lru_cache(maxsize=8)
def _full_enumeration(n):
    """All 2^n sign vectors; row 0 all +1, last coordinate fastest."""
    codes = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (codes[:, None] >> shifts) & 1
    return (1 - 2 * bits).astype(np.int8)


def _sample_distinct(rng, n, count):
    """Rejection-sample ``count`` distinct non-identity rows for n > 20."""
    seen = set()
    rows = np.empty((count, n), dtype=np.int8)
    got = 0
    while got < count:
        batch = rng.integers(0, 2, size=(max(count - got, 64), n), dtype=np.uint8)
        for bits in batch:
            if got == count:
                break
            key = bits.tobytes()
            if not bits.any() or key in seen:  # identity or duplicate
                continue
            seen.add(key)
            rows[got] = 1 - 2 * bits.astype(np.int8)
            got += 1
    return rows


def make_flip_plan(n, w, mode="with-replacement", seed=0):
    """Build the w-by-n sign matrix for (n, w, mode, seed).

    Raises DesignError when w < 2, when without-replacement is asked for
    more rows than 2^n, or when exhaustive is requested with n > 20 or
    w != 2^n.
    """
    n = int(n)
    w = int(w)
    if n < 1:
        raise DesignError("flip plan needs at least one observation")
    if w < 2:
        raise DesignError("flip count w must be at least 2")
    if mode not in MODES:
        raise DesignError(f"unknown flip mode {mode!r}; choose from {MODES}")

    if mode == "exhaustive":
        if n > _EXHAUSTIVE_MAX_N:
            raise DesignError(
                f"exhaustive mode supports n <= {_EXHAUSTIVE_MAX_N}, got n={n}"
            )
        if w != 1 << n:
            raise DesignError(f"exhaustive mode requires w = 2^n = {1 << n}, got {w}")
        signs = _full_enumeration(n).copy()
        return FlipPlan(n=n, w=w, mode=mode, seed=int(seed), signs=signs)

    rng = keyed_rng(seed, _PLAN_STREAM)
    if mode == "with-replacement":
        bits = rng.integers(0, 2, size=(w - 1, n), dtype=np.int8)
        rows = 1 - 2 * bits
    else:
        if n <= _EXHAUSTIVE_MAX_N:
            if w > 1 << n:
                raise DesignError(
                    f"without-replacement needs w <= 2^n = {1 << n}, got w={w}"
                )
            full = _full_enumeration(n)
            idx = rng.choice((1 << n) - 1, size=w - 1, replace=False) + 1
            rows = full[idx]
        else:
            rows = _sample_distinct(rng, n, w - 1)

    signs = np.empty((w, n), dtype=np.int8)
    signs[0] = 1
    signs[1:] = rows
    return FlipPlan(n=n, w=w, mode=mode, seed=int(seed), signs=signs)

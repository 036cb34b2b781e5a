"""Embedded datasets.

The warpbreaks data (Tippett, 1950; shipped with R) gives the number of
warp breaks per loom for a fixed length of yarn: 54 observations of
breaks, wool type (A/B) and tension (L/M/H), 9 per wool-tension cell.
"""

import numpy as np

__all__ = ["warpbreaks"]

_BREAKS = (
    26, 30, 54, 25, 70, 52, 51, 26, 67,   # wool A, tension L
    18, 21, 29, 17, 12, 18, 35, 30, 36,   # wool A, tension M
    36, 21, 24, 18, 10, 43, 28, 15, 26,   # wool A, tension H
    27, 14, 29, 19, 29, 31, 41, 20, 44,   # wool B, tension L
    42, 26, 19, 16, 39, 28, 21, 39, 29,   # wool B, tension M
    20, 21, 24, 17, 13, 15, 15, 16, 28,   # wool B, tension H
)


def warpbreaks():
    """Return the warpbreaks table: breaks (counts), wool, tension."""
    wool = np.repeat(["A", "B"], 27)
    tension = np.tile(np.repeat(["L", "M", "H"], 9), 2)
    return {
        "breaks": np.asarray(_BREAKS, dtype=float),
        "wool": wool,
        "tension": tension,
    }

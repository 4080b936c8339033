"""Stateless world-anchored lattice hashing.

The renderer needs textures that are a pure function of world position
(plus a seed), so that every camera sees the same gap holes and hot
patches regardless of view order or resolution.  A counter-based hash
gives that directly; a stateful generator would not.

All functions are vectorized over numpy arrays and use uint64 wraparound
arithmetic (splitmix64 finalizer), so results are identical across
platforms and runs.
"""

from __future__ import annotations

import numpy as np

_C1 = np.uint64(0x9E3779B97F4A7C15)
_C2 = np.uint64(0xC2B2AE3D27D4EB4F)
_C3 = np.uint64(0x165667B19E3779F9)
_C4 = np.uint64(0x27D4EB2F165667C5)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_U64_SCALE = float(2**64)


def _mix(z: np.ndarray) -> np.ndarray:
    z = z.copy()
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def hash_u64(ix, iy, seed: int, salt: int = 0) -> np.ndarray:
    """Hash integer lattice coordinates to uint64.

    ``salt`` separates independent channels (gaps, patches, ...) drawn
    from the same seed.
    """
    xs = np.asarray(ix, dtype=np.int64).view(np.uint64) if np.ndim(ix) else np.int64(ix).view(np.uint64)
    ys = np.asarray(iy, dtype=np.int64).view(np.uint64) if np.ndim(iy) else np.int64(iy).view(np.uint64)
    s = np.int64(np.int64(seed) + np.int64(salt) * np.int64(0x9E3779B9)).view(np.uint64)
    with np.errstate(over="ignore"):
        h = xs * _C1 ^ ys * _C2 ^ s * _C3
        return _mix(np.asarray(h, dtype=np.uint64))


def hash01(ix, iy, seed: int, salt: int = 0) -> np.ndarray:
    """Uniform [0, 1) value per lattice cell."""
    return hash_u64(ix, iy, seed, salt).astype(np.float64) / _U64_SCALE


def hash01_3(ix, iy, iz, seed: int, salt: int = 0) -> np.ndarray:
    """Uniform [0, 1) value per 3-D lattice cell."""
    xs = np.asarray(ix, dtype=np.int64).view(np.uint64)
    ys = np.asarray(iy, dtype=np.int64).view(np.uint64)
    zs = np.asarray(iz, dtype=np.int64).view(np.uint64)
    s = np.int64(np.int64(seed) + np.int64(salt) * np.int64(0x9E3779B9)).view(np.uint64)
    with np.errstate(over="ignore"):
        h = xs * _C1 ^ ys * _C2 ^ zs * _C4 ^ s * _C3
        return _mix(np.asarray(h, dtype=np.uint64)).astype(np.float64) / _U64_SCALE


def lattice01_3(x, y, z, cell_size: float, seed: int, salt: int = 0) -> np.ndarray:
    """3-D analogue of lattice01 for points on surfaces in space."""
    ix = np.floor(np.asarray(x, dtype=np.float64) / cell_size).astype(np.int64)
    iy = np.floor(np.asarray(y, dtype=np.float64) / cell_size).astype(np.int64)
    iz = np.floor(np.asarray(z, dtype=np.float64) / cell_size).astype(np.int64)
    return hash01_3(ix, iy, iz, seed, salt)


def lattice01(x, y, cell_size: float, seed: int, salt: int = 0) -> np.ndarray:
    """Uniform [0, 1) value for world coordinates quantized to a lattice.

    Points in the same ``cell_size`` square share a value; the lattice is
    anchored at the world origin, so it is view-independent.
    """
    ix = np.floor(np.asarray(x, dtype=np.float64) / cell_size).astype(np.int64)
    iy = np.floor(np.asarray(y, dtype=np.float64) / cell_size).astype(np.int64)
    return hash01(ix, iy, seed, salt)


def two_level(
    x,
    y,
    cell_size: float,
    seed: int,
    low: float,
    high: float,
    salt: int = 0,
    low_fraction: float = 0.5,
):
    """Split lattice cells between two exact values.

    The output takes only the two given float values, never anything in
    between; downstream percentile logic relies on these exact ties.
    ``low_fraction`` sets the share of cells carrying ``low``.
    """
    u = lattice01(x, y, cell_size, seed, salt)
    return np.where(u < low_fraction, np.float64(low), np.float64(high))


def sparse_patches(
    x,
    y,
    cell_size: float,
    seed: int,
    probabilities: tuple[float, ...],
    values: tuple[float, ...],
    salt: int = 0,
) -> np.ndarray:
    """Mark rare lattice cells with one of several exact values, 0 elsewhere.

    ``probabilities`` are cumulative-disjoint: cell gets values[k] when
    u falls in [sum(p[:k]), sum(p[:k+1])).  Used for hot patches.
    """
    if len(probabilities) != len(values):
        raise ValueError("probabilities and values must pair up")
    u = lattice01(x, y, cell_size, seed, salt)
    out = np.zeros_like(u)
    lo = 0.0
    for p, v in zip(probabilities, values):
        out = np.where((u >= lo) & (u < lo + p), np.float64(v), out)
        lo += p
    return out

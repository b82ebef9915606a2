"""Shared helpers: seed derivation, lower-triangle packing, angle wrapping."""

import zlib
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache

import numpy as np


def derive_seed(base, *path):
    """Derive a reproducible 64-bit sub-seed from a base seed and an index path.

    Path elements may be integers or short string tags (hashed with crc32).
    Parallel and serial runs agree because each record's stream depends only
    on (base, path), never on execution order.
    """
    entropy = [int(base)]
    for p in path:
        entropy.append(zlib.crc32(p.encode()) if isinstance(p, str) else int(p))
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


@lru_cache(maxsize=64)
def lower_indices(n_modes):
    """Row-major indices (i >= j) of the lower triangle including the diagonal."""
    return np.tril_indices(n_modes)


def n_lower_cells(n_modes):
    return n_modes * (n_modes + 1) // 2


def pack_lower(mat):
    """Flatten the lower triangle (row-major, i >= j) of a square matrix."""
    mat = np.asarray(mat)
    return mat[lower_indices(mat.shape[0])]


def unpack_lower(cells, n_modes):
    """Inverse of pack_lower; entries above the diagonal are zero."""
    out = np.zeros((n_modes, n_modes), dtype=np.asarray(cells).dtype)
    out[lower_indices(n_modes)] = cells
    return out


def wrap_angle(angles):
    """Wrap angles to the interval (-pi, pi]."""
    a = np.mod(np.asarray(angles, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(a == -np.pi, np.pi, a)


def parallel_map(fn, items, threads=1):
    """Map fn over items, optionally on a thread pool; output order is fixed."""
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))

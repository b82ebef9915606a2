"""Random interferometers, phase-shifter banks, evolution, and measurement.

Randomness uses numpy's PCG64 generator throughout; every drawing function
takes an explicit 64-bit seed, so results are reproducible within one build.
Cross-platform bit-exactness is not promised.
"""

import numpy as np

from .util import lower_indices
from .validation import as_phase_vector, check_mode_count


def haar_unitary(n_modes, seed):
    """Draw a Haar-distributed n_modes x n_modes unitary, deterministic per seed.

    QR decomposition of a complex standard-Gaussian matrix with the phase of
    the R diagonal absorbed into the columns of Q, which makes the
    decomposition canonical and the result exactly Haar.
    """
    check_mode_count(n_modes)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_modes, n_modes)) + 1j * rng.standard_normal((n_modes, n_modes))
    q, r = np.linalg.qr(z / np.sqrt(2.0))
    phases = np.diagonal(r).copy()
    phases /= np.abs(phases)
    return q * phases


def phase_diagonal(theta, n_modes):
    """Diagonal of the phase-shifter bank: e^{i theta_k} on the first modes, 1 after."""
    theta = as_phase_vector(theta)
    if len(theta) > n_modes:
        raise ValueError(f"{len(theta)} phase shifters exceed {n_modes} modes")
    diag = np.ones(n_modes, dtype=np.complex128)
    diag[: len(theta)] = np.exp(1j * theta)
    return diag


def phase_unitary(theta, n_modes):
    """Phase-shifter bank as a dense diagonal unitary."""
    return np.diag(phase_diagonal(theta, n_modes))


def evolve(psi, u0, theta):
    """Evolve a two-photon amplitude matrix through U = U0 * U_theta.

    The phase shifters act on the first len(theta) modes before the static
    interferometer u0.  For symmetric psi the result U psi U^T is symmetric
    and norm-preserving.
    """
    psi = np.asarray(psi, dtype=np.complex128)
    u0 = np.asarray(u0, dtype=np.complex128)
    d = u0.shape[0]
    if psi.shape != (d, d):
        raise ValueError(f"state shape {psi.shape} does not match unitary {u0.shape}")
    u = u0 * phase_diagonal(theta, d)[np.newaxis, :]
    return u @ psi @ u.T


def coincidence(psi):
    """Coincidence probability matrix on the lower triangle.

    probs[i, j] = 2 |psi[i, j]|^2 for i > j and |psi[i, i]|^2 on the diagonal,
    which sums to 1 for any symmetric unit-norm amplitude matrix.
    """
    p = np.abs(np.asarray(psi, dtype=np.complex128)) ** 2
    return np.tril(p + p.T, -1) + np.diag(np.diagonal(p))


def sample_counts(probs, n_samples, seed):
    """Multinomial draw of n_samples coincidence events, deterministic per seed.

    Sampling is by inverse CDF over the flattened lower triangle (row-major,
    i >= j).  Returns an integer count matrix with the same support layout.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if n_samples < 1:
        raise ValueError(f"n_samples must be positive, got {n_samples}")
    d = probs.shape[0]
    rows, cols = lower_indices(d)
    cdf = np.cumsum(probs[rows, cols])
    if cdf[-1] <= 0:
        raise ValueError("probability matrix has no mass on the lower triangle")
    cdf /= cdf[-1]
    rng = np.random.default_rng(seed)
    draws = np.searchsorted(cdf, rng.random(n_samples), side="right")
    draws = np.minimum(draws, len(cdf) - 1)
    counts = np.zeros((d, d), dtype=np.int64)
    counts[rows, cols] = np.bincount(draws, minlength=len(cdf))
    return counts


def empirical_frequencies(counts):
    """Normalized view of a count matrix."""
    counts = np.asarray(counts)
    total = counts.sum()
    if total <= 0:
        raise ValueError("count matrix is empty")
    return counts.astype(np.float64) / float(total)

"""Construction of two-photon amplitude matrices over d spatial modes.

A two-photon state is represented by a complex d x d matrix: entry [i, j] is
the amplitude for finding one photon in mode i and the other in mode j.  Valid
states are symmetric (indistinguishable photons) with unit Frobenius norm.
"""

import math

import numpy as np

from .validation import check_mode_count

DEFAULT_ALPHA1 = 2.0 + 0.0j
DEFAULT_ALPHA2 = 3.0 + 0.0j

STATE_KINDS = ("weak", "noon")


def coherent_amplitudes(alpha, n_modes):
    """Unit-norm amplitude vector of a coherent state truncated to n_modes levels.

    Entry m (m = 0..n_modes-1) is proportional to alpha^m / sqrt(m!).  The
    magnitudes are evaluated in log space so large |alpha| cannot overflow
    before normalization; an error is raised only if the result is non-finite.

    Parameters
    ----------
    alpha : complex
        Coherent amplitude.
    n_modes : int
        Truncation length d.
    """
    if n_modes < 1:
        raise ValueError(f"n_modes must be positive, got {n_modes}")
    alpha = complex(alpha)
    if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
        raise ValueError(f"coherent amplitude must be finite, got {alpha!r}")
    if alpha == 0:
        v = np.zeros(n_modes, dtype=np.complex128)
        v[0] = 1.0
        return v
    m = np.arange(n_modes)
    log_fact = np.array([math.lgamma(k + 1.0) for k in range(n_modes)])
    log_mag = m * math.log(abs(alpha)) - 0.5 * log_fact
    log_mag -= log_mag.max()
    v = np.exp(log_mag) * np.exp(1j * m * np.angle(alpha))
    v /= np.linalg.norm(v)
    if not np.all(np.isfinite(v)):
        raise FloatingPointError(f"coherent amplitudes non-finite for alpha={alpha!r}")
    return v


def symmetrize(amplitudes):
    """Return (A + A^T) rescaled to unit Frobenius norm.

    Raises ValueError for inputs whose symmetric part vanishes (e.g. the zero
    matrix or any antisymmetric matrix).
    """
    a = np.asarray(amplitudes, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"amplitude matrix must be square, got shape {a.shape}")
    s = a + a.T
    norm = np.linalg.norm(s)
    if norm < 1e-300:
        raise ValueError("degenerate state: symmetrized amplitudes vanish")
    return s / norm


def weak_coherent_state(n_modes, alpha1=DEFAULT_ALPHA1, alpha2=DEFAULT_ALPHA2):
    """Symmetrized pair of truncated coherent states (Schmidt rank 2 generically)."""
    c1 = coherent_amplitudes(alpha1, n_modes)
    c2 = coherent_amplitudes(alpha2, n_modes)
    return symmetrize(np.outer(c1, c2))


def noon_state(n_modes):
    """Maximally entangled diagonal state: both photons in the same mode."""
    check_mode_count(n_modes)
    return np.eye(n_modes, dtype=np.complex128) / math.sqrt(n_modes)


def fock_pair_state(mode_a, mode_b, n_modes):
    """Symmetrized state with one photon in mode_a and one in mode_b."""
    if not (0 <= mode_a < n_modes and 0 <= mode_b < n_modes):
        raise ValueError(f"modes ({mode_a}, {mode_b}) out of range for d={n_modes}")
    a = np.zeros((n_modes, n_modes), dtype=np.complex128)
    a[mode_a, mode_b] = 1.0
    return symmetrize(a)


def initial_state(kind, n_modes, alpha1=DEFAULT_ALPHA1, alpha2=DEFAULT_ALPHA2):
    """Build a named initial state: "weak" (coherent pair) or "noon"."""
    check_mode_count(n_modes)
    if kind == "weak":
        return weak_coherent_state(n_modes, alpha1, alpha2)
    if kind == "noon":
        return noon_state(n_modes)
    raise ValueError(f"unknown state kind {kind!r}, expected one of {STATE_KINDS}")

"""Input validation helpers for arrays used across the package."""

import numpy as np

SYMMETRY_TOL = 1e-12
NORM_TOL = 1e-12
UNITARY_TOL = 1e-12


def as_phase_vector(theta, n_phases=None):
    """Coerce to a finite 1-d float64 phase vector, optionally of fixed length."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim != 1:
        raise ValueError(f"phase vector must be 1-d, got shape {theta.shape}")
    if n_phases is not None and theta.shape[0] != n_phases:
        raise ValueError(f"expected {n_phases} phases, got {theta.shape[0]}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("phase vector contains non-finite entries")
    return theta


def check_mode_count(n_modes, n_phases=None):
    if n_modes < 2:
        raise ValueError(f"need at least 2 modes, got {n_modes}")
    if n_phases is not None and not 1 <= n_phases <= n_modes:
        raise ValueError(f"n_phases must be in [1, {n_modes}], got {n_phases}")


def check_unitary(u, tol=UNITARY_TOL):
    """Validate a square complex matrix is unitary to within tol (max norm)."""
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"unitary must be square, got shape {u.shape}")
    dev = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if dev > tol:
        raise ValueError(f"matrix is not unitary: max deviation {dev:.3e}")
    return u


def check_two_photon_state(psi, tol=SYMMETRY_TOL):
    """Validate a symmetric unit-Frobenius-norm complex amplitude matrix."""
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.ndim != 2 or psi.shape[0] != psi.shape[1]:
        raise ValueError(f"amplitude matrix must be square, got shape {psi.shape}")
    asym = np.max(np.abs(psi - psi.T))
    if asym > tol:
        raise ValueError(f"amplitude matrix not symmetric: max asymmetry {asym:.3e}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"amplitude matrix not normalized: |psi| = {norm!r}")
    return psi


def check_coincidence(probs, tol=NORM_TOL):
    """Validate a lower-triangular coincidence probability matrix."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[0] != probs.shape[1]:
        raise ValueError(f"coincidence matrix must be square, got shape {probs.shape}")
    if np.any(np.triu(probs, 1) != 0.0):
        raise ValueError("coincidence matrix has mass above the diagonal")
    if np.min(probs) < -tol:
        raise ValueError(f"coincidence matrix has negative entries (min {np.min(probs):.3e})")
    total = probs.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"coincidence matrix sums to {total!r}, not 1")
    return probs


def check_counts(counts):
    """Validate a lower-triangular nonnegative integer count matrix."""
    counts = np.asarray(counts)
    if not np.issubdtype(counts.dtype, np.integer):
        raise ValueError(f"counts must be integers, got dtype {counts.dtype}")
    if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
        raise ValueError(f"count matrix must be square, got shape {counts.shape}")
    if np.any(np.triu(counts, 1) != 0):
        raise ValueError("count matrix has entries above the diagonal")
    if np.any(counts < 0):
        raise ValueError("count matrix has negative entries")
    return counts

"""Schmidt spectra, Renyi entropies, and low-rank statistics under random evolution."""

import numpy as np

from .circuit import evolve, haar_unitary
from .states import initial_state
from .util import derive_seed, parallel_map

RANK_EPS = 1e-10


def schmidt_values(psi):
    """Singular values of the amplitude matrix, sorted descending.

    The squares are the Schmidt weights lambda_k and sum to 1 for a normalized
    state.
    """
    return np.linalg.svd(np.asarray(psi, dtype=np.complex128), compute_uv=False)


def renyi_entropy(schmidt_vals, order, eps=RANK_EPS):
    """Renyi entropy of order n over the Schmidt weights lambda_k = Lambda_k^2.

    order 0 counts the weights above eps (log of the numerical Schmidt rank);
    order 1 is the Shannon limit; otherwise log(sum lambda^n) / (1 - n).
    Natural logarithm throughout.
    """
    lam = np.asarray(schmidt_vals, dtype=np.float64) ** 2
    if order < 0:
        raise ValueError(f"order must be nonnegative, got {order}")
    total = lam.sum()
    if total <= 0:
        raise ValueError("all-zero Schmidt spectrum")
    lam = lam / total
    if order == 0:
        return float(np.log(np.count_nonzero(lam > eps)))
    if order == 1:
        pos = lam[lam > 0]
        return float(-np.sum(pos * np.log(pos)))
    return float(np.log(np.sum(lam**order)) / (1.0 - order))


def schmidt_rank(schmidt_vals, eps=RANK_EPS):
    """Number of Schmidt weights above eps."""
    return int(np.count_nonzero(np.asarray(schmidt_vals) ** 2 > eps))


def rank_to_quantile(schmidt_vals, quantile):
    """Smallest r such that the top-r Schmidt weights sum to at least quantile.

    The comparison carries a 1e-12 slack so flat spectra whose partial sums
    land exactly on the quantile are not pushed up by rounding.
    """
    lam = np.sort(np.asarray(schmidt_vals, dtype=np.float64) ** 2)[::-1]
    cum = np.cumsum(lam / lam.sum())
    return int(np.searchsorted(cum, quantile - 1e-12, side="left") + 1)


def rank_statistics(state_kind, dims, n_draws, quantile=0.9, seed=0, n_phases=6, threads=1):
    """Low-rank statistics of evolved states across Haar draws.

    For each dimension d, the initial state is pushed through n_draws
    independent Haar unitaries with phases drawn uniformly from [0, 2pi).
    Records the weight carried by the two leading Schmidt coefficients and the
    rank needed to reach the requested quantile of the spectrum.

    Returns a list of dicts with keys: n_modes, mean_top2, sd_top2,
    mean_rank_q, sd_rank_q.
    """
    if n_draws < 1:
        raise ValueError(f"n_draws must be positive, got {n_draws}")

    def one_dim(d):
        psi0 = initial_state(state_kind, d)

        def one_draw(k):
            u0 = haar_unitary(d, derive_seed(seed, d, k, 0))
            rng = np.random.default_rng(derive_seed(seed, d, k, 1))
            theta = rng.uniform(0.0, 2.0 * np.pi, n_phases)
            sv = schmidt_values(evolve(psi0, u0, theta))
            lam = sv**2
            return lam[:2].sum() / lam.sum(), rank_to_quantile(sv, quantile)

        draws = parallel_map(one_draw, list(range(n_draws)), threads)
        top2 = np.array([t for t, _ in draws])
        ranks = np.array([r for _, r in draws], dtype=float)
        return {
            "n_modes": d,
            "mean_top2": float(top2.mean()),
            "sd_top2": float(top2.std(ddof=1)) if n_draws > 1 else 0.0,
            "mean_rank_q": float(ranks.mean()),
            "sd_rank_q": float(ranks.std(ddof=1)) if n_draws > 1 else 0.0,
        }

    return [one_dim(int(d)) for d in dims]

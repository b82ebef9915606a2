"""Matrix permanents and permanent-based multi-photon output distributions.

Sub-matrix convention: rows are indexed by the detected modes and columns by
the input (occupied) modes, matching the ket convention out = U @ in of the
circuit module (single-photon amplitude U[out, in]).  The two-photon
cross-check against matrix evolution pins this choice empirically.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

NAIVE_LIMIT = 9


def permanent_naive(matrix):
    """Permanent by direct sum over permutations; guarded to N <= 9."""
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if n > NAIVE_LIMIT:
        raise ValueError(f"naive permanent limited to N <= {NAIVE_LIMIT}, got {n}")
    rows = range(n)
    return complex(sum(math.prod(m[i, p[i]] for i in rows) for p in itertools.permutations(rows)))


def permanent_ryser(matrix):
    """Permanent by Ryser inclusion-exclusion with Gray-code subset updates.

    One column is added or removed from the running row sums per subset, so
    the cost is O(2^N * N) instead of the naive O(N! * N).
    """
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    row_sums = np.zeros(n, dtype=np.complex128)
    total = 0.0 + 0.0j
    gray = 0
    for s in range(1, 1 << n):
        new_gray = s ^ (s >> 1)
        changed = new_gray ^ gray
        j = changed.bit_length() - 1
        if new_gray & changed:
            row_sums += m[:, j]
        else:
            row_sums -= m[:, j]
        gray = new_gray
        sign = -1.0 if gray.bit_count() & 1 else 1.0
        total += sign * np.prod(row_sums)
    if n & 1:
        total = -total
    return complex(total)


@dataclass(frozen=True)
class MultiPhotonDistribution:
    """Output distribution of N photons over d modes.

    Outcomes are nondecreasing mode tuples; for N = 2 the bunched (equal-mode)
    outcomes are included with the repeated-mode weight |Per|^2 / 2!, so the
    distribution covers the full outcome space.  For N != 2 only collision-free
    outcomes are enumerated and the distribution is normalized over them.
    """

    n_photons: int
    n_modes: int
    outcomes: tuple
    probs: np.ndarray

    def prob(self, outcome):
        outcome = tuple(int(x) for x in outcome)
        try:
            return float(self.probs[self.outcomes.index(outcome)])
        except ValueError:
            raise KeyError(f"outcome {outcome} not in distribution support") from None


def _check_input_modes(input_modes, n_modes):
    modes = tuple(int(x) for x in input_modes)
    if any(b <= a for a, b in zip(modes, modes[1:])):
        raise ValueError(f"input modes must be strictly increasing, got {modes}")
    if len(set(modes)) != len(modes):
        raise ValueError(f"repeated input modes unsupported, got {modes}")
    if not modes or modes[0] < 0 or modes[-1] >= n_modes:
        raise ValueError(f"input modes {modes} out of range for d={n_modes}")
    return modes


def photon_distribution(unitary, input_modes):
    """Permanent-based output distribution for distinct-mode photon inputs.

    Each outcome is weighted by |Per(U[rows=outcome, cols=input])|^2 (with the
    1/2! collision factor for bunched two-photon outcomes) and the total is
    normalized to one, resolving the proportionality constant explicitly.
    """
    u = np.asarray(unitary, dtype=np.complex128)
    d = u.shape[0]
    modes = _check_input_modes(input_modes, d)
    n = len(modes)
    if n == 2:
        outcomes = list(itertools.combinations_with_replacement(range(d), 2))
    else:
        outcomes = list(itertools.combinations(range(d), n))
    weights = np.empty(len(outcomes))
    cols = np.array(modes)
    for idx, outcome in enumerate(outcomes):
        sub = u[np.ix_(np.array(outcome), cols)]
        w = abs(permanent_ryser(sub)) ** 2
        if n == 2 and outcome[0] == outcome[1]:
            w /= 2.0
        weights[idx] = w
    total = weights.sum()
    if total <= 0:
        raise ValueError("distribution has no support; unitary may be degenerate")
    return MultiPhotonDistribution(n, d, tuple(outcomes), weights / total)


def permanent_loss(pred, unitary, input_modes, coords, normalization):
    """Squared-error loss of predicted probabilities against permanent values.

    sum over coords of (pred[c] - normalization * |Per(U[c, input])|^2)^2,
    evaluated at randomly chosen outcome coordinates.  pred may be a
    MultiPhotonDistribution or any mapping from outcome tuple to probability.
    """
    u = np.asarray(unitary, dtype=np.complex128)
    modes = _check_input_modes(input_modes, u.shape[0])
    cols = np.array(modes)
    lookup = pred.prob if isinstance(pred, MultiPhotonDistribution) else lambda c: float(pred[c])
    loss = 0.0
    for coord in coords:
        coord = tuple(int(x) for x in coord)
        if len(coord) != len(modes):
            raise ValueError(f"coordinate {coord} has wrong photon count")
        sub = u[np.ix_(np.array(coord), cols)]
        truth = normalization * abs(permanent_ryser(sub)) ** 2
        loss += (lookup(coord) - truth) ** 2
    return float(loss)


def two_photon_crosscheck(n_modes, seed, n_trials):
    """Max deviation between matrix-evolution and permanent-based probabilities.

    For random Haar unitaries and random distinct input pairs, the coincidence
    distribution of the evolved symmetrized Fock pair must equal the
    permanent-formula distribution on every outcome (off-diagonal directly,
    diagonal via the 1/2! bunching factor).  Two independent code paths; the
    deviation should sit at float64 rounding level.
    """
    from .circuit import coincidence, evolve, haar_unitary
    from .states import fock_pair_state
    from .util import derive_seed

    worst = 0.0
    for t in range(n_trials):
        u = haar_unitary(n_modes, derive_seed(seed, t, 0))
        rng = np.random.default_rng(derive_seed(seed, t, 1))
        k, l = sorted(rng.choice(n_modes, size=2, replace=False))
        dist = photon_distribution(u, (int(k), int(l)))
        probs = coincidence(evolve(fock_pair_state(int(k), int(l), n_modes), u, np.zeros(0)))
        for (a, b), p in zip(dist.outcomes, dist.probs):
            worst = max(worst, abs(probs[b, a] - p))
    return worst

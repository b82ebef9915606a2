import itertools

import numpy as np
import pytest

from photonlearn import (
    coincidence,
    evolve,
    fock_pair_state,
    haar_unitary,
    permanent_loss,
    permanent_naive,
    permanent_ryser,
    photon_distribution,
    two_photon_crosscheck,
)


class TestNaive:
    def test_two_by_two_closed_form(self):
        m = np.array([[1.0 + 1j, 2.0], [3.0, 4.0 - 2j]])
        # per([[a,b],[c,d]]) = ad + bc
        assert permanent_naive(m) == pytest.approx(m[0, 0] * m[1, 1] + m[0, 1] * m[1, 0])

    def test_identity(self):
        assert permanent_naive(np.eye(4)) == pytest.approx(1.0)

    def test_all_ones_is_factorial(self):
        assert permanent_naive(np.ones((3, 3))) == pytest.approx(6.0)

    def test_size_guard(self):
        with pytest.raises(ValueError, match="N <= 9"):
            permanent_naive(np.eye(10))


class TestRyser:
    def test_identity(self):
        assert permanent_ryser(np.eye(5)) == pytest.approx(1.0)

    def test_zero_row_gives_zero(self):
        m = np.ones((4, 4), dtype=complex)
        m[2] = 0.0
        assert abs(permanent_ryser(m)) < 1e-14

    def test_matches_naive_on_random_complex(self):
        rng = np.random.default_rng(0)
        for n in range(1, 8):
            for _ in range(5):
                m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
                a, b = permanent_ryser(m), permanent_naive(m)
                assert abs(a - b) / max(abs(b), 1e-300) < 1e-10

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        m = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        base = permanent_ryser(m)
        for _ in range(5):
            pr = np.eye(5)[rng.permutation(5)]
            pc = np.eye(5)[rng.permutation(5)]
            assert permanent_ryser(pr @ m @ pc) == pytest.approx(base, rel=1e-10)

    def test_row_multilinearity(self):
        rng = np.random.default_rng(2)
        m = rng.normal(size=(4, 4))
        r1, r2 = rng.normal(size=4), rng.normal(size=4)
        a, b = 0.7, -1.3
        ma, mb, mc = m.copy(), m.copy(), m.copy()
        ma[1], mb[1], mc[1] = r1, r2, a * r1 + b * r2
        lhs = permanent_ryser(mc)
        rhs = a * permanent_ryser(ma) + b * permanent_ryser(mb)
        assert lhs == pytest.approx(rhs, rel=1e-10)


class TestPhotonDistribution:
    def test_single_photon_column(self):
        # one photon in mode 2: outcome law |U[out, 2]|^2
        u = haar_unitary(5, 3)
        dist = photon_distribution(u, (2,))
        expected = np.abs(u[:, 2]) ** 2
        for (j,), p in zip(dist.outcomes, dist.probs):
            assert p == pytest.approx(expected[j], abs=1e-12)

    def test_permutation_matrix_point_mass(self):
        perm = [3, 0, 4, 1, 2]
        u = np.eye(5)[perm].astype(complex)
        dist = photon_distribution(u, (1, 2, 4))
        target = tuple(sorted(int(np.argmax(np.abs(u[:, k]))) for k in (1, 2, 4)))
        assert dist.prob(target) == pytest.approx(1.0)
        assert dist.probs.sum() == pytest.approx(1.0)

    def test_sums_to_one(self):
        u = haar_unitary(6, 4)
        for modes in [(0, 1), (1, 3, 5)]:
            assert photon_distribution(u, modes).probs.sum() == pytest.approx(1.0, abs=1e-10)

    def test_rejects_repeated_inputs(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            photon_distribution(np.eye(4), (1, 1))

    def test_two_photon_crosscheck_small(self):
        assert two_photon_crosscheck(5, seed=0, n_trials=10) < 1e-10

    def test_crosscheck_against_evolution_explicitly(self):
        # independent code path: evolve a symmetrized Fock pair and compare cells
        d = 6
        u = haar_unitary(d, 8)
        dist = photon_distribution(u, (1, 4))
        probs = coincidence(evolve(fock_pair_state(1, 4, d), u, np.zeros(0)))
        for a, b in itertools.combinations_with_replacement(range(d), 2):
            assert probs[b, a] == pytest.approx(dist.prob((a, b)), abs=1e-10)


class TestPermanentLoss:
    def test_zero_when_prediction_matches_truth(self):
        u = haar_unitary(4, 5)
        dist = photon_distribution(u, (0, 2))
        # reconstruct the normalizer used for this distribution
        raw = []
        for outcome in dist.outcomes:
            sub = u[np.ix_(list(outcome), [0, 2])]
            w = abs(permanent_ryser(sub)) ** 2
            if outcome[0] == outcome[1]:
                w /= 2.0
            raw.append(w)
        c = 1.0 / sum(raw)
        offdiag = [o for o in dist.outcomes if o[0] != o[1]]
        assert permanent_loss(dist, u, (0, 2), offdiag, c) == pytest.approx(0.0, abs=1e-20)

    def test_hand_evaluated_single_photon_case(self):
        # uniform prediction vs identity unitary, input mode 0, all outcomes:
        # (0.5 - 1)^2 + (0.5 - 0)^2 = 0.5
        pred = {(0,): 0.5, (1,): 0.5}
        loss = permanent_loss(pred, np.eye(2, dtype=complex), (0,), [(0,), (1,)], 1.0)
        assert loss == pytest.approx(0.5)

    def test_invariant_under_coordinate_permutation(self):
        rng = np.random.default_rng(6)
        u = haar_unitary(5, 9)
        dist = photon_distribution(u, (0, 1, 3))
        coords = list(dist.outcomes[:6])
        pred = {c: float(rng.uniform(0, 0.3)) for c in dist.outcomes}
        a = permanent_loss(pred, u, (0, 1, 3), coords, 0.9)
        b = permanent_loss(pred, u, (0, 1, 3), coords[::-1], 0.9)
        assert a == pytest.approx(b, rel=1e-12)

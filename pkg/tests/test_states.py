import math

import numpy as np
import pytest

from photonlearn import (
    coherent_amplitudes,
    fock_pair_state,
    initial_state,
    noon_state,
    schmidt_values,
    symmetrize,
    weak_coherent_state,
)


def test_coherent_zero_alpha_is_vacuum():
    v = coherent_amplitudes(0.0, 4)
    assert np.allclose(v, [1, 0, 0, 0])


def test_coherent_entry_ratio():
    # v[2] / v[0] = alpha^2 / sqrt(2!)
    v = coherent_amplitudes(2.0, 16)
    assert abs(v[2] / v[0]) == pytest.approx(2**2 / math.sqrt(2.0), rel=1e-12)


def test_coherent_truncated_norm_against_partial_sum():
    # Brute-force oracle: pre-normalization norm^2 = e^{-|a|^2} sum 4^m / m!
    alpha, d = 2.0, 16
    partial = sum(4.0**m / math.factorial(m) for m in range(d))
    expected = math.exp(-4.0) * partial
    assert expected == pytest.approx(0.99999, abs=1e-5)
    # the implementation renormalizes, so check the unnormalized profile instead
    v = coherent_amplitudes(alpha, d)
    profile = np.array([alpha**m / math.sqrt(math.factorial(m)) for m in range(d)])
    profile /= np.linalg.norm(profile)
    assert np.allclose(np.abs(v), profile, atol=1e-12)


def test_coherent_magnitudes_depend_only_on_modulus():
    base = np.abs(coherent_amplitudes(1.7, 12))
    for phi in (0.3, 1.1, 2.9):
        rotated = coherent_amplitudes(1.7 * np.exp(1j * phi), 12)
        assert np.allclose(np.abs(rotated), base, atol=1e-12)


def test_coherent_large_alpha_stays_finite():
    v = coherent_amplitudes(40.0, 256)
    assert np.all(np.isfinite(v))
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)


def test_noon_state_is_scaled_identity():
    psi = noon_state(4)
    assert np.allclose(np.diagonal(psi), 0.5)
    assert np.allclose(psi - np.diag(np.diagonal(psi)), 0.0)


def test_weak_state_zero_alphas_single_cell():
    psi = weak_coherent_state(6, 0.0, 0.0)
    expected = np.zeros((6, 6))
    expected[0, 0] = 1.0
    assert np.allclose(psi, expected)


def test_weak_state_schmidt_rank_two():
    sv = schmidt_values(weak_coherent_state(16))
    assert np.sum(sv > 1e-12) == 2


def test_symmetrize_identity():
    out = symmetrize(np.eye(3))
    assert np.allclose(out, np.eye(3) / math.sqrt(3.0))


def test_symmetrize_single_offdiagonal_entry():
    a = np.zeros((3, 3))
    a[0, 1] = 1.0
    out = symmetrize(a)
    assert out[0, 1] == pytest.approx(1 / math.sqrt(2.0))
    assert out[1, 0] == pytest.approx(1 / math.sqrt(2.0))


def test_symmetrize_rejects_antisymmetric():
    a = np.array([[0.0, 1.0], [-1.0, 0.0]])
    with pytest.raises(ValueError, match="degenerate"):
        symmetrize(a)


def test_symmetrize_idempotent():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        once = symmetrize(a)
        assert np.allclose(symmetrize(once), once, atol=1e-14)


@pytest.mark.parametrize("kind", ["weak", "noon"])
def test_initial_states_satisfy_invariants(kind):
    rng = np.random.default_rng(1)
    for d in (2, 5, 16, 33):
        if kind == "weak":
            a1 = rng.normal() + 1j * rng.normal()
            a2 = rng.normal() + 1j * rng.normal()
            psi = initial_state(kind, d, a1, a2)
        else:
            psi = initial_state(kind, d)
        assert np.max(np.abs(psi - psi.T)) < 1e-12
        assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)


def test_initial_state_rejects_unknown_kind():
    with pytest.raises(ValueError, match="unknown state kind"):
        initial_state("thermal", 4)


def test_fock_pair_state():
    psi = fock_pair_state(1, 3, 5)
    assert psi[1, 3] == pytest.approx(1 / math.sqrt(2.0))
    assert psi[3, 1] == pytest.approx(1 / math.sqrt(2.0))
    assert np.linalg.norm(psi) == pytest.approx(1.0)

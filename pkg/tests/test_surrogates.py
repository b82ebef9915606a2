import numpy as np
import pytest

from photonlearn import (
    QcnnSurrogate,
    QctnSurrogate,
    VanillaSurrogate,
    choose_bond_dim,
    periodic_features,
)
from photonlearn import autodiff as ad
from photonlearn.surrogates import _log_floored
from photonlearn.util import pack_lower


def rel_err(a, b):
    return np.linalg.norm(a - b) / (np.linalg.norm(a) + np.linalg.norm(b) + 1e-300)


def random_target(d, rng):
    t = np.tril(rng.uniform(0.1, 1.0, (d, d)))
    return t / t.sum()


class TestFeatureMap:
    def test_zero_phases(self):
        f = periodic_features(np.zeros(6))
        assert np.allclose(f, [1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0])

    def test_periodicity(self):
        rng = np.random.default_rng(0)
        theta = rng.uniform(0, 2 * np.pi, 6)
        # fl(theta + 2pi) loses low bits of theta, so equality is to rounding,
        # not bitwise
        assert np.max(np.abs(periodic_features(theta + 2 * np.pi) - periodic_features(theta))) < 2e-15

    def test_quarter_turn(self):
        f = periodic_features(np.array([np.pi / 2, 0.0]))
        assert f[0] == pytest.approx(0.0, abs=1e-12)
        assert f[2] == pytest.approx(1.0)


class TestParameterCounts:
    # published parameter-count table for d in {8,16,32,64,128}
    QCNN_EXPECTED = {8: 14000, 16: 52400, 32: 206000, 64: 820400, 128: 3278000}
    QCTN_EXPECTED = {8: 4480, 16: 14080, 32: 48640, 64: 179200, 128: 686080}

    @pytest.mark.parametrize("d,expected", sorted(QCNN_EXPECTED.items()))
    def test_qcnn_counts(self, d, expected):
        model = QcnnSurrogate(n_modes=d, n_phases=6, hidden_dim=100)
        assert model.parameter_count() == expected

    @pytest.mark.parametrize("d,expected", sorted(QCTN_EXPECTED.items()))
    def test_qctn_counts(self, d, expected):
        model = QctnSurrogate(n_modes=d, n_phases=6, bond_dim=10)
        assert model.parameter_count() == expected

    def test_counts_match_actual_weights(self):
        for model in (QcnnSurrogate(n_modes=8), QctnSurrogate(n_modes=8, bond_dim=10),
                      VanillaSurrogate(n_modes=8)):
            model.initialize()
            total = sum(w.size for w in model.weights_.values())
            assert total == model.parameter_count()

    def test_qctn_beats_qcnn_for_table_dims(self):
        for d in (8, 16, 32, 64, 128):
            qcnn = QcnnSurrogate(n_modes=d, hidden_dim=100).parameter_count()
            qctn = QctnSurrogate(n_modes=d, bond_dim=10).parameter_count()
            assert qctn < qcnn


def test_choose_bond_dim_is_root_scaling():
    assert choose_bond_dim(64) == 8
    assert choose_bond_dim(4) == 2
    assert choose_bond_dim(16) == 4


@pytest.mark.parametrize("make", [
    lambda rs: QcnnSurrogate(n_modes=7, n_phases=4, hidden_dim=20, random_state=rs),
    lambda rs: QctnSurrogate(n_modes=7, n_phases=4, bond_dim=3, random_state=rs),
    lambda rs: VanillaSurrogate(n_modes=7, n_phases=4, random_state=rs),
])
class TestOutputValidity:
    def test_valid_distribution_for_random_weights(self, make):
        rng = np.random.default_rng(1)
        for rs in range(40):
            model = make(rs).initialize()
            p = model.predict_single(rng.uniform(0, 2 * np.pi, 4))
            assert np.all(np.triu(p, 1) == 0)
            assert np.min(p) >= 0
            assert p.sum() == pytest.approx(1.0, abs=1e-12)

    def test_prediction_shape(self, make):
        model = make(0).initialize()
        out = model.predict(np.zeros((3, 4)))
        assert out.shape == (3, 7, 7)


class TestPeriodicity:
    @pytest.mark.parametrize("make", [
        lambda: QcnnSurrogate(n_modes=6, n_phases=3, hidden_dim=15, random_state=3),
        lambda: QctnSurrogate(n_modes=6, n_phases=3, bond_dim=3, random_state=3),
    ])
    def test_shift_invariance(self, make):
        model = make().initialize()
        rng = np.random.default_rng(4)
        for _ in range(10):
            theta = rng.uniform(0, 2 * np.pi, 3)
            a = model.predict_single(theta)
            b = model.predict_single(theta + 2 * np.pi)
            assert np.max(np.abs(a - b)) < 1e-9

    def test_vanilla_is_not_periodic(self):
        model = VanillaSurrogate(n_modes=6, n_phases=3, random_state=5).initialize()
        theta = np.array([0.4, 1.0, 2.0])
        a = model.predict_single(theta)
        b = model.predict_single(theta + 2 * np.pi)
        assert np.max(np.abs(a - b)) > 1e-6


def test_zero_weights_give_uniform_fold():
    model = QcnnSurrogate(n_modes=5, n_phases=3, hidden_dim=8).initialize()
    model.weights_ = {k: np.zeros_like(v) for k, v in model.weights_.items()}
    p = model.predict_single(np.array([0.1, 0.2, 0.3]))
    d = 5
    expected = np.tril(np.full((d, d), 2.0 / d**2), -1) + np.eye(d) / d**2
    assert np.allclose(p, expected, atol=1e-14)


def test_prefold_cell_mass_is_symmetric():
    # the softmax input M is built symmetric, so Q == Q^T exactly
    model = QcnnSurrogate(n_modes=6, n_phases=3, hidden_dim=10, random_state=7).initialize()
    theta = np.array([0.5, 1.5, 2.5])
    w = {k: ad.constant(v) for k, v in model.weights_.items()}
    f = ad.concat([ad.cos(ad.constant(theta)), ad.sin(ad.constant(theta))])
    h = ad.relu(ad.matmul(w["hidden"], f))
    re = ad.reshape(ad.matmul(w["out_re"], h), (6, 6))
    re = ad.add(re, ad.transpose(re))
    assert np.array_equal(re.value, re.value.T)


def test_qctn_pathway_rank_bounded_by_bond_dim():
    # pre-symmetrization X = A' B'^T has rank <= bond_dim; SVD oracle
    model = QctnSurrogate(n_modes=12, n_phases=4, bond_dim=3, random_state=9).initialize()
    theta = np.random.default_rng(10).uniform(0, 2 * np.pi, 4)
    f = periodic_features(theta)
    w = model.weights_
    chi_a = np.maximum(0.0, np.tensordot(w["mps_a"], f, axes=([0], [0])))
    chi_b = np.maximum(0.0, np.tensordot(w["mps_b"], f, axes=([0], [0])))
    left = np.einsum("jia,ja->ia", w["mpo_re_a"], chi_a)
    right = np.einsum("jia,ja->ia", w["mpo_re_b"], chi_b)
    x = left @ right.T
    sv = np.linalg.svd(x, compute_uv=False)
    assert np.all(sv[3:] < 1e-10)


class TestGradients:
    @pytest.mark.parametrize("make", [
        lambda: QcnnSurrogate(n_modes=5, n_phases=3, hidden_dim=8, beta=30.0, random_state=11),
        lambda: QctnSurrogate(n_modes=5, n_phases=3, bond_dim=3, beta=30.0, random_state=11),
        lambda: VanillaSurrogate(n_modes=5, n_phases=3, random_state=11),
    ])
    def test_weight_gradients_match_fd(self, make):
        rng = np.random.default_rng(12)
        model = make().initialize()
        theta = rng.uniform(0, 2 * np.pi, 3)
        target = random_target(5, rng)
        log_t = _log_floored(target, 1e-9)
        names = list(model._weight_names)

        def loss_of(arrays):
            w = {k: ad.constant(a) for k, a in zip(names, arrays)}
            return float(ad.kl_div(model._forward(w, ad.constant(theta)), log_t).value)

        tape = ad.Tape()
        wv = {k: tape.variable(model.weights_[k]) for k in names}
        loss = ad.kl_div(model._forward(wv, ad.constant(theta)), log_t)
        grads = tape.backward(loss, [wv[k] for k in names])

        h = 1e-6
        for k_idx, name in enumerate(names):
            sample = min(6, model.weights_[name].size)
            flat_ids = rng.choice(model.weights_[name].size, size=sample, replace=False)
            for fid in flat_ids:
                arrays = [model.weights_[n].copy() for n in names]
                arrays[k_idx].reshape(-1)[fid] += h
                hi = loss_of(arrays)
                arrays[k_idx].reshape(-1)[fid] -= 2 * h
                lo = loss_of(arrays)
                fd = (hi - lo) / (2 * h)
                g = grads[k_idx].reshape(-1)[fid]
                assert abs(g - fd) / (abs(g) + abs(fd) + 1e-9) < 1e-4

    @pytest.mark.parametrize("make", [
        lambda: QcnnSurrogate(n_modes=5, n_phases=3, hidden_dim=8, beta=30.0, random_state=13),
        lambda: QctnSurrogate(n_modes=5, n_phases=3, bond_dim=3, beta=30.0, random_state=13),
    ])
    def test_theta_gradient_matches_fd(self, make):
        rng = np.random.default_rng(14)
        model = make().initialize()
        target = random_target(5, rng)
        for _ in range(5):
            theta = rng.uniform(0, 2 * np.pi, 3)
            _, grad = model.loss_and_grad(theta, target, floor=1e-9)
            fd = np.zeros(3)
            for i in range(3):
                tp, tm = theta.copy(), theta.copy()
                tp[i] += 1e-6
                tm[i] -= 1e-6
                fd[i] = (model.loss_and_grad(tp, target, 1e-9)[0]
                         - model.loss_and_grad(tm, target, 1e-9)[0]) / 2e-6
            assert rel_err(grad, fd) < 1e-4


class TestSklearnProtocol:
    def test_get_params_roundtrip(self):
        model = QcnnSurrogate(n_modes=8, hidden_dim=50, beta=10.0)
        params = model.get_params()
        assert params["hidden_dim"] == 50
        clone = QcnnSurrogate(**params)
        assert clone.get_params() == params

    def test_set_params(self):
        model = QctnSurrogate(n_modes=8).set_params(bond_dim=5)
        assert model.resolved_bond_dim() == 5

    def test_predict_before_fit_raises(self):
        from sklearn.exceptions import NotFittedError
        with pytest.raises(NotFittedError):
            QcnnSurrogate(n_modes=4, n_phases=2).predict_single(np.zeros(2))

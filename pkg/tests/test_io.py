import numpy as np
import pytest

from photonlearn import (
    QcnnSurrogate,
    QctnSurrogate,
    VanillaSurrogate,
    coincidence,
    evolve,
    haar_unitary,
    initial_state,
    io,
    make_dataset,
    sample_counts,
)


def test_unitary_roundtrip(tmp_path):
    u = haar_unitary(9, 77)
    path = tmp_path / "u.qcu"
    io.save_unitary(path, u, seed=77)
    loaded, seed = io.load_unitary(path)
    assert seed == 77
    assert np.array_equal(loaded, u)


def test_unitary_bad_magic(tmp_path):
    path = tmp_path / "junk.qcu"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(ValueError, match="magic"):
        io.load_unitary(path)


def test_dataset_roundtrip(tmp_path):
    ds = make_dataset(5, n_phases=3, n_records=7, state="noon",
                      label_mode="sampled", n_shots=200, unitary_seed=4, theta_seed=9)
    path = tmp_path / "d.qcds"
    io.save_dataset(path, ds)
    loaded = io.load_dataset(path)
    assert loaded.n_modes == 5
    assert loaded.n_phases == 3
    assert loaded.state == "noon"
    assert loaded.label_mode == "sampled"
    assert loaded.n_shots == 200
    assert loaded.unitary_seed == 4
    assert np.array_equal(loaded.thetas, ds.thetas)
    assert np.array_equal(loaded.targets, ds.targets)


def test_dataset_file_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a.qcds", tmp_path / "b.qcds"
    io.save_dataset(a, make_dataset(4, n_phases=3, n_records=10, unitary_seed=1, theta_seed=2))
    io.save_dataset(b, make_dataset(4, n_phases=3, n_records=10, unitary_seed=1, theta_seed=2))
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("make", [
    lambda: QcnnSurrogate(n_modes=5, n_phases=3, hidden_dim=11, beta=70.0),
    lambda: QctnSurrogate(n_modes=5, n_phases=3, bond_dim=4, beta=70.0),
    lambda: VanillaSurrogate(n_modes=5, n_phases=3),
])
def test_checkpoint_roundtrip_bitwise(tmp_path, make):
    model = make().initialize(random_state=5)
    path = tmp_path / "m.qckp"
    io.save_checkpoint(path, model)
    loaded = io.load_checkpoint(path)
    assert type(loaded) is type(model)
    for name in model._weight_names:
        assert np.array_equal(loaded.weights_[name], model.weights_[name])
    theta = np.array([0.3, 1.7, 5.1])
    assert np.array_equal(loaded.predict_single(theta), model.predict_single(theta))


def test_checkpoint_keeps_optimizer_state(tmp_path):
    rng = np.random.default_rng(0)
    thetas = rng.uniform(0, 2 * np.pi, (8, 3))
    u = haar_unitary(4, 0)
    psi = initial_state("weak", 4)
    targets = np.stack([coincidence(evolve(psi, u, t)) for t in thetas])
    model = QcnnSurrogate(n_modes=4, n_phases=3, hidden_dim=6, n_epochs=2,
                          batch_size=4).fit(thetas, targets)
    path = tmp_path / "m.qckp"
    io.save_checkpoint(path, model)
    loaded = io.load_checkpoint(path)
    assert loaded.optimizer_.k == model.optimizer_.k
    for a, b in zip(loaded.optimizer_.m, model.optimizer_.m):
        assert np.array_equal(a, b)


def test_counts_roundtrip(tmp_path):
    pm = coincidence(initial_state("noon", 6))
    counts = sample_counts(pm, 500, seed=3)
    path = tmp_path / "c.qcob"
    io.save_counts(path, counts)
    loaded, total = io.load_counts(path)
    assert total == 500
    assert np.array_equal(loaded, counts)


def test_inspect_reports_each_format(tmp_path):
    u = haar_unitary(4, 2)
    io.save_unitary(tmp_path / "u.qcu", u, seed=2)
    info = io.inspect_file(tmp_path / "u.qcu")
    assert info["format"].startswith("QCU1") and info["n_modes"] == 4

    ds = make_dataset(4, n_phases=3, n_records=3, unitary_seed=2, theta_seed=1)
    io.save_dataset(tmp_path / "d.qcds", ds)
    info = io.inspect_file(tmp_path / "d.qcds")
    assert info["n_records"] == 3 and info["state"] == "weak"

    model = QcnnSurrogate(n_modes=4, n_phases=2, hidden_dim=5).initialize()
    io.save_checkpoint(tmp_path / "m.qckp", model)
    info = io.inspect_file(tmp_path / "m.qckp")
    assert info["architecture"] == "qcnn" and info["parameters"] == model.parameter_count()

    io.save_counts(tmp_path / "c.qcob", sample_counts(coincidence(initial_state("noon", 4)), 99, 1))
    info = io.inspect_file(tmp_path / "c.qcob")
    assert info["n_samples"] == 99

    (tmp_path / "x.bin").write_bytes(b"garbage")
    with pytest.raises(ValueError, match="unrecognized"):
        io.inspect_file(tmp_path / "x.bin")

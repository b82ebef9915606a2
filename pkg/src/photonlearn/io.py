"""Binary file formats, all little-endian.

QCU1 (unitary): magic "QCU1", d (u32), d^2 complex entries as interleaved
    (re, im) float64 row-major, generating seed (u64, 0 if not seeded).
QCDS1 (dataset): magic "QCDS1", d (u32), n_phases (u32), n_records (u64),
    state tag (u8: 0 weak-coherent, 1 noon), label-mode tag (u8: 0 exact,
    1 sampled), n_shots (u64, 0 for exact), unitary seed (u64); then per
    record n_phases float64 phases followed by d(d+1)/2 float64 lower-triangle
    probabilities (row-major, i >= j).
QCKP1 (checkpoint): magic "QCKP1", architecture tag (u8 length + ascii, one
    of qcnn/qctn/vanilla), hyper block d (u64), n_phases (u64), width (u64:
    hidden_dim, bond_dim, or 0), beta (float64); then each weight tensor as
    ndim (u32), dims (u64 each), float64 data row-major; then an optimizer
    flag (u8): if 1, step count (u64) followed by the first- and second-moment
    tensors in the same encoding.
QCOB1 (observed counts): magic "QCOB1", d (u32), total count p (u64), then
    d(d+1)/2 u64 counts (lower triangle, row-major).
"""

import struct

import numpy as np

from .datasets import LABEL_MODES, CoincidenceDataset
from .states import STATE_KINDS
from .surrogates import ARCHITECTURES, QcnnSurrogate, QctnSurrogate, VanillaSurrogate
from .util import n_lower_cells, pack_lower, unpack_lower

MAGIC_UNITARY = b"QCU1"
MAGIC_DATASET = b"QCDS1"
MAGIC_CHECKPOINT = b"QCKP1"
MAGIC_COUNTS = b"QCOB1"


def _read_exact(fh, n):
    data = fh.read(n)
    if len(data) != n:
        raise ValueError("truncated file")
    return data


def _expect_magic(fh, magic, what):
    if _read_exact(fh, len(magic)) != magic:
        raise ValueError(f"not a {what} file (bad magic)")


def _write_tensor(fh, arr):
    arr = np.ascontiguousarray(arr, dtype="<f8")
    fh.write(struct.pack("<I", arr.ndim))
    fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
    fh.write(arr.tobytes())


def _read_tensor(fh):
    (ndim,) = struct.unpack("<I", _read_exact(fh, 4))
    shape = struct.unpack(f"<{ndim}Q", _read_exact(fh, 8 * ndim))
    count = int(np.prod(shape)) if ndim else 1
    data = np.frombuffer(_read_exact(fh, 8 * count), dtype="<f8")
    return data.reshape(shape).astype(np.float64)


def save_unitary(path, matrix, seed=0):
    matrix = np.asarray(matrix, dtype=np.complex128)
    d = matrix.shape[0]
    with open(path, "wb") as fh:
        fh.write(MAGIC_UNITARY)
        fh.write(struct.pack("<I", d))
        inter = np.empty((d, d, 2), dtype="<f8")
        inter[..., 0] = matrix.real
        inter[..., 1] = matrix.imag
        fh.write(inter.tobytes())
        fh.write(struct.pack("<Q", seed))


def load_unitary(path):
    """Returns (matrix, seed)."""
    with open(path, "rb") as fh:
        _expect_magic(fh, MAGIC_UNITARY, "QCU1 unitary")
        (d,) = struct.unpack("<I", _read_exact(fh, 4))
        raw = np.frombuffer(_read_exact(fh, 16 * d * d), dtype="<f8").reshape(d, d, 2)
        (seed,) = struct.unpack("<Q", _read_exact(fh, 8))
    return (raw[..., 0] + 1j * raw[..., 1]).astype(np.complex128), seed


def save_dataset(path, dataset):
    with open(path, "wb") as fh:
        fh.write(MAGIC_DATASET)
        fh.write(struct.pack("<II", dataset.n_modes, dataset.n_phases))
        fh.write(struct.pack("<Q", len(dataset)))
        fh.write(struct.pack("<BB", STATE_KINDS.index(dataset.state),
                             LABEL_MODES.index(dataset.label_mode)))
        fh.write(struct.pack("<QQ", dataset.n_shots, dataset.unitary_seed))
        for theta, row in zip(dataset.thetas, dataset.targets):
            fh.write(np.ascontiguousarray(theta, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(row, dtype="<f8").tobytes())


def load_dataset(path):
    with open(path, "rb") as fh:
        _expect_magic(fh, MAGIC_DATASET, "QCDS1 dataset")
        d, n_phases = struct.unpack("<II", _read_exact(fh, 8))
        (n_records,) = struct.unpack("<Q", _read_exact(fh, 8))
        state_tag, mode_tag = struct.unpack("<BB", _read_exact(fh, 2))
        n_shots, unitary_seed = struct.unpack("<QQ", _read_exact(fh, 16))
        cells = n_lower_cells(d)
        thetas = np.empty((n_records, n_phases))
        targets = np.empty((n_records, cells))
        for i in range(n_records):
            thetas[i] = np.frombuffer(_read_exact(fh, 8 * n_phases), dtype="<f8")
            targets[i] = np.frombuffer(_read_exact(fh, 8 * cells), dtype="<f8")
    return CoincidenceDataset(
        n_modes=d, n_phases=n_phases, thetas=thetas, targets=targets,
        state=STATE_KINDS[state_tag], label_mode=LABEL_MODES[mode_tag],
        n_shots=n_shots, unitary_seed=unitary_seed,
    )


def _hyper_block(model):
    if isinstance(model, QcnnSurrogate):
        return model.hidden_dim, float(model.beta)
    if isinstance(model, QctnSurrogate):
        return model.resolved_bond_dim(), float(model.beta)
    return 0, 1.0


def save_checkpoint(path, model, include_optimizer=True):
    model._require_weights()
    width, beta = _hyper_block(model)
    tag = model._arch_tag.encode()
    optimizer = getattr(model, "optimizer_", None) if include_optimizer else None
    with open(path, "wb") as fh:
        fh.write(MAGIC_CHECKPOINT)
        fh.write(struct.pack("<B", len(tag)))
        fh.write(tag)
        fh.write(struct.pack("<QQQd", model.n_modes, model.n_phases, width, beta))
        for name in model._weight_names:
            _write_tensor(fh, model.weights_[name])
        if optimizer is not None and optimizer.m is not None:
            fh.write(struct.pack("<B", 1))
            fh.write(struct.pack("<Q", optimizer.k))
            for arr in optimizer.m:
                _write_tensor(fh, arr)
            for arr in optimizer.v:
                _write_tensor(fh, arr)
        else:
            fh.write(struct.pack("<B", 0))


def load_checkpoint(path):
    """Reconstruct a surrogate (architecture, hyperparameters, weights)."""
    from .optim import Adam

    with open(path, "rb") as fh:
        _expect_magic(fh, MAGIC_CHECKPOINT, "QCKP1 checkpoint")
        (tag_len,) = struct.unpack("<B", _read_exact(fh, 1))
        tag = _read_exact(fh, tag_len).decode()
        if tag not in ARCHITECTURES:
            raise ValueError(f"unknown architecture tag {tag!r}")
        d, n_phases, width, beta = struct.unpack("<QQQd", _read_exact(fh, 32))
        if tag == "qcnn":
            model = QcnnSurrogate(n_modes=int(d), n_phases=int(n_phases),
                                  hidden_dim=int(width), beta=beta)
        elif tag == "qctn":
            model = QctnSurrogate(n_modes=int(d), n_phases=int(n_phases),
                                  bond_dim=int(width), beta=beta)
        else:
            model = VanillaSurrogate(n_modes=int(d), n_phases=int(n_phases))
        model.weights_ = {name: _read_tensor(fh) for name in model._weight_names}
        (has_opt,) = struct.unpack("<B", _read_exact(fh, 1))
        if has_opt:
            (k,) = struct.unpack("<Q", _read_exact(fh, 8))
            m = [_read_tensor(fh) for _ in model._weight_names]
            v = [_read_tensor(fh) for _ in model._weight_names]
            optimizer = Adam()
            optimizer.load_state(k, m, v)
            model.optimizer_ = optimizer
    return model


def save_counts(path, counts):
    counts = np.asarray(counts)
    d = counts.shape[0]
    with open(path, "wb") as fh:
        fh.write(MAGIC_COUNTS)
        fh.write(struct.pack("<I", d))
        fh.write(struct.pack("<Q", int(counts.sum())))
        fh.write(np.ascontiguousarray(pack_lower(counts), dtype="<u8").tobytes())


def load_counts(path):
    """Returns (count matrix, total count)."""
    with open(path, "rb") as fh:
        _expect_magic(fh, MAGIC_COUNTS, "QCOB1 counts")
        (d,) = struct.unpack("<I", _read_exact(fh, 4))
        (total,) = struct.unpack("<Q", _read_exact(fh, 8))
        cells = np.frombuffer(_read_exact(fh, 8 * n_lower_cells(d)), dtype="<u8")
    counts = unpack_lower(cells.astype(np.int64), d)
    if counts.sum() != total:
        raise ValueError(f"counts sum to {counts.sum()}, header says {total}")
    return counts, total


def inspect_file(path):
    """Header summary of any of the package's binary formats."""
    with open(path, "rb") as fh:
        head = fh.read(5)
    if head[:4] == MAGIC_UNITARY:
        matrix, seed = load_unitary(path)
        return {"format": "QCU1 unitary", "n_modes": matrix.shape[0], "seed": seed}
    if head == MAGIC_DATASET:
        ds = load_dataset(path)
        return {
            "format": "QCDS1 dataset", "n_modes": ds.n_modes, "n_phases": ds.n_phases,
            "n_records": len(ds), "state": ds.state, "label_mode": ds.label_mode,
            "n_shots": ds.n_shots, "unitary_seed": ds.unitary_seed,
        }
    if head == MAGIC_CHECKPOINT:
        model = load_checkpoint(path)
        info = {
            "format": "QCKP1 checkpoint", "architecture": model._arch_tag,
            "n_modes": model.n_modes, "n_phases": model.n_phases,
            "parameters": model.parameter_count(),
        }
        if isinstance(model, QcnnSurrogate):
            info.update(hidden_dim=model.hidden_dim, beta=model.beta)
        elif isinstance(model, QctnSurrogate):
            info.update(bond_dim=model.resolved_bond_dim(), beta=model.beta)
        return info
    if head == MAGIC_COUNTS:
        counts, total = load_counts(path)
        return {"format": "QCOB1 counts", "n_modes": counts.shape[0], "n_samples": total}
    raise ValueError(f"unrecognized file format: {path}")

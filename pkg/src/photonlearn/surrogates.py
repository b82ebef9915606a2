"""Trainable surrogates mapping phase-shifter settings to coincidence distributions.

Three estimators share one normalization tail and training loop:

* QcnnSurrogate: periodic feature map, one hidden dense layer, independent
  dense heads for the real and imaginary parts of a symmetric wave-function
  matrix, Boltzmann (softmax) normalization, lower-triangle folding.
* QctnSurrogate: the two dense layers replaced by low-rank tensor
  contractions (a bond-dimension-limited state generator plus bond-channel
  operator tensors); everything else identical.
* VanillaSurrogate: raw phases through a single dense layer, global softmax,
  masked to the lower triangle and renormalized.  Comparison baseline only.

The first two produce valid distributions (lower-triangular, nonnegative,
unit total mass) for any weights, and are exactly periodic in each phase.
All estimators follow the scikit-learn protocol: hyperparameters in
__init__, learned state in trailing-underscore attributes set by fit().
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import autodiff as ad
from .autodiff import NonFiniteError
from .losses import EXACT_KL_FLOOR, kl_divergence, mean_absolute_error
from .optim import Adam
from .util import derive_seed, n_lower_cells, pack_lower, unpack_lower
from .validation import as_phase_vector, check_mode_count


class TrainingDivergence(FloatingPointError):
    """Training loss became non-finite; message carries epoch and batch index."""


def periodic_features(theta):
    """Encode phases as (cos(theta), sin(theta)), invariant under 2-pi shifts."""
    theta = as_phase_vector(theta)
    return np.concatenate([np.cos(theta), np.sin(theta)])


def choose_bond_dim(n_modes):
    """Default bond dimension: round(sqrt(d)), following the observed rank scaling."""
    check_mode_count(n_modes)
    return int(round(np.sqrt(n_modes)))


def _uniform(rng, shape, fan_in):
    bound = np.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _check_finite(var, layer):
    if not np.all(np.isfinite(var.value)):
        raise NonFiniteError(f"non-finite activation in {layer}")


def _taped_features(theta):
    return ad.concat([ad.cos(theta), ad.sin(theta)])


def _log_floored(target, floor):
    return np.log(np.maximum(np.asarray(target, dtype=np.float64), floor))


def _validate_targets(targets, n_modes):
    """Accept (n, d, d) matrices or (n, cells) packed rows; return packed rows."""
    targets = np.asarray(targets, dtype=np.float64)
    cells = n_lower_cells(n_modes)
    if targets.ndim == 3:
        if targets.shape[1:] != (n_modes, n_modes):
            raise ValueError(f"target matrices have shape {targets.shape[1:]}, expected ({n_modes}, {n_modes})")
        targets = np.stack([pack_lower(t) for t in targets])
    elif targets.ndim != 2 or targets.shape[1] != cells:
        raise ValueError(f"targets must be (n, {n_modes}, {n_modes}) or (n, {cells}), got {targets.shape}")
    if np.min(targets) < 0:
        raise ValueError("targets contain negative probabilities")
    sums = targets.sum(axis=1)
    if np.max(np.abs(sums - 1.0)) > 1e-8:
        raise ValueError("target distributions do not sum to 1")
    return targets


class _CoincidenceSurrogate(BaseEstimator):
    """Shared forward tail, training loop, and prediction plumbing."""

    # subclasses set: _arch_tag, _weight_names and implement
    # _init_weights(rng) -> dict and _forward(weights, theta_var) -> Var

    def _boltzmann_fold(self, m):
        """Softmax with inverse temperature beta, then fold to the lower triangle.

        The fold sends symmetric cell mass to unordered pairs:
        P[i, j] = Q[i, j] + Q[j, i] below the diagonal, P[i, i] = Q[i, i].
        """
        d = self.n_modes
        _check_finite(m, "magnitude layer")
        z = ad.scale(m, self._beta())
        z = ad.sub(z, ad.constant(np.max(z.value)))
        q = ad.exp(ad.sub(z, ad.logsumexp(z)))
        folded = ad.add(
            ad.lower_triangle(ad.add(q, ad.transpose(q)), -1),
            ad.mul(q, ad.constant(np.eye(d))),
        )
        _check_finite(folded, "normalization layer")
        return folded

    def _beta(self):
        return self.beta

    def _require_weights(self):
        if not hasattr(self, "weights_"):
            raise NotFittedError(f"{type(self).__name__} has no weights; call fit() or initialize()")

    def initialize(self, random_state=None):
        """Draw fresh weights without training (used by fit and by property checks)."""
        seed = self.random_state if random_state is None else random_state
        rng = np.random.default_rng(derive_seed(seed, 0))
        self.weights_ = self._init_weights(rng)
        return self

    def parameter_count(self):
        raise NotImplementedError

    def fit(self, thetas, targets, validation=None):
        """Train on (theta, coincidence distribution) pairs with batched KL loss.

        Parameters
        ----------
        thetas : (n, n_phases) array
        targets : (n, d, d) lower-triangular matrices or (n, d(d+1)/2) packed rows
        validation : optional (thetas_val, targets_val) pair scored each epoch.

        Sets weights_, train_loss_curve_, and, when validation is given,
        val_loss_curve_ and val_mae_.  Deterministic for a fixed random_state.
        """
        thetas = np.asarray(thetas, dtype=np.float64)
        if thetas.ndim != 2 or thetas.shape[1] != self.n_phases:
            raise ValueError(f"thetas must be (n, {self.n_phases}), got {thetas.shape}")
        targets = _validate_targets(targets, self.n_modes)
        if len(thetas) != len(targets):
            raise ValueError(f"{len(thetas)} thetas but {len(targets)} targets")
        if validation is not None:
            val_thetas = np.asarray(validation[0], dtype=np.float64)
            val_targets = _validate_targets(validation[1], self.n_modes)

        self.initialize()
        names = list(self._weight_names)
        optimizer = Adam(lr=self.learning_rate)
        shuffle_rng = np.random.default_rng(derive_seed(self.random_state, 1))
        d = self.n_modes
        n = len(thetas)
        batch = max(1, min(self.batch_size, n))
        floor = self.kl_floor
        train_curve, val_curve = [], []

        for epoch in range(self.n_epochs):
            order = shuffle_rng.permutation(n)
            epoch_loss = 0.0
            for b, start in enumerate(range(0, n, batch)):
                sel = order[start : start + batch]
                tape = ad.Tape()
                wvars = {k: tape.variable(self.weights_[k]) for k in names}
                try:
                    loss = None
                    for i in sel:
                        pred = self._forward(wvars, ad.constant(thetas[i]))
                        term = ad.kl_div(pred, _log_floored(unpack_lower(targets[i], d), floor))
                        loss = term if loss is None else ad.add(loss, term)
                    loss = ad.scale(loss, 1.0 / len(sel))
                except NonFiniteError as exc:
                    raise TrainingDivergence(f"epoch {epoch}, batch {b}: {exc}") from exc
                if not np.isfinite(loss.value):
                    raise TrainingDivergence(f"non-finite loss at epoch {epoch}, batch {b}")
                grads = tape.backward(loss, [wvars[k] for k in names])
                updated = optimizer.step([self.weights_[k] for k in names], grads)
                self.weights_ = dict(zip(names, updated))
                epoch_loss += float(loss.value) * len(sel)
            train_curve.append(epoch_loss / n)
            if validation is not None:
                val_curve.append(self._mean_kl(val_thetas, val_targets, floor))

        self.optimizer_ = optimizer
        self.train_loss_curve_ = np.asarray(train_curve)
        if validation is not None:
            self.val_loss_curve_ = np.asarray(val_curve)
            self.val_mae_ = float(np.mean(self.per_record_mae(val_thetas, val_targets)))
        return self

    def _mean_kl(self, thetas, targets, floor):
        vals = [
            kl_divergence(pack_lower(self.predict_single(t)), row, floor)
            for t, row in zip(thetas, targets)
        ]
        return float(np.mean(vals))

    def predict_single(self, theta):
        """Coincidence probability matrix for one phase vector."""
        self._require_weights()
        theta = as_phase_vector(theta, self.n_phases)
        wconst = {k: ad.constant(v) for k, v in self.weights_.items()}
        return self._forward(wconst, ad.constant(theta)).value

    def predict(self, thetas):
        """Coincidence matrices for a batch of phase vectors, shape (n, d, d)."""
        thetas = np.asarray(thetas, dtype=np.float64)
        if thetas.ndim != 2:
            raise ValueError(f"predict expects a 2-d array of phase vectors, got shape {thetas.shape}")
        return np.stack([self.predict_single(t) for t in thetas])

    def per_record_mae(self, thetas, targets):
        """Per-record mean absolute error over lower-triangle cells."""
        targets = _validate_targets(targets, self.n_modes)
        return np.array([
            mean_absolute_error(pack_lower(self.predict_single(t)), row)
            for t, row in zip(np.asarray(thetas, dtype=np.float64), targets)
        ])

    def score(self, thetas, targets):
        """Negative mean KL divergence (higher is better), for model selection."""
        targets = _validate_targets(targets, self.n_modes)
        return -self._mean_kl(np.asarray(thetas, dtype=np.float64), targets, self.kl_floor)

    def loss_and_grad(self, theta, target, floor=EXACT_KL_FLOOR):
        """KL(model(theta) || target) and its gradient with respect to theta.

        Weights are held constant; used for phase recovery against a frozen
        surrogate.  target is a (d, d) lower-triangular distribution.
        """
        self._require_weights()
        theta = as_phase_vector(theta, self.n_phases)
        log_target = _log_floored(target, floor)
        tape = ad.Tape()
        tvar = tape.variable(theta)
        wconst = {k: ad.constant(v) for k, v in self.weights_.items()}
        loss = ad.kl_div(self._forward(wconst, tvar), log_target)
        (grad,) = tape.backward(loss, [tvar])
        return float(loss.value), grad


class QcnnSurrogate(_CoincidenceSurrogate):
    """Dense surrogate with built-in periodicity, symmetry, and normalization.

    Weight shapes: hidden (hidden_dim, 2 n_phases), out_re / out_im
    (d^2, hidden_dim); total parameter count 2 n_phases hidden_dim
    + 2 hidden_dim d^2.
    """

    _arch_tag = "qcnn"
    _weight_names = ("hidden", "out_re", "out_im")

    def __init__(self, n_modes, n_phases=6, hidden_dim=100, beta=1000.0,
                 learning_rate=0.1, batch_size=32, n_epochs=200,
                 kl_floor=EXACT_KL_FLOOR, random_state=0):
        self.n_modes = n_modes
        self.n_phases = n_phases
        self.hidden_dim = hidden_dim
        self.beta = beta
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.n_epochs = n_epochs
        self.kl_floor = kl_floor
        self.random_state = random_state

    def parameter_count(self):
        return 2 * self.n_phases * self.hidden_dim + 2 * self.hidden_dim * self.n_modes**2

    def _init_weights(self, rng):
        check_mode_count(self.n_modes, self.n_phases)
        d, l, n2 = self.n_modes, self.hidden_dim, 2 * self.n_phases
        return {
            "hidden": _uniform(rng, (l, n2), n2),
            "out_re": _uniform(rng, (d * d, l), l),
            "out_im": _uniform(rng, (d * d, l), l),
        }

    def _forward(self, w, theta):
        d = self.n_modes
        f = _taped_features(theta)
        h = ad.relu(ad.matmul(w["hidden"], f))
        _check_finite(h, "hidden layer")
        re = ad.reshape(ad.matmul(w["out_re"], h), (d, d))
        re = ad.add(re, ad.transpose(re))
        im = ad.reshape(ad.matmul(w["out_im"], h), (d, d))
        im = ad.add(im, ad.transpose(im))
        m = ad.add(ad.square(re), ad.square(im))
        return self._boltzmann_fold(m)


class QctnSurrogate(_CoincidenceSurrogate):
    """Tensor-contraction surrogate exploiting low Schmidt rank.

    A state generator produces two (d, bond_dim) factors from the periodic
    features; per pathway (real / imaginary), bond-channel operator tensors of
    shape (d, d, bond_dim) map the factors, whose product is a d x d matrix of
    rank at most bond_dim before symmetrization.  The normalization tail is
    identical to QcnnSurrogate.  Parameter count: 4 n_phases d bond_dim
    + 4 d^2 bond_dim.
    """

    _arch_tag = "qctn"
    _weight_names = ("mps_a", "mps_b", "mpo_re_a", "mpo_re_b", "mpo_im_a", "mpo_im_b")

    def __init__(self, n_modes, n_phases=6, bond_dim=None, beta=1000.0,
                 learning_rate=0.1, batch_size=32, n_epochs=200,
                 kl_floor=EXACT_KL_FLOOR, random_state=0):
        self.n_modes = n_modes
        self.n_phases = n_phases
        self.bond_dim = bond_dim
        self.beta = beta
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.n_epochs = n_epochs
        self.kl_floor = kl_floor
        self.random_state = random_state

    def resolved_bond_dim(self):
        return self.bond_dim if self.bond_dim is not None else choose_bond_dim(self.n_modes)

    def parameter_count(self):
        db = self.resolved_bond_dim()
        return 4 * self.n_phases * self.n_modes * db + 4 * self.n_modes**2 * db

    def _init_weights(self, rng):
        check_mode_count(self.n_modes, self.n_phases)
        d, db, n2 = self.n_modes, self.resolved_bond_dim(), 2 * self.n_phases
        return {
            "mps_a": _uniform(rng, (n2, d, db), n2),
            "mps_b": _uniform(rng, (n2, d, db), n2),
            "mpo_re_a": _uniform(rng, (d, d, db), d),
            "mpo_re_b": _uniform(rng, (d, d, db), d),
            "mpo_im_a": _uniform(rng, (d, d, db), d),
            "mpo_im_b": _uniform(rng, (d, d, db), d),
        }

    def _pathway(self, w, chi_a, chi_b, path):
        left = ad.bond_contract(w[f"mpo_{path}_a"], chi_a)
        right = ad.bond_contract(w[f"mpo_{path}_b"], chi_b)
        x = ad.matmul(left, ad.transpose(right))
        return ad.add(x, ad.transpose(x))

    def _forward(self, w, theta):
        f = _taped_features(theta)
        chi_a = ad.relu(ad.tensordot(w["mps_a"], f, axes=([0], [0])))
        chi_b = ad.relu(ad.tensordot(w["mps_b"], f, axes=([0], [0])))
        _check_finite(chi_a, "state generator")
        _check_finite(chi_b, "state generator")
        re = self._pathway(w, chi_a, chi_b, "re")
        im = self._pathway(w, chi_a, chi_b, "im")
        m = ad.add(ad.square(re), ad.square(im))
        return self._boltzmann_fold(m)


class VanillaSurrogate(_CoincidenceSurrogate):
    """Single dense layer baseline with no physical structure.

    Raw phases (no periodic encoding) map to d^2 logits; a global softmax is
    reshaped to d x d, masked to the lower triangle, and renormalized.  Not
    periodic in theta by construction.
    """

    _arch_tag = "vanilla"
    _weight_names = ("dense",)

    def __init__(self, n_modes, n_phases=6, learning_rate=0.1, batch_size=32,
                 n_epochs=200, kl_floor=EXACT_KL_FLOOR, random_state=0):
        self.n_modes = n_modes
        self.n_phases = n_phases
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.n_epochs = n_epochs
        self.kl_floor = kl_floor
        self.random_state = random_state

    def parameter_count(self):
        return self.n_modes**2 * self.n_phases

    def _init_weights(self, rng):
        check_mode_count(self.n_modes, self.n_phases)
        return {"dense": _uniform(rng, (self.n_modes**2, self.n_phases), self.n_phases)}

    def _forward(self, w, theta):
        d = self.n_modes
        logits = ad.matmul(w["dense"], theta)
        z = ad.sub(logits, ad.constant(np.max(logits.value)))
        q = ad.exp(ad.sub(z, ad.logsumexp(z)))
        low = ad.lower_triangle(ad.reshape(q, (d, d)))
        p = ad.div(low, ad.total(low))
        _check_finite(p, "normalization layer")
        return p


ARCHITECTURES = {
    "qcnn": QcnnSurrogate,
    "qctn": QctnSurrogate,
    "vanilla": VanillaSurrogate,
}

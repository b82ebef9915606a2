"""Phase recovery by back-propagated KL minimization.

Given an observed coincidence pattern, find phases whose model distribution
minimizes KL(model(theta) || observed).  The model is either the exact
circuit (analytic gradient) or a frozen trained surrogate (taped gradient);
both expose loss_and_grad(theta, target, floor) and predict_single(theta).
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .circuit import coincidence, empirical_frequencies, phase_diagonal, sample_counts
from .losses import EXACT_KL_FLOOR, sampled_kl_floor
from .optim import Adam
from .util import derive_seed, parallel_map, wrap_angle
from .validation import as_phase_vector, check_two_photon_state, check_unitary


class ExactCircuitModel:
    """Differentiable exact map from phases to the coincidence distribution.

    The gradient is analytic: with U = U0 D(theta) and output amplitudes
    Psi = U Psi0 U^T, each phase enters only through its diagonal factor, so
    dL/dtheta_k reduces to a diagonal element of a product of two fixed matrix
    chains (two matrix multiplications for the whole gradient).
    """

    def __init__(self, unitary, psi0, n_phases=6):
        self.u0 = check_unitary(unitary)
        self.psi0 = check_two_photon_state(psi0)
        if self.u0.shape != self.psi0.shape:
            raise ValueError(f"unitary {self.u0.shape} and state {self.psi0.shape} differ")
        self.n_modes = self.u0.shape[0]
        self.n_phases = n_phases

    def predict_single(self, theta):
        theta = as_phase_vector(theta, self.n_phases)
        u = self.u0 * phase_diagonal(theta, self.n_modes)[np.newaxis, :]
        return coincidence(u @ self.psi0 @ u.T)

    def loss_and_grad(self, theta, target, floor=EXACT_KL_FLOOR):
        """KL(P_theta || max(target, floor)) and its gradient over theta."""
        theta = as_phase_vector(theta, self.n_phases)
        d, n = self.n_modes, self.n_phases
        diag = phase_diagonal(theta, d)
        u = self.u0 * diag[np.newaxis, :]
        psi = u @ self.psi0 @ u.T
        probs = np.abs(psi) ** 2
        pred = np.tril(probs + probs.T, -1) + np.diag(np.diagonal(probs))

        log_t = np.log(np.maximum(np.asarray(target, dtype=np.float64), floor))
        mask = pred > 0
        log_ratio = np.zeros_like(pred)
        log_ratio[mask] = np.log(pred[mask]) - log_t[mask]
        loss = float(np.sum(pred * log_ratio))

        # dL/dP on the lower triangle, mirrored to a symmetric weight matrix.
        g_low = np.where(mask, log_ratio + 1.0, 0.0)
        g_low = np.tril(g_low)
        sym = g_low + g_low.T - np.diag(np.diagonal(g_low))
        x = sym * psi.conj()
        bc = (self.psi0 @ u.T) @ (x @ self.u0)
        grad = -4.0 * np.imag(diag[:n] * np.diagonal(bc)[:n])
        if not np.isfinite(loss):
            raise FloatingPointError("exact-model KL loss is non-finite")
        return loss, grad


@dataclass
class EstimationSummary:
    """Aggregate of repeated estimations at one true phase vector."""

    theta_true: np.ndarray
    final_residuals: np.ndarray      # (n_trials, n_phases), wrapped to (-pi, pi]
    mean_abs_curve: np.ndarray       # per-iteration mean |residual| over trials/phases
    sd_curve: np.ndarray             # per-iteration sd over trials of mean |residual|
    final_losses: np.ndarray

    def final_residual_sd(self):
        """Mean over phases of the across-trial standard deviation of residuals."""
        return float(np.mean(np.std(self.final_residuals, axis=0, ddof=1)))


def _resolve_floor(observed, floor):
    if floor is not None:
        return float(floor)
    if np.issubdtype(np.asarray(observed).dtype, np.integer):
        return sampled_kl_floor(int(np.asarray(observed).sum()))
    return EXACT_KL_FLOOR


class PhaseEstimator(BaseEstimator):
    """Recover phase-shifter settings from an observed coincidence pattern.

    Runs n_restarts independent Adam descents of the model KL against the
    observation and keeps the restart with the lowest final loss; success is
    judged on that loss, since distinct phase vectors can produce identical
    patterns.  fit() accepts either an integer count matrix (floored at the
    sub-single-count level) or an exact probability matrix.

    Attributes set by fit: theta_ (wrapped to [0, 2pi)), loss_, trace_loss_,
    trace_thetas_, restart_losses_.
    """

    def __init__(self, model, learning_rate=0.1, n_iterations=2000, n_restarts=4,
                 floor=None, init=None, gtol=1e-12, random_state=0):
        self.model = model
        self.learning_rate = learning_rate
        self.n_iterations = n_iterations
        self.n_restarts = n_restarts
        self.floor = floor
        self.init = init
        self.gtol = gtol
        self.random_state = random_state

    def _run(self, theta0, target, floor):
        theta = np.array(theta0, dtype=np.float64)
        adam = Adam(lr=self.learning_rate)
        losses = np.empty(self.n_iterations + 1)
        thetas = np.empty((self.n_iterations + 1, len(theta)))
        loss, grad = self.model.loss_and_grad(theta, target, floor)
        losses[0], thetas[0] = loss, theta
        for k in range(self.n_iterations):
            if np.max(np.abs(grad)) < self.gtol:
                # converged; freeze the trace so a fixed point stays fixed
                losses[k + 1 :] = loss
                thetas[k + 1 :] = theta
                break
            (theta,) = adam.step([theta], [grad])
            loss, grad = self.model.loss_and_grad(theta, target, floor)
            losses[k + 1], thetas[k + 1] = loss, theta
        return losses, thetas

    def fit(self, observed):
        observed = np.asarray(observed)
        target = (
            empirical_frequencies(observed)
            if np.issubdtype(observed.dtype, np.integer)
            else np.asarray(observed, dtype=np.float64)
        )
        floor = _resolve_floor(observed, self.floor)
        n = self.model.n_phases
        rng = np.random.default_rng(derive_seed(self.random_state, "restarts"))
        best = None
        restart_losses = []
        for r in range(self.n_restarts):
            if r == 0 and self.init is not None:
                theta0 = as_phase_vector(self.init, n)
            else:
                theta0 = rng.uniform(0.0, 2.0 * np.pi, n)
            losses, thetas = self._run(theta0, target, floor)
            restart_losses.append(losses[-1])
            if best is None or losses[-1] < best[0][-1]:
                best = (losses, thetas)
        losses, thetas = best
        self.trace_loss_ = losses
        self.trace_thetas_ = thetas
        self.theta_ = np.mod(thetas[-1], 2.0 * np.pi)
        self.loss_ = float(losses[-1])
        self.restart_losses_ = np.asarray(restart_losses)
        return self

    def residuals(self, theta_true):
        """Signed estimation errors wrapped to (-pi, pi]."""
        return wrap_angle(self.trace_thetas_[-1] - as_phase_vector(theta_true))


def batch_estimate(model, theta_true, n_shots, n_trials, observed_from=None,
                  seed=0, threads=1, **estimator_kwargs):
    """Repeat estimation over independently sampled observations at fixed truth.

    Each trial samples n_shots coincidence events from observed_from (default:
    the model's own distribution at theta_true) with a per-trial derived seed,
    runs a PhaseEstimator, and records the residual trajectory.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be positive, got {n_trials}")
    theta_true = as_phase_vector(theta_true, model.n_phases)
    true_probs = observed_from if observed_from is not None else model.predict_single(theta_true)

    def one_trial(t):
        counts = sample_counts(true_probs, n_shots, derive_seed(seed, "obs", t))
        est = PhaseEstimator(model, random_state=derive_seed(seed, "est", t), **estimator_kwargs)
        est.fit(counts)
        resid = wrap_angle(est.trace_thetas_ - theta_true[np.newaxis, :])
        return resid, est.loss_

    results = parallel_map(one_trial, list(range(n_trials)), threads)
    resid_traces = np.stack([r for r, _ in results])        # (trials, iters+1, n_phases)
    abs_mean = np.mean(np.abs(resid_traces), axis=2)        # (trials, iters+1)
    return EstimationSummary(
        theta_true=theta_true,
        final_residuals=resid_traces[:, -1, :],
        mean_abs_curve=abs_mean.mean(axis=0),
        sd_curve=abs_mean.std(axis=0, ddof=1) if n_trials > 1 else np.zeros(abs_mean.shape[1]),
        final_losses=np.array([l for _, l in results]),
    )

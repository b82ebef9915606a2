"""Adam optimizer with bias-corrected moment estimates."""

import numpy as np


class Adam:
    """Adam over a list of parameter arrays.

    Maintains first and second moment estimates m, v per parameter; each step
    applies the bias-corrected update

        param <- param - lr * m_hat / (sqrt(v_hat) + eps)

    with m_hat = m / (1 - beta1^k), v_hat = v / (1 - beta2^k) and the step
    counter k starting at 1.  step() treats its inputs as immutable and
    returns fresh arrays.
    """

    def __init__(self, lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8):
        if not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0:
            raise ValueError(f"betas must lie in [0, 1), got {beta1}, {beta2}")
        if eps <= 0:
            raise ValueError(f"eps must be positive, got {eps}")
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.k = 0
        self.m = None
        self.v = None

    def step(self, params, grads):
        """One update; returns the new parameter arrays."""
        if len(params) != len(grads):
            raise ValueError(f"{len(params)} params but {len(grads)} grads")
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        for p, g, m in zip(params, grads, self.m):
            if p.shape != g.shape or p.shape != m.shape:
                raise ValueError(f"shape mismatch: param {p.shape}, grad {g.shape}")
        self.k += 1
        bc1 = 1.0 - self.beta1**self.k
        bc2 = 1.0 - self.beta2**self.k
        out = []
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            out.append(p - self.lr * m_hat / (np.sqrt(v_hat) + self.eps))
        return out

    def state_arrays(self):
        """Moment arrays and step counter, for checkpointing."""
        return self.k, self.m or [], self.v or []

    def load_state(self, k, m, v):
        self.k = int(k)
        self.m = [np.array(x, dtype=np.float64) for x in m]
        self.v = [np.array(x, dtype=np.float64) for x in v]

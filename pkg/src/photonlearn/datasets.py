"""Supervised dataset generation for surrogate training."""

from dataclasses import dataclass, field

import numpy as np

from .circuit import coincidence, empirical_frequencies, evolve, haar_unitary, sample_counts
from .states import STATE_KINDS, initial_state
from .util import derive_seed, n_lower_cells, pack_lower, unpack_lower

LABEL_MODES = ("exact", "sampled")


@dataclass
class CoincidenceDataset:
    """Phase vectors with their coincidence-distribution labels.

    Targets are stored packed over the lower triangle (row-major, i >= j).
    label_mode "exact" means analytic distributions; "sampled" means
    empirical frequencies from n_shots coincidence events per record.
    """

    n_modes: int
    n_phases: int
    thetas: np.ndarray
    targets: np.ndarray
    state: str = "weak"
    label_mode: str = "exact"
    n_shots: int = 0
    unitary_seed: int = 0

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.thetas.shape != (len(self.targets), self.n_phases):
            raise ValueError(f"thetas shape {self.thetas.shape} inconsistent with targets")
        if self.targets.shape[1] != n_lower_cells(self.n_modes):
            raise ValueError(f"targets have {self.targets.shape[1]} cells, expected {n_lower_cells(self.n_modes)}")
        if self.state not in STATE_KINDS:
            raise ValueError(f"unknown state {self.state!r}")
        if self.label_mode not in LABEL_MODES:
            raise ValueError(f"unknown label mode {self.label_mode!r}")

    def __len__(self):
        return len(self.thetas)

    def target_matrix(self, index):
        return unpack_lower(self.targets[index], self.n_modes)

    def unitary(self):
        """Regenerate the static interferometer from the stored seed."""
        return haar_unitary(self.n_modes, self.unitary_seed)

    def split(self, train_fraction=0.7):
        """Deterministic train/validation split of the (already i.i.d.) records."""
        if not 0.0 < train_fraction < 1.0:
            raise ValueError(f"train fraction must be in (0, 1), got {train_fraction}")
        n_train = max(1, int(round(train_fraction * len(self))))
        n_train = min(n_train, len(self) - 1)
        tr = (self.thetas[:n_train], self.targets[:n_train])
        va = (self.thetas[n_train:], self.targets[n_train:])
        return tr, va


def make_dataset(n_modes, n_phases=6, n_records=10000, state="weak",
                 label_mode="exact", n_shots=1000, unitary_seed=0, theta_seed=0,
                 alpha1=2.0, alpha2=3.0):
    """Generate records by evolving an initial state through a fixed Haar unitary.

    Phases are drawn uniformly from [0, 2pi)^n_phases; labels are the exact
    coincidence distributions or, in "sampled" mode, frequencies from n_shots
    events using a per-record derived seed.  Fully deterministic given the
    seeds.
    """
    if n_records < 2:
        raise ValueError(f"need at least 2 records, got {n_records}")
    if label_mode not in LABEL_MODES:
        raise ValueError(f"unknown label mode {label_mode!r}")
    psi0 = initial_state(state, n_modes, alpha1, alpha2)
    u0 = haar_unitary(n_modes, unitary_seed)
    theta_rng = np.random.default_rng(theta_seed)
    thetas = theta_rng.uniform(0.0, 2.0 * np.pi, size=(n_records, n_phases))
    targets = np.empty((n_records, n_lower_cells(n_modes)))
    for i in range(n_records):
        probs = coincidence(evolve(psi0, u0, thetas[i]))
        if label_mode == "sampled":
            counts = sample_counts(probs, n_shots, derive_seed(theta_seed, "label", i))
            probs = empirical_frequencies(counts)
        targets[i] = pack_lower(probs)
    return CoincidenceDataset(
        n_modes=n_modes,
        n_phases=n_phases,
        thetas=thetas,
        targets=targets,
        state=state,
        label_mode=label_mode,
        n_shots=n_shots if label_mode == "sampled" else 0,
        unitary_seed=unitary_seed,
    )

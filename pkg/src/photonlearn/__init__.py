"""Two-photon interferometer simulation, trainable surrogates, phase estimation."""

from . import autodiff, io
from .circuit import (
    coincidence,
    empirical_frequencies,
    evolve,
    haar_unitary,
    phase_unitary,
    sample_counts,
)
from .datasets import CoincidenceDataset, make_dataset
from .entanglement import rank_statistics, renyi_entropy, schmidt_rank, schmidt_values
from .estimation import ExactCircuitModel, PhaseEstimator, batch_estimate
from .losses import kl_divergence, mean_absolute_error, sampled_kl_floor
from .optim import Adam
from .permanent import (
    MultiPhotonDistribution,
    permanent_loss,
    permanent_naive,
    permanent_ryser,
    photon_distribution,
    two_photon_crosscheck,
)
from .states import (
    coherent_amplitudes,
    fock_pair_state,
    initial_state,
    noon_state,
    symmetrize,
    weak_coherent_state,
)
from .surrogates import (
    QcnnSurrogate,
    QctnSurrogate,
    VanillaSurrogate,
    choose_bond_dim,
    periodic_features,
)

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "CoincidenceDataset",
    "ExactCircuitModel",
    "MultiPhotonDistribution",
    "PhaseEstimator",
    "QcnnSurrogate",
    "QctnSurrogate",
    "VanillaSurrogate",
    "autodiff",
    "batch_estimate",
    "choose_bond_dim",
    "coherent_amplitudes",
    "coincidence",
    "empirical_frequencies",
    "evolve",
    "fock_pair_state",
    "haar_unitary",
    "initial_state",
    "io",
    "kl_divergence",
    "make_dataset",
    "mean_absolute_error",
    "noon_state",
    "periodic_features",
    "permanent_loss",
    "permanent_naive",
    "permanent_ryser",
    "phase_unitary",
    "photon_distribution",
    "rank_statistics",
    "renyi_entropy",
    "sample_counts",
    "sampled_kl_floor",
    "schmidt_rank",
    "schmidt_values",
    "symmetrize",
    "two_photon_crosscheck",
    "weak_coherent_state",
]

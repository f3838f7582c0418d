"""Two-photon-driven Rabi model: phase diagnostics, dressed-basis Lindblad
dynamics, and deep-Q pulse design."""

__version__ = "0.1.0"

from .fock import ModelParams, build_hamiltonian, cavity_ops, coherent_product_state, qubit_ops
from .spectral import (DressedOperator, Spectrum, dressed_operator, eigendecompose,
                       energy_gap, kl_convergence)
from .measures import (WignerGrid, entanglement_witness, observe, partial_transpose,
                       reduced_state, second_order_correlation, wigner,
                       wigner_negativity_average)
from .lindblad import (Dissipation, DissipatorSet, PulseSequence, Trajectory,
                       build_dissipators, lindblad_rhs, propagate, thermal_occupation)
from .control import PulseEnv, TrainConfig, TrainResult, replay_best, train_round
from .dqn import QNetwork, ReplayBuffer, adamw_update, huber_loss, select_action

__all__ = [
    "ModelParams", "build_hamiltonian", "cavity_ops", "coherent_product_state", "qubit_ops",
    "DressedOperator", "Spectrum", "dressed_operator", "eigendecompose", "energy_gap",
    "kl_convergence",
    "WignerGrid", "entanglement_witness", "observe", "partial_transpose", "reduced_state",
    "second_order_correlation", "wigner", "wigner_negativity_average",
    "Dissipation", "DissipatorSet", "PulseSequence", "Trajectory", "build_dissipators",
    "lindblad_rhs", "propagate", "thermal_occupation",
    "PulseEnv", "TrainConfig", "TrainResult", "replay_best", "train_round",
    "QNetwork", "ReplayBuffer", "adamw_update", "huber_loss", "select_action",
]

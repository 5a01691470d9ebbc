"""Entanglement versus maximized quantum Fisher information for two-qubit states."""

from __future__ import annotations

__version__ = "0.1.0"

from .channels import amplitude_damping, channel_sweep, depolarizing, depolarizing_correction, phase_damping
from .entanglement import concurrence, negativity, ree
from .metrology import Generator, mqfi, pauli_product_generator, qfi
from .states import bell_state, gen_hs_random, maximally_mixed, purity, separable_mixture, validate, werner

__all__ = [
    "Generator",
    "amplitude_damping",
    "bell_state",
    "channel_sweep",
    "concurrence",
    "depolarizing",
    "depolarizing_correction",
    "gen_hs_random",
    "maximally_mixed",
    "mqfi",
    "negativity",
    "pauli_product_generator",
    "phase_damping",
    "purity",
    "qfi",
    "ree",
    "separable_mixture",
    "validate",
    "werner",
]

"""Quantum-annealing autoencoder for binary images with a sliding 3x3 filter."""

from .adiabatic import (
    DEFAULT_SCHEDULE,
    IsingProblem,
    Schedule,
    brute_force_ground_state,
    build_adiabatic_circuit,
    classical_energy,
    solve,
)
from .autoencoder import QuantumAutoencoder, TrainConfig, denoise, inject_noise, train_weights
from .convfilter import ConvolutionalQuantumAutoencoder, conv_denoise, train_patch_weights
from .dimred import CouplingReducer, centroid_classify, pca_project, reduce_to_2d

__version__ = "0.1.0"

"""Quasiprobability simulation of noisy circuits by sampling Pauli trajectories."""

__version__ = "0.1.0"

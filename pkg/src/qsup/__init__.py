"""Quantum spectroscopy with undetected photons: simulation, visibility extraction and optimisation."""

__version__ = "0.1.0"

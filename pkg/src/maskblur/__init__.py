"""Simulation and reconstruction for superresolution with coded masks and blur."""

__version__ = "0.1.0"

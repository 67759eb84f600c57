"""Numerical companion for the ground-state energy of dilute Bose gases with exponential interactions."""

__version__ = "0.1.0"

from .potentials import ConvergenceError, LocalizationProfile, ParameterError, PotentialParams  # noqa: E402

__all__ = ["ConvergenceError", "LocalizationProfile", "ParameterError", "PotentialParams", "__version__"]

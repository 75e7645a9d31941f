"""Numerical laboratory for wave trains in FitzHugh-Nagumo-type systems.

Computes and cross-validates the spectral stability and synchronization time
scales of phase- and trigger-wave trains: singular-limit constants, Airy-based
dispersion kernels, Newton-converged wave trains, Floquet-Bloch spectra, and
direct simulations with an ETDRK4 spectral scheme.
"""

__version__ = "0.1.0"

from .errors import FHNLabError  # noqa: F401

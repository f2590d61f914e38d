"""Minimal polynomial phase gates for the GKP code.

Exact synthesis of lexicographically minimal gate polynomials, symplectic
verification of the on-demand noise-biasing circuits, truncated-Fock
simulation of the resulting logical channels, and the closed-form moment /
fault-tolerance-bound machinery they are checked against.
"""

from . import analytic, channel, fock, opcache, polyalg, symplectic

__all__ = ["analytic", "channel", "fock", "opcache", "polyalg", "symplectic"]
__version__ = "0.1.0"

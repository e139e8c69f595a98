"""Damped Kerr dynamics of a trapped electron's cyclotron mode.

The relativistic mass shift turns the cyclotron mode of an electron in a
Penning trap into a Kerr anharmonic oscillator. A short resonant kick
prepares a coherent state |alpha0>, which the Kerr term evolves into a
two-branch superposition after a quarter revival while photon loss at rate
gamma erodes the branch coherence. This package evaluates the exact
analytic Husimi function of that damped evolution, cross-validates it with
an independent master-equation integrator, derives all physical parameters
from trap hardware inputs, and quantifies cat formation and decoherence.
"""

__version__ = "0.1.0"

from . import analysis, analytic_q, errors, fock, lindblad, trap_params  # noqa: F401

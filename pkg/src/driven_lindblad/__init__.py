"""Driven Lindblad dynamics of a periodically dephased qubit.

Superoperator and Bloch representations, adiabatic eigenvalues and exceptional
points, Lie-algebraic (Wei-Norman) propagation and the truncated Floquet
Hamiltonian with its Wannier-Stark ladders.
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .qubit import DrivenQubitParams, adiabatic_eigenvalues, locate_eps, model_spec  # noqa: F401
from .superop import ModelSpec, RateLaw, build_liouvillian  # noqa: F401

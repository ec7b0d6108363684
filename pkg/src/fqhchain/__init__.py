"""Truncated nu = 1/3 thin-torus chain: tilings, ground states and gap bounds."""

from .configspace import OPEN, PERIODIC, Configuration, Lattice
from .hamiltonian import ModelParams

__all__ = ["Configuration", "Lattice", "ModelParams", "OPEN", "PERIODIC"]

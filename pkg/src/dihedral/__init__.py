"""Localised dihedral patterns near a Turing instability.

Matching equations, the continuum limit with a computer-assisted
verification, leading-order profiles and a radial Galerkin solver for
the Swift-Hohenberg equation.
"""

__version__ = "0.1.0"

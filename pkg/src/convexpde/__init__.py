"""Convex and monotone reformulations of nonlinear PDE problems.

Subpackages pair each solver with an independent oracle or invariant
suite: exact discrete optimal transport with dual potentials, a
transport-based isoperimetric chain, a monotone-lifting solver for scalar
conservation laws against a Godunov reference, a pressure maximization
check for incompressible flow, and the augmented Born-Infeld system.
"""

__version__ = "0.1.0"

"""Poincaré-invariant Markovian master equation of a massive scalar particle.

Modules
-------
fockspace     momentum grids, truncated Fock spaces, model generators
gksl          generic GKSL generators, gauge freedom, integration
wickalgebra   Wick expansion of field products and their Heisenberg evolution
quadrature    half-line oscillatory integrals
propagators   commutator functions and microcausality scans
kgsolver      damped Klein-Gordon field equations on a periodic lattice
poincare      translation/boost constraints and invariance checks
cli           command-line front end
"""

__version__ = "0.1.0"

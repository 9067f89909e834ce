"""Spectral stability and phase-mixing tools for the Hartree equation.

The package certifies spectral stability of translation-invariant
equilibria, tabulates the associated Green functions in Fourier space,
evolves the linearized and (on coarse grids) the full nonlinear density
response, and measures phase-mixing decay rates.  See the README for the
module map and the command-line entry point.
"""

__version__ = "0.1.0"

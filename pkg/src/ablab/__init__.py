"""Numerical laboratory for the magnetic Aharonov-Bohm phase.

Modules
-------
quadrature
    Adaptive line and volume integration.
geomfields
    Fields, vector potentials and gauge changes of confined-flux sources.
phase
    Phase difference by line integral, enclosed flux, classical action,
    interaction energy and wavepacket interference.
energy
    Magnetic energy split, toroid energy formulas and the local energy
    balance on sampled fields.
wavepacket
    2D lattice Schroedinger propagation around a flux line.
cli
    ``ablab`` command-line entry point.
"""

__version__ = "0.1.0"

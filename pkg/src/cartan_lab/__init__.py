"""Symbolic toolkit for Cartan structure equations and hyperbolic PDE invariants."""

__version__ = "0.1.0"
SCHEMA = "cartan-lab/1"

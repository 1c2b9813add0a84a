"""Kicked top / kicked rotor chaos simulations at desk and paper scale."""

__version__ = "0.1.0"

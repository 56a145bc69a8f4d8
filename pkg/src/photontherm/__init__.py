"""Photon thermalization by laser-cooled two-level atoms: rates, balance and simulators."""
__version__ = "0.1.0"

"""Proprioceptive terrain mapping: slip, energy, stability and elevation layers on a 2.5D grid."""

__version__ = "0.1.0"

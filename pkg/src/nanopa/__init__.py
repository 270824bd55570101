"""Photoacoustic imaging with dielectric nanoparticles in 2D."""

__version__ = "0.1.0"

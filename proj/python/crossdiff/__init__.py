"""Finite-volume solver for n-species cross-diffusion population systems."""

from ._crossdiff import *  # noqa: F401,F403

__version__ = "0.1.0"

"""Generalized bicharacteristics, control checks and damped waves with Zaremba boundary conditions."""

from . import airy, config, flow, geometry, mgcc, symbol, waves

__version__ = "0.1.0"

__all__ = ["airy", "config", "flow", "geometry", "mgcc", "symbol", "waves", "__version__"]

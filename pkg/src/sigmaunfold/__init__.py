"""Sigma-transforms and hyperbolic unfoldings of singular hypersurfaces."""

__version__ = "0.1.0"

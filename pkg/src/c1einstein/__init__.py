"""Numerical solver and verification suite for cohomogeneity-one Einstein
metrics on closed 4-manifolds and the Hitchin orbifolds."""

__version__ = "0.1.0"

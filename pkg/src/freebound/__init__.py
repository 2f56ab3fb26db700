"""Solvers for implicit free boundary problems."""

from ._backend import NAME as BACKEND

__version__ = "0.1.0"

"""Eternal solutions of the KPZ fixed point: Busemann fields, coloring maps and shock trees.

Two landscape backends are provided: the parabolic kernel, where every quantity
has a closed form, and rescaled exponential last-passage percolation.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

"""
Smoothing-based accelerated inexact proximal point solvers for nonconvex-concave min-max problems.

The version comes from the installed distribution; source trees that were never installed
report 0.0.0.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("aipp-minmax")
except PackageNotFoundError:
    __version__ = "0.0.0"

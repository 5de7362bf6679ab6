"""Distance compression, core-sets and diameter algorithms for planar graphs,
with a synchronous message-passing simulator for the distributed versions."""

from .errors import InputError, PmkError, PropertyViolation
from .planar import PlanarGraph, generate, load, loads

__version__ = "0.1.0"

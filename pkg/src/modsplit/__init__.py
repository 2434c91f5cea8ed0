"""Modular splitting: from a modular invariant to its quantum symmetry algebra,
Ocneanu graph and generalized Dynkin diagrams."""
from __future__ import annotations

__version__ = "0.1.0"

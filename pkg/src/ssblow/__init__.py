"""Symbolic-numeric toolkit for self-similar blow-up ansatz analysis of
the axisymmetric swirl system: exact order-by-order profile equations,
triviality verification, and a desk-scale cylinder-slab solver."""

__version__ = "0.1.0"

"""Finite-stage workbench for relatively complete subalgebras, tight coding and CP+ constructions."""

__version__ = "0.1.0"

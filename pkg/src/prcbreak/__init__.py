"""Cryptanalysis workbench for LDPC pseudorandom codes."""

__version__ = "0.1.0"

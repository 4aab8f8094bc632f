"""Pseudo-spectral solver and verification lab for rotating incompressible
flow in the layer R^2 x T^1 (periodic box surrogate)."""

from rotlayer.spectral import (
    Grid,
    SpectralField,
    SpectralVectorField,
    FieldDecomposition,
)

__all__ = ["Grid", "SpectralField", "SpectralVectorField", "FieldDecomposition"]

__version__ = "0.1.0"

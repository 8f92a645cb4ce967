"""Anisotropic Helmholtz transmission scattering at corners, with blowup diagnostics."""

__version__ = "0.1.0"

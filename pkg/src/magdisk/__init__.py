"""Spectra of the magnetic Schrödinger operator on a disk and eigenvalue-moment bounds."""

__version__ = "0.1.0"

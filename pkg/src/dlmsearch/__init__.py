"""Verifier-guided particle search for discrete denoising sequence models."""

__version__ = "0.1.0"

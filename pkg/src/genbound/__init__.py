"""Generalization-gap laboratory for regularized two-layer GAN objectives."""

__version__ = "0.1.0"

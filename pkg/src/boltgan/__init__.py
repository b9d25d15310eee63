"""Bayes-error bounds, prior-weighted BOLT-GAN training and the exact
oracles used to check them."""

__version__ = "0.1.0"

"""Inference and stability analysis of discrete-time sparse full-order models."""

__version__ = "0.1.0"

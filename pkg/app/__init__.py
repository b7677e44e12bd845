"""Rotation-agnostic image sampling and positive-or-negative rotation augmentation."""

__version__ = "0.1.0"

from .framework import IContrastiveFramework

__all__ = ["IContrastiveFramework"]

"""Utility functions shared across the pipeline."""

from .seeding import make_generator, seed_everything, worker_init_fn

__all__ = ["make_generator", "seed_everything", "worker_init_fn"]

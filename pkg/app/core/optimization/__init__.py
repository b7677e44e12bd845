from .schedules import build_optimizer, build_scheduler, lr_factor

__all__ = ["build_optimizer", "build_scheduler", "lr_factor"]

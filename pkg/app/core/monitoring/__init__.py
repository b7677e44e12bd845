from .training_monitor import TrainingMonitor

__all__ = ["TrainingMonitor"]

"""Neural network building blocks."""
from .encoders import ConvEncoder, MLPHead, ResNetEncoder, build_encoder
from .rotation_predictor import RotationPredictor

__all__ = ["ConvEncoder", "MLPHead", "ResNetEncoder", "build_encoder", "RotationPredictor"]

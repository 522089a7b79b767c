from .layers import (
    Conv2d,
    ConvTranspose2d,
    GlobalAvgPool,
    Linear,
    ParamStore,
    ReLU,
    Sequential,
    Sigmoid,
)
from .models import (
    PROJECTION_DIM,
    ClassifierHead,
    DecoderModel,
    EncoderConfig,
    EncoderModel,
    ProbeHead,
    ProjectionHead,
)
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .gradcheck import gradient_check

__all__ = [
    "Conv2d",
    "ConvTranspose2d",
    "GlobalAvgPool",
    "Linear",
    "ParamStore",
    "ReLU",
    "Sequential",
    "Sigmoid",
    "PROJECTION_DIM",
    "ClassifierHead",
    "DecoderModel",
    "EncoderConfig",
    "EncoderModel",
    "ProbeHead",
    "ProjectionHead",
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "gradient_check",
]

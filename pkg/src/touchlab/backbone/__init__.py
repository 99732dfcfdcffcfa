from .conv import conv2d, flatten, maxpool2
from .encoder import (
    CHECKPOINT_KIND,
    ConvEncoder,
    EncoderSpec,
    Encoding,
    pretrain_frozen_encoder,
)

__all__ = [
    "CHECKPOINT_KIND",
    "ConvEncoder",
    "EncoderSpec",
    "Encoding",
    "conv2d",
    "flatten",
    "maxpool2",
    "pretrain_frozen_encoder",
]

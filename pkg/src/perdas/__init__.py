"""
Perdas contrastivas (global e local), oráculos e perda de segmentação.
"""

from .contrastiva import (
    LossConfig,
    cosine_sim,
    extrair_regioes,
    global_loss,
    global_pair_loss,
    local_loss,
    local_pair_loss,
)
from .oraculo import oraculo_global, oraculo_local
from .segmentacao import segmentation_loss

__all__ = [
    "LossConfig",
    "cosine_sim",
    "extrair_regioes",
    "global_loss",
    "global_pair_loss",
    "local_loss",
    "local_pair_loss",
    "oraculo_global",
    "oraculo_local",
    "segmentation_loss",
]

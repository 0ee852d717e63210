"""
Rede encoder-decoder, armazém de parâmetros, checkpoints e verificação de gradientes.
"""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .gradcheck import RelatorioGradiente, grad_check, suite_gradientes
from .parametros import GRUPOS, ParameterStore
from .unet import RedeUNet

__all__ = [
    "Checkpoint",
    "GRUPOS",
    "ParameterStore",
    "RedeUNet",
    "RelatorioGradiente",
    "grad_check",
    "load_checkpoint",
    "save_checkpoint",
    "suite_gradientes",
]

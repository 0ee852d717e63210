"""
Perda de segmentação do ajuste fino: 0.5 * entropia cruzada + 0.5 * (1 - Dice suave).
"""

import torch
import torch.nn.functional as F

from ..config.constantes import SUAVIZACAO_DICE
from ..erros import ErroDados


def _alvo_suave(alvo: torch.Tensor, num_classes: int) -> torch.Tensor:
    if alvo.dim() == 3:
        if alvo.numel() and int(alvo.max()) >= num_classes:
            raise ErroDados(f"Rotulo {int(alvo.max())} excede num_classes={num_classes}")
        return F.one_hot(alvo.long(), num_classes).permute(0, 3, 1, 2).to(torch.get_default_dtype())
    return alvo


def dice_suave(probabilidades: torch.Tensor, alvo: torch.Tensor) -> torch.Tensor:
    """Dice suave por classe, somando sobre (N, H, W), com suavização 1."""
    intersecao = (probabilidades * alvo).sum(dim=(0, 2, 3))
    denominador = probabilidades.sum(dim=(0, 2, 3)) + alvo.sum(dim=(0, 2, 3))
    return (2 * intersecao + SUAVIZACAO_DICE) / (denominador + SUAVIZACAO_DICE)


def segmentation_loss(logits: torch.Tensor, alvo: torch.Tensor) -> torch.Tensor:
    """
    Args:
        logits: B x C x H x W
        alvo: B x H x W inteiro ou B x C x H x W suave (Mixup)

    O Dice é a média sobre as classes de primeiro plano (1..C-1).
    """
    num_classes = logits.shape[1]
    alvo = _alvo_suave(alvo, num_classes).to(logits.dtype)
    log_prob = F.log_softmax(logits, dim=1)
    entropia = -(alvo * log_prob).sum(dim=1).mean()
    dice = dice_suave(log_prob.exp(), alvo)[1:].mean()
    return 0.5 * entropia + 0.5 * (1.0 - dice)

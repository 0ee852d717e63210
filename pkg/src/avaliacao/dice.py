"""
Coeficiente de Dice e avaliação de volumes de teste.

DSC = 2|A ∩ B| / (|A| + |B|); classe ausente nos dois mapas vale 1.0.
O DSC de cada volume é calculado sobre a união 3D das predições fatia a
fatia; o relatório faz a média entre volumes e depois entre as classes de
primeiro plano.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from ..config.constantes import MensagensErro
from ..erros import ErroDados, ErroParametro
from ..rede.checkpoint import Checkpoint, rede_de_checkpoint
from ..rede.unet import RedeUNet
from ..volumes.volume import Volume


Preditor = Callable[[Volume], np.ndarray]


def dice(pred: np.ndarray, gt: np.ndarray, class_id: int) -> float:
    """
    Raises:
        ErroParametro: formas diferentes
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ErroParametro(f"Dice com formas diferentes: {pred.shape} e {gt.shape}")
    a = pred == class_id
    b = gt == class_id
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.logical_and(a, b).sum()) / total


@dataclass(frozen=True)
class DiceReport:
    """
    por_classe: DSC médio entre volumes para as classes 1..C-1;
    por_volume: (id, DSC por classe) de cada volume.
    """

    por_classe: Tuple[float, ...]
    por_volume: Tuple[Tuple[str, Tuple[float, ...]], ...]
    semente: Optional[int] = None

    @property
    def media(self) -> float:
        return float(np.mean(self.por_classe)) if self.por_classe else float("nan")


def prever_volume(rede: RedeUNet, volume: Volume, dtype: torch.dtype = torch.float32) -> np.ndarray:
    """Inferência fatia a fatia com argmax sobre os logits (D x H x W)."""
    estava_treinando = rede.training
    rede.eval()
    with torch.no_grad():
        x = torch.from_numpy(np.array(volume.voxels)).to(dtype).unsqueeze(1)
        logits = rede.seg_forward(x)
    rede.train(estava_treinando)
    return logits.argmax(dim=1).numpy().astype(np.uint8)


def _preditor(modelo: Union[Checkpoint, RedeUNet, Preditor], dtype: torch.dtype) -> Preditor:
    if isinstance(modelo, Checkpoint):
        modelo = rede_de_checkpoint(modelo, dtype)
    if isinstance(modelo, RedeUNet):
        rede = modelo
        return lambda volume: prever_volume(rede, volume, dtype)
    return modelo


def evaluate(
    modelo: Union[Checkpoint, RedeUNet, Preditor],
    volumes: Sequence[Volume],
    num_classes: int,
    semente: Optional[int] = None,
    dtype: torch.dtype = torch.float32,
) -> DiceReport:
    """
    Args:
        modelo: Checkpoint, rede ou função volume -> mapa de rótulos D x H x W

    Raises:
        ErroDados: volume de teste sem rótulos ou com classe >= num_classes
    """
    if not volumes:
        raise ErroDados("Nenhum volume para avaliar")
    prever = _preditor(modelo, dtype)
    por_volume: List[Tuple[str, Tuple[float, ...]]] = []
    for volume in volumes:
        if not volume.tem_rotulos:
            raise ErroDados(f"Volume de teste '{volume.id}' sem rotulos")
        maior = int(volume.labels.max()) if volume.labels.size else 0
        if maior >= num_classes:
            raise ErroDados(
                MensagensErro.CLASSES_EXCEDENTES.format(rotulo=maior, num_classes=num_classes, id=volume.id)
            )
        pred = prever(volume)
        por_volume.append(
            (volume.id, tuple(dice(pred, volume.labels, c) for c in range(1, num_classes)))
        )
    por_classe = tuple(float(np.mean([dsc[c] for _id, dsc in por_volume])) for c in range(num_classes - 1))
    return DiceReport(por_classe=por_classe, por_volume=tuple(por_volume), semente=semente)


def formatar_relatorio(relatorio: DiceReport) -> str:
    linhas = [f"DSC medio (primeiro plano): {relatorio.media:.4f}"]
    for c, valor in enumerate(relatorio.por_classe, start=1):
        linhas.append(f"  classe {c}: {valor:.4f}")
    for id_volume, valores in relatorio.por_volume:
        linhas.append(f"  {id_volume}: " + " ".join(f"{v:.4f}" for v in valores))
    return "\n".join(linhas)

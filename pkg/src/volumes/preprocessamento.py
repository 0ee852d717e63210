"""
Pré-processamento de volumes: normalização por percentis, reamostragem no plano
e recorte/preenchimento centralizado.
"""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np
from PIL import Image

from ..config.constantes import MensagensErro
from ..erros import ErroConfiguracao, ErroVolumeDegenerado
from .volume import Volume


PERCENTIL_INFERIOR = 1.0
PERCENTIL_SUPERIOR = 99.0


def normalize_volume(v: Volume) -> Volume:
    """
    Normalização min-max robusta sobre o volume 3D inteiro.

    saída = (x - p1) / (p99 - p1), recortada em [0, 1]. Os percentis usam
    interpolação linear entre estatísticas de ordem (padrão da numpy).

    Raises:
        ErroVolumeDegenerado: p99 == p1
    """
    dados = v.voxels.astype(np.float64)
    p1, p99 = np.percentile(dados, [PERCENTIL_INFERIOR, PERCENTIL_SUPERIOR])
    if p99 <= p1:
        raise ErroVolumeDegenerado(MensagensErro.VOLUME_DEGENERADO.format(id=v.id, valor=float(p1)))
    normalizado = np.clip((dados - p1) / (p99 - p1), 0.0, 1.0)
    return v.com_voxels(normalizado.astype(np.float32), v.labels)


def _tamanho_reamostrado(tamanho: int, espacamento: float, alvo: float) -> int:
    return max(1, int(round(tamanho * espacamento / alvo)))


def _reamostrar_fatia(fatia: np.ndarray, novo_hw: Tuple[int, int], rotulo: bool) -> np.ndarray:
    altura, largura = novo_hw
    if rotulo:
        imagem = Image.fromarray(fatia.astype(np.uint8))
        return np.asarray(imagem.resize((largura, altura), resample=Image.Resampling.NEAREST))
    imagem = Image.fromarray(fatia.astype(np.float32))
    return np.asarray(imagem.resize((largura, altura), resample=Image.Resampling.BILINEAR))


def _recortar_ou_preencher(arr: np.ndarray, alvo: Tuple[int, int]) -> np.ndarray:
    """Recorte centralizado ou preenchimento simétrico com zeros nos eixos H e W."""
    saida = arr
    for eixo, tamanho_alvo in ((1, alvo[0]), (2, alvo[1])):
        atual = saida.shape[eixo]
        if atual > tamanho_alvo:
            ini = (atual - tamanho_alvo) // 2
            saida = np.take(saida, np.arange(ini, ini + tamanho_alvo), axis=eixo)
        elif atual < tamanho_alvo:
            total = tamanho_alvo - atual
            antes = total // 2
            largura = [(0, 0)] * saida.ndim
            largura[eixo] = (antes, total - antes)
            saida = np.pad(saida, largura, mode="constant", constant_values=0)
    return saida


def resample_and_pad(
    v: Volume,
    target_spacing: Sequence[float],
    target_size: Sequence[int],
) -> Volume:
    """
    Reamostra cada fatia para o espaçamento alvo e ajusta ao tamanho alvo.

    Voxels com interpolação bilinear e rótulos com vizinho mais próximo, apenas
    no plano (o eixo das fatias não é tocado). Quando espaçamento e tamanho já
    coincidem com o alvo, os voxels saem idênticos bit a bit.

    Raises:
        ErroConfiguracao: espaçamento ou tamanho alvo não positivos
    """
    if len(target_spacing) != 2 or min(target_spacing) <= 0:
        raise ErroConfiguracao(f"target_spacing invalido: {tuple(target_spacing)}")
    if len(target_size) != 2 or min(target_size) < 1:
        raise ErroConfiguracao(f"target_size invalido: {tuple(target_size)}")

    alvo_hw = (int(target_size[0]), int(target_size[1]))
    _d, h, w = v.forma
    _s_d, s_h, s_w = v.spacing
    novo_hw = (
        _tamanho_reamostrado(h, s_h, float(target_spacing[0])),
        _tamanho_reamostrado(w, s_w, float(target_spacing[1])),
    )

    voxels = v.voxels
    labels = v.labels
    if novo_hw != (h, w):
        voxels = np.stack([_reamostrar_fatia(f, novo_hw, rotulo=False) for f in voxels])
        if labels is not None:
            labels = np.stack([_reamostrar_fatia(f, novo_hw, rotulo=True) for f in labels])

    voxels = _recortar_ou_preencher(voxels, alvo_hw)
    if labels is not None:
        labels = _recortar_ou_preencher(labels, alvo_hw)

    return Volume(
        id=v.id,
        voxels=voxels,
        spacing=(v.spacing[0], float(target_spacing[0]), float(target_spacing[1])),
        labels=labels,
    )

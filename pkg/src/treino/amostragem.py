"""
Montagem dos lotes de cada estágio a partir dos volumes e dos planos de pares.

Toda a aleatoriedade vem de um único np.random.Generator por estágio, na
ordem: plano, transformações, grade de regiões.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config.constantes import MensagensErro
from ..config.experimento import ExperimentConfig
from ..erros import ErroConfiguracao, ErroDados
from ..pares.estrategias import (
    BatchItem,
    BatchPlan,
    RegionPlan,
    compose_global_GD,
    compose_global_GDminus,
    compose_global_GR,
    compose_local_LD,
    compose_local_LR,
    make_region_grid,
)
from ..transformacoes.familia import (
    TransformFamily,
    apply_transform,
    mixup_lote,
    one_hot,
    sample_transform_pair,
)
from ..volumes.volume import Volume, partition_volume


def gerador_do_estagio(semente: int, estagio: str) -> np.random.Generator:
    """Gerador PCG64 independente por (semente, estágio)."""
    codigo = int.from_bytes(estagio.encode("utf-8")[:8].ljust(8, b"\0"), "little")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(semente), codigo])))


def fatia_do_item(volumes: Sequence[Volume], item: BatchItem, S: Optional[int]) -> np.ndarray:
    """Fatia 2D de um item do plano (posição relativa à partição, quando houver)."""
    volume = volumes[item.volume]
    if item.particao is None:
        return volume.voxels[item.fatia]
    return volume.fatias_da_particao(partition_volume(volume.num_fatias, S), item.particao)[item.fatia]


def verificar_forma_entrada(volumes: Sequence[Volume], input_size: Tuple[int, int]) -> None:
    for volume in volumes:
        if tuple(volume.forma[1:]) != tuple(input_size):
            raise ErroConfiguracao(
                f"Volume '{volume.id}' com fatias {volume.forma[1:]}; a rede espera {tuple(input_size)}"
            )


# ============================================================================
# LOTE GLOBAL
# ============================================================================


def plano_global(cfg: ExperimentConfig, volumes: Sequence[Volume], rng: np.random.Generator) -> BatchPlan:
    num_fatias = [v.num_fatias for v in volumes]
    if cfg.global_strategy == "GR":
        return compose_global_GR(cfg.imagens_por_lote_gr(), rng, num_fatias)
    m = cfg.volumes_por_lote()
    if m > len(volumes):
        raise ErroConfiguracao(MensagensErro.GD_POUCOS_VOLUMES.format(m=m, disponiveis=len(volumes)))
    if cfg.global_strategy == "GDminus":
        return compose_global_GDminus(m, cfg.S, rng, num_fatias)
    return compose_global_GD(m, cfg.S, rng, num_fatias)


def montar_lote_global(
    volumes: Sequence[Volume],
    plano: BatchPlan,
    familia: TransformFamily,
    rng: np.random.Generator,
    S: Optional[int],
) -> np.ndarray:
    """
    Imagens do lote na ordem dos itens do plano (n_itens x H x W).

    Cada fatia sorteada recebe um par (t~, t^): a variante tilde usa t~, a
    hat usa t^ e a orig fica sem transformação.
    """
    pares: Dict[Tuple[int, Optional[int], int], tuple] = {}
    imagens: List[np.ndarray] = []
    for item in plano.itens:
        fatia = fatia_do_item(volumes, item, S)
        if item.variante == "orig":
            imagens.append(np.array(fatia, dtype=np.float32))
            continue
        chave = (item.volume, item.particao, item.fatia)
        if chave not in pares:
            pares[chave] = sample_transform_pair(familia, rng, fatia.shape)
        t_tilde, t_hat = pares[chave]
        t = t_tilde if item.variante == "tilde" else t_hat
        imagens.append(apply_transform(fatia, t)[0])
    return np.stack(imagens).astype(np.float32)


# ============================================================================
# LOTE LOCAL
# ============================================================================


@dataclass(frozen=True)
class LoteLocal:
    plano: RegionPlan
    mapas: np.ndarray          # n_mapas x H x W, na ordem dos ids de mapa do plano


def montar_lote_local(
    cfg: ExperimentConfig,
    volumes: Sequence[Volume],
    familia: TransformFamily,
    rng: np.random.Generator,
    forma_mapa: Tuple[int, int],
    canais: int,
) -> LoteLocal:
    """
    Conjunto X de imagens e plano de regiões.

    L^R: batch_images // 2 fatias quaisquer, mapas (tilde, hat) por imagem.
    L^D: uma fatia por partição de m volumes (mesma amostragem de G^D),
    mapas (orig, tilde, hat) por imagem.

    Raises:
        ErroConfiguracao: estratégia local 'none' ou L^D sem pares entre volumes
    """
    num_fatias = [v.num_fatias for v in volumes]
    if cfg.local_strategy == "LR":
        base = compose_global_GR(cfg.imagens_por_lote_gr(), rng, num_fatias)
        itens = [item for item in base.itens if item.variante == "tilde"]
        S: Optional[int] = None
    elif cfg.local_strategy == "LD":
        m = cfg.volumes_por_lote()
        if m > len(volumes):
            raise ErroConfiguracao(MensagensErro.GD_POUCOS_VOLUMES.format(m=m, disponiveis=len(volumes)))
        base = compose_global_GDminus(m, cfg.S, rng, num_fatias)
        itens = [item for item in base.itens if item.variante == "orig"]
        S = cfg.S
    else:
        raise ErroConfiguracao(f"Estrategia local '{cfg.local_strategy}' nao treina o decoder")

    mapas: List[np.ndarray] = []
    for item in itens:
        fatia = fatia_do_item(volumes, item, S)
        t_tilde, t_hat = sample_transform_pair(familia, rng, fatia.shape)
        if cfg.local_strategy == "LD":
            mapas.append(np.array(fatia, dtype=np.float32))
        mapas.append(apply_transform(fatia, t_tilde)[0])
        mapas.append(apply_transform(fatia, t_hat)[0])

    grade = make_region_grid(forma_mapa[0], forma_mapa[1], canais, cfg.K, cfg.A, rng)
    if cfg.local_strategy == "LR":
        plano = compose_local_LR(len(itens), grade, K=cfg.K, estrito=cfg.region_negatives_strict)
    else:
        plano = compose_local_LD(
            [(item.volume, item.particao) for item in itens],
            grade,
            K=cfg.K,
            estrito=cfg.region_negatives_strict,
        )
    return LoteLocal(plano=plano, mapas=np.stack(mapas).astype(np.float32))


# ============================================================================
# LOTE DE SEGMENTAÇÃO
# ============================================================================


def verificar_rotulos(volumes: Sequence[Volume], num_classes: int) -> None:
    """
    Raises:
        ErroDados: volume sem rótulos ou com classe >= num_classes
    """
    for volume in volumes:
        if not volume.tem_rotulos:
            raise ErroDados(f"Volume '{volume.id}' sem rotulos")
        maior = int(volume.labels.max()) if volume.labels.size else 0
        if maior >= num_classes:
            raise ErroDados(
                MensagensErro.CLASSES_EXCEDENTES.format(rotulo=maior, num_classes=num_classes, id=volume.id)
            )


def montar_lote_segmentacao(
    volumes: Sequence[Volume],
    tamanho: int,
    familia: TransformFamily,
    rng: np.random.Generator,
    num_classes: int,
    mixup_alpha: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Fatias sorteadas uniformemente entre todas as fatias de X_tr, com aumento.

    Returns:
        (imagens B x H x W, rótulos B x H x W inteiros) ou, com Mixup,
        (imagens, rótulos suaves B x C x H x W)
    """
    num_fatias = np.array([v.num_fatias for v in volumes])
    inicios = np.concatenate([[0], np.cumsum(num_fatias)])
    globais = rng.integers(0, int(inicios[-1]), size=tamanho)
    imagens: List[np.ndarray] = []
    rotulos: List[np.ndarray] = []
    for g in globais:
        i = int(np.searchsorted(inicios, g, side="right") - 1)
        z = int(g - inicios[i])
        t, _outro = sample_transform_pair(familia, rng, volumes[i].forma[1:])
        img, rot = apply_transform(volumes[i].voxels[z], t, volumes[i].labels[z])
        imagens.append(img)
        rotulos.append(rot)
    x = np.stack(imagens).astype(np.float32)
    y = np.stack(rotulos).astype(np.int64)
    if mixup_alpha is None:
        return x, y
    x, y_suave, _lam = mixup_lote(x, one_hot(y, num_classes), mixup_alpha, rng)
    return x, y_suave.astype(np.float32)

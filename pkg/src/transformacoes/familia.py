"""
Família de transformações para pares contrastivos, aumentos de ajuste fino e Mixup.

Estágio global: recorte com redimensionamento, flips, rotação de 90 graus,
brilho e contraste. Estágio local: apenas intensidade (brilho e contraste).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from PIL import Image

from ..erros import ErroConfiguracao, ErroDados, ErroParametro


# ============================================================================
# TIPOS E FAIXAS PADRÃO
# ============================================================================

TIPOS_ESPACIAIS = ("crop_resize", "flip_h", "flip_v", "rotate90")
TIPOS_INTENSIDADE = ("brightness", "contrast")
TIPOS_VALIDOS = TIPOS_ESPACIAIS + TIPOS_INTENSIDADE + ("compose",)

MODOS_FAMILIA = ("global_stage", "local_stage", "finetune_aug")

AREA_RECORTE_GLOBAL = (0.8, 1.0)
AREA_RECORTE_FINETUNE = (0.7, 1.0)
PROBABILIDADE_FLIP = 0.5
FAIXA_BRILHO = (-0.2, 0.2)
FAIXA_CONTRASTE = (0.8, 1.2)
ALPHA_MIXUP_PADRAO = 0.2


@dataclass(frozen=True)
class TransformParams:
    """
    Parâmetros de uma transformação.

    caixa: (y0, x0, y1, x1) em pixels, semiaberta, para crop_resize.
    k: quartos de volta para rotate90. b: deslocamento de brilho.
    c: fator de contraste. filhos: ordem de aplicação de um compose.
    """

    kind: str
    caixa: Optional[Tuple[int, int, int, int]] = None
    k: int = 0
    b: float = 0.0
    c: float = 1.0
    filhos: Tuple["TransformParams", ...] = ()
    rng_seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in TIPOS_VALIDOS:
            raise ErroParametro(f"Tipo de transformacao desconhecido: {self.kind}")
        if self.kind == "crop_resize" and self.caixa is None:
            raise ErroParametro("crop_resize exige caixa (y0, x0, y1, x1)")
        if self.kind == "rotate90" and self.k not in (0, 1, 2, 3):
            raise ErroParametro(f"rotate90 exige k em 0..3; recebido {self.k}")
        if self.kind == "brightness" and abs(self.b) > 1:
            raise ErroParametro(f"Brilho |b| <= 1; recebido {self.b}")
        if self.kind == "contrast" and self.c <= 0:
            raise ErroParametro(f"Contraste c > 0; recebido {self.c}")
        if self.kind != "compose" and self.filhos:
            raise ErroParametro(f"Somente compose aceita filhos (tipo {self.kind})")

    def folhas(self) -> Tuple["TransformParams", ...]:
        """Transformações elementares na ordem de aplicação."""
        if self.kind != "compose":
            return (self,)
        return tuple(f for filho in self.filhos for f in filho.folhas())

    @property
    def somente_intensidade(self) -> bool:
        return all(f.kind in TIPOS_INTENSIDADE for f in self.folhas())


def identidade() -> TransformParams:
    return TransformParams(kind="compose")


@dataclass(frozen=True)
class TransformFamily:
    mode: str
    kinds: Tuple[str, ...]
    area_recorte: Tuple[float, float] = AREA_RECORTE_GLOBAL
    prob_flip: float = PROBABILIDADE_FLIP
    rotacoes: Tuple[int, ...] = (0, 1, 2, 3)
    brilho: Tuple[float, float] = FAIXA_BRILHO
    contraste: Tuple[float, float] = FAIXA_CONTRASTE

    def __post_init__(self) -> None:
        if self.mode not in MODOS_FAMILIA:
            raise ErroConfiguracao(f"Modo de familia desconhecido: {self.mode}")
        if not self.kinds:
            raise ErroConfiguracao("Familia de transformacoes vazia")
        desconhecidos = [k for k in self.kinds if k not in TIPOS_ESPACIAIS + TIPOS_INTENSIDADE]
        if desconhecidos:
            raise ErroConfiguracao(f"Tipos desconhecidos na familia: {desconhecidos}")
        if self.mode == "local_stage":
            espaciais = [k for k in self.kinds if k not in TIPOS_INTENSIDADE]
            if espaciais:
                raise ErroConfiguracao(
                    f"Familia do estagio local aceita apenas intensidade; recebido {espaciais}"
                )
        if not 0 < self.area_recorte[0] <= self.area_recorte[1] <= 1:
            raise ErroConfiguracao(f"area_recorte invalida: {self.area_recorte}")
        if not 0 <= self.prob_flip <= 1:
            raise ErroConfiguracao(f"prob_flip fora de [0, 1]: {self.prob_flip}")
        if any(k not in (0, 1, 2, 3) for k in self.rotacoes) or not self.rotacoes:
            raise ErroConfiguracao(f"rotacoes invalidas: {self.rotacoes}")
        if not -1 <= self.brilho[0] <= self.brilho[1] <= 1:
            raise ErroConfiguracao(f"faixa de brilho invalida: {self.brilho}")
        if not 0 < self.contraste[0] <= self.contraste[1]:
            raise ErroConfiguracao(f"faixa de contraste invalida: {self.contraste}")


def familia_global() -> TransformFamily:
    return TransformFamily(mode="global_stage", kinds=TIPOS_ESPACIAIS + TIPOS_INTENSIDADE)


def familia_local() -> TransformFamily:
    return TransformFamily(mode="local_stage", kinds=TIPOS_INTENSIDADE)


def familia_finetune() -> TransformFamily:
    return TransformFamily(
        mode="finetune_aug",
        kinds=TIPOS_ESPACIAIS + TIPOS_INTENSIDADE,
        area_recorte=AREA_RECORTE_FINETUNE,
    )


# ============================================================================
# AMOSTRAGEM
# ============================================================================


def _amostrar_caixa(familia: TransformFamily, forma: Tuple[int, int], rng: np.random.Generator) -> Tuple[int, int, int, int]:
    altura, largura = forma
    area = rng.uniform(*familia.area_recorte)
    lado = float(np.sqrt(area))
    h_c = min(altura, max(1, int(round(altura * lado))))
    w_c = min(largura, max(1, int(round(largura * lado))))
    y0 = int(rng.integers(0, altura - h_c + 1))
    x0 = int(rng.integers(0, largura - w_c + 1))
    return (y0, x0, y0 + h_c, x0 + w_c)


def _amostrar_um(familia: TransformFamily, forma: Tuple[int, int], rng: np.random.Generator) -> TransformParams:
    semente = int(rng.integers(0, 2 ** 63))
    filhos = []
    kinds = familia.kinds
    if "crop_resize" in kinds:
        filhos.append(TransformParams(kind="crop_resize", caixa=_amostrar_caixa(familia, forma, rng)))
    for tipo in ("flip_h", "flip_v"):
        if tipo in kinds and rng.random() < familia.prob_flip:
            filhos.append(TransformParams(kind=tipo))
    if "rotate90" in kinds:
        k = int(familia.rotacoes[int(rng.integers(0, len(familia.rotacoes)))])
        if forma[0] != forma[1] and k % 2:
            k = (k + 1) % 4
        if k:
            filhos.append(TransformParams(kind="rotate90", k=k))
    if "brightness" in kinds:
        filhos.append(TransformParams(kind="brightness", b=float(rng.uniform(*familia.brilho))))
    if "contrast" in kinds:
        filhos.append(TransformParams(kind="contrast", c=float(rng.uniform(*familia.contraste))))
    return TransformParams(kind="compose", filhos=tuple(filhos), rng_seed=semente)


def sample_transform_pair(
    family: TransformFamily,
    rng: np.random.Generator,
    forma: Tuple[int, int] = (32, 32),
) -> Tuple[TransformParams, TransformParams]:
    """
    Dois sorteios independentes t~, t^ da família.

    Args:
        family: Família de transformações
        rng: Gerador da numpy (o chamador controla o determinismo)
        forma: (H, W) das imagens, usada para sortear a caixa de recorte
    """
    return _amostrar_um(family, forma, rng), _amostrar_um(family, forma, rng)


# ============================================================================
# APLICAÇÃO
# ============================================================================


def _recortar_redimensionar(arr: np.ndarray, caixa: Tuple[int, int, int, int], rotulo: bool) -> np.ndarray:
    altura, largura = arr.shape
    y0, x0, y1, x1 = caixa
    if (y0, x0, y1, x1) == (0, 0, altura, largura):
        return arr.copy()
    if rotulo:
        imagem = Image.fromarray(arr.astype(np.uint8))
        metodo = Image.Resampling.NEAREST
    else:
        imagem = Image.fromarray(arr.astype(np.float32))
        metodo = Image.Resampling.BILINEAR
    saida = imagem.resize((largura, altura), resample=metodo, box=(x0, y0, x1, y1))
    return np.asarray(saida).astype(arr.dtype)


def _aplicar_folha(
    img: np.ndarray, label: Optional[np.ndarray], t: TransformParams
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    if t.kind == "crop_resize":
        altura, largura = img.shape
        y0, x0, y1, x1 = t.caixa
        if not (0 <= y0 < y1 <= altura and 0 <= x0 < x1 <= largura):
            raise ErroParametro(f"Caixa de recorte {t.caixa} fora da imagem {img.shape}")
        img = np.clip(_recortar_redimensionar(img, t.caixa, rotulo=False), 0.0, 1.0).astype(img.dtype)
        if label is not None:
            label = _recortar_redimensionar(label, t.caixa, rotulo=True)
    elif t.kind == "flip_h":
        img = img[:, ::-1].copy()
        label = None if label is None else label[:, ::-1].copy()
    elif t.kind == "flip_v":
        img = img[::-1, :].copy()
        label = None if label is None else label[::-1, :].copy()
    elif t.kind == "rotate90":
        if t.k % 2 and img.shape[0] != img.shape[1]:
            raise ErroParametro(f"rotate90 com k impar exige imagem quadrada; recebido {img.shape}")
        img = np.rot90(img, t.k).copy()
        label = None if label is None else np.rot90(label, t.k).copy()
    elif t.kind == "brightness":
        img = np.clip(img + img.dtype.type(t.b), 0.0, 1.0).astype(img.dtype)
    elif t.kind == "contrast":
        media = img.mean()
        img = np.clip((img - media) * img.dtype.type(t.c) + media, 0.0, 1.0).astype(img.dtype)
    return img, label


def apply_transform(
    img: np.ndarray,
    t: TransformParams,
    label: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Aplica t a uma imagem 2D e, opcionalmente, ao seu mapa de rótulos.

    Transformações espaciais valem igualmente para imagem e rótulo (rótulo por
    vizinho mais próximo); as de intensidade não tocam o rótulo.

    Raises:
        ErroParametro: caixa de recorte fora da imagem ou formas incompatíveis
    """
    if img.ndim != 2:
        raise ErroParametro(f"apply_transform espera imagem 2D; recebido ndim={img.ndim}")
    if label is not None and label.shape != img.shape:
        raise ErroParametro(f"Rotulo {label.shape} e imagem {img.shape} com formas diferentes")
    saida_img, saida_label = img, label
    for folha in t.folhas():
        saida_img, saida_label = _aplicar_folha(saida_img, saida_label, folha)
    if saida_img is img:
        saida_img = img.copy()
    if label is not None and saida_label is label:
        saida_label = label.copy()
    return saida_img, saida_label


# ============================================================================
# MIXUP
# ============================================================================


def mixup(
    x_a: np.ndarray,
    y_a: np.ndarray,
    x_b: np.ndarray,
    y_b: np.ndarray,
    lam: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Combinação convexa de dois exemplos rotulados (rótulos one-hot ou suaves).

    Raises:
        ErroParametro: formas diferentes ou lambda fora de [0, 1]
    """
    if x_a.shape != x_b.shape or y_a.shape != y_b.shape:
        raise ErroParametro(
            f"Mixup com formas diferentes: x {x_a.shape}/{x_b.shape}, y {y_a.shape}/{y_b.shape}"
        )
    if not 0.0 <= lam <= 1.0:
        raise ErroParametro(f"lambda do Mixup fora de [0, 1]: {lam}")
    if lam == 1.0:
        return x_a.copy(), y_a.astype(np.result_type(y_a, np.float32))
    if lam == 0.0:
        return x_b.copy(), y_b.astype(np.result_type(y_b, np.float32))
    x = lam * x_a + (1.0 - lam) * x_b
    y = lam * y_a + (1.0 - lam) * y_b
    return x.astype(x_a.dtype), y


def amostrar_lambda_mixup(alpha: float, rng: np.random.Generator) -> float:
    """lambda ~ Beta(alpha, alpha)."""
    if alpha <= 0:
        raise ErroConfiguracao(f"alpha do Mixup deve ser > 0; recebido {alpha}")
    return float(rng.beta(alpha, alpha))


def mixup_lote(
    imagens: np.ndarray,
    rotulos_one_hot: np.ndarray,
    alpha: float,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Mixup de um lote com uma permutação sorteada de si mesmo.

    Args:
        imagens: B x H x W
        rotulos_one_hot: B x C x H x W

    Returns:
        (imagens, rotulos_suaves, lambda)
    """
    lam = amostrar_lambda_mixup(alpha, rng)
    permutacao = rng.permutation(imagens.shape[0])
    x, y = mixup(imagens, rotulos_one_hot, imagens[permutacao], rotulos_one_hot[permutacao], lam)
    return x, y, lam


def one_hot(rotulos: np.ndarray, num_classes: int) -> np.ndarray:
    """
    Converte rótulos inteiros (..., H, W) em (..., C, H, W) float32.

    Raises:
        ErroDados: rótulo >= num_classes
    """
    rotulos = np.asarray(rotulos)
    if rotulos.size and int(rotulos.max()) >= num_classes:
        raise ErroDados(f"Rotulo {int(rotulos.max())} excede num_classes={num_classes}")
    codificado = np.eye(num_classes, dtype=np.float32)[rotulos.astype(np.int64)]
    return np.moveaxis(codificado, -1, -3)

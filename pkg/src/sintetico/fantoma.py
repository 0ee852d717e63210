"""
Gerador determinístico de volumes sintéticos de "anatomia alinhada".

Cada volume contém num_classes - 1 estruturas elípticas de borda suave,
dispostas num anel em torno do centro da fatia. O raio de cada estrutura segue
um perfil de meio seno ao longo do eixo das fatias e todas derivam juntas na
vertical, de modo que fatias correspondentes de volumes diferentes mostram a
mesma "região anatômica". Entre volumes variam apenas o deslocamento do
centro, a escala e o fator de intensidade, controlados pelos parâmetros de
jitter.

RNG: PCG64 da numpy, com SeedSequence([seed, indice_do_volume]) por volume.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..erros import ErroConfiguracao
from ..sanitizers import sanitizar_identificador
from ..volumes.conjunto import EntradaManifesto, escrever_manifesto
from ..volumes.formato_vol import write_volume
from ..volumes.volume import Volume


# ============================================================================
# PARÂMETROS DO GERADOR
# ============================================================================

INTENSIDADE_FUNDO = 0.1
CONTRASTES_ESTRUTURAS = (0.35, 0.6)    # alternados entre estruturas
RAIO_ANEL = 0.25                        # fração de min(H, W)
OCUPACAO_SETOR = 0.6                    # semi-eixo máximo / meia corda do setor
SEMI_EIXO_MAXIMO = 0.15                 # fração de min(H, W)
SEMI_EIXO_MINIMO_PX = 2.0
RAZAO_EIXOS = 0.75                      # semi-eixo vertical / horizontal
DERIVA_VERTICAL = 0.25                  # deslocamento total ao longo das fatias, fração de H
LARGURA_BORDA = 0.15                    # largura da sigmoide em distância elíptica
PISO_CONTRASTE = 0.05


@dataclass(frozen=True)
class PhantomSpec:
    num_volumes: int
    shape: Tuple[int, int, int] = (12, 32, 32)
    num_classes: int = 3
    seed: int = 0
    inter_subject_jitter: float = 0.1
    intensity_jitter: float = 0.2

    def __post_init__(self) -> None:
        problemas: List[str] = []
        if self.num_volumes < 1:
            problemas.append(f"num_volumes={self.num_volumes} (minimo 1)")
        if len(self.shape) != 3:
            problemas.append(f"shape={self.shape} deve ter 3 eixos (D, H, W)")
        else:
            d, h, w = self.shape
            if d < 4 or h < 16 or w < 16:
                problemas.append(f"shape={self.shape} abaixo do minimo (D >= 4, H >= 16, W >= 16)")
        if self.num_classes < 2:
            problemas.append(f"num_classes={self.num_classes} (minimo 2)")
        if not 0 <= self.seed < 2 ** 64:
            problemas.append(f"seed={self.seed} fora de u64")
        if not 0.0 <= self.inter_subject_jitter <= 0.3:
            problemas.append(f"inter_subject_jitter={self.inter_subject_jitter} fora de [0, 0.3]")
        if not 0.0 <= self.intensity_jitter <= 0.5:
            problemas.append(f"intensity_jitter={self.intensity_jitter} fora de [0, 0.5]")
        if problemas:
            raise ErroConfiguracao("PhantomSpec invalido:\n" + "\n".join(f"- {p}" for p in problemas))
        if self.semi_eixo_base() < SEMI_EIXO_MINIMO_PX:
            raise ErroConfiguracao(
                f"Forma {self.shape} pequena demais para {self.num_classes - 1} estruturas "
                f"(semi-eixo {self.semi_eixo_base():.2f} px < {SEMI_EIXO_MINIMO_PX} px)"
            )

    @property
    def num_estruturas(self) -> int:
        return self.num_classes - 1

    def semi_eixo_base(self) -> float:
        """Semi-eixo horizontal no pico do perfil, limitado pelo setor do anel."""
        lado = float(min(self.shape[1], self.shape[2]))
        if self.num_estruturas == 1:
            return SEMI_EIXO_MAXIMO * lado
        meia_corda = RAIO_ANEL * lado * np.sin(np.pi / self.num_estruturas)
        return float(min(SEMI_EIXO_MAXIMO * lado, OCUPACAO_SETOR * meia_corda))


def perfil_raio(d: int) -> np.ndarray:
    """Perfil de meio seno por fatia: 0.4 + 0.6 sin(pi (z + 0.5) / D)."""
    z = np.arange(d, dtype=np.float64)
    return 0.4 + 0.6 * np.sin(np.pi * (z + 0.5) / d)


def _sigmoide(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def _centros_no_anel(spec: PhantomSpec) -> List[Tuple[float, float]]:
    _d, h, w = spec.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    if spec.num_estruturas == 1:
        return [(cy, cx)]
    raio = RAIO_ANEL * min(h, w)
    centros = []
    for k in range(spec.num_estruturas):
        angulo = 2.0 * np.pi * k / spec.num_estruturas
        centros.append((cy + raio * np.sin(angulo), cx + raio * np.cos(angulo)))
    return centros


def _gerar_volume(spec: PhantomSpec, indice: int) -> Volume:
    d, h, w = spec.shape
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([spec.seed, indice])))

    j = spec.inter_subject_jitter
    deslocamento = rng.uniform(-j, j, size=2) * np.array([h, w], dtype=np.float64)
    escala = rng.uniform(1.0 - j, 1.0 + j)
    fator_intensidade = rng.uniform(1.0 - spec.intensity_jitter, 1.0 + spec.intensity_jitter)

    yy, xx = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    perfil = perfil_raio(d)
    deriva = DERIVA_VERTICAL * h * ((np.arange(d) + 0.5) / d - 0.5)
    semi_x_base = spec.semi_eixo_base() * escala

    voxels = np.full((d, h, w), INTENSIDADE_FUNDO, dtype=np.float64)
    labels = np.zeros((d, h, w), dtype=np.uint8)
    centros = _centros_no_anel(spec)

    for z in range(d):
        semi_x = semi_x_base * perfil[z]
        semi_y = semi_x * RAZAO_EIXOS
        for k, (cy, cx) in enumerate(centros):
            centro_y = cy + deriva[z] + deslocamento[0]
            centro_x = cx + deslocamento[1]
            dist = np.sqrt(((yy - centro_y) / semi_y) ** 2 + ((xx - centro_x) / semi_x) ** 2)
            contraste = CONTRASTES_ESTRUTURAS[k % len(CONTRASTES_ESTRUTURAS)]
            nivel = contraste * (0.7 + 0.3 * perfil[z]) * fator_intensidade
            voxels[z] += nivel * _sigmoide((1.0 - dist) / LARGURA_BORDA)
            labels[z][dist < 1.0] = k + 1

    voxels = np.clip(voxels, 0.0, 1.0).astype(np.float32)
    id_volume = sanitizar_identificador(f"fantoma_{indice:03d}", padrao=f"v{indice}")
    return Volume(id=id_volume, voxels=voxels, spacing=(1.0, 1.0, 1.0), labels=labels)


def generate_dataset(spec: PhantomSpec) -> List[Volume]:
    """
    Gera spec.num_volumes volumes rotulados, determinísticos pela semente.

    Com os dois jitters em zero, todos os volumes são idênticos (exceto o id).
    """
    return [_gerar_volume(spec, i) for i in range(spec.num_volumes)]


def escrever_dataset(
    volumes: Sequence[Volume],
    diretorio: str | Path,
    n_pretrain: int,
    callback_log: Optional[Callable[[str], None]] = None,
) -> Path:
    """
    Grava um .vol por volume e o manifesto com a divisão pretrain/test.

    Os primeiros n_pretrain volumes vão para "pretrain"; o restante para "test".

    Returns:
        Caminho do manifesto
    """
    if not 0 <= n_pretrain <= len(volumes):
        raise ErroConfiguracao(f"n_pretrain={n_pretrain} fora de [0, {len(volumes)}]")
    destino = Path(diretorio)
    destino.mkdir(parents=True, exist_ok=True)
    entradas: List[EntradaManifesto] = []
    for posicao, volume in enumerate(volumes):
        nome = f"{volume.id}.vol"
        write_volume(volume, destino / nome)
        divisao = "pretrain" if posicao < n_pretrain else "test"
        entradas.append(EntradaManifesto(id=volume.id, arquivo=nome, divisao=divisao))
    manifesto = escrever_manifesto(destino, entradas)
    if callback_log:
        callback_log(
            f"[SUCESSO] {len(volumes)} volumes gravados em {destino} "
            f"({n_pretrain} pretrain, {len(volumes) - n_pretrain} test)"
        )
    return manifesto


def correlacao_normalizada(a: np.ndarray, b: np.ndarray) -> float:
    """Correlação cruzada normalizada entre duas fatias (0 se alguma é constante)."""
    a = a.astype(np.float64).ravel() - a.mean()
    b = b.astype(np.float64).ravel() - b.mean()
    denominador = np.sqrt((a * a).sum() * (b * b).sum())
    if denominador == 0:
        return 0.0
    return float((a * b).sum() / denominador)


def medir_alinhamento(volumes: Sequence[Volume]) -> Tuple[float, float]:
    """
    Média da correlação entre fatias correspondentes (k, k) e deslocadas (k, k + D/2)
    de volumes distintos.

    Returns:
        (correlacao_correspondente, correlacao_deslocada)
    """
    correspondentes: List[float] = []
    deslocadas: List[float] = []
    for i, vi in enumerate(volumes):
        for j, vj in enumerate(volumes):
            if i == j:
                continue
            d = vi.num_fatias
            for k in range(d):
                correspondentes.append(correlacao_normalizada(vi.voxels[k], vj.voxels[k]))
                deslocadas.append(correlacao_normalizada(vi.voxels[k], vj.voxels[(k + d // 2) % d]))
    return float(np.mean(correspondentes)), float(np.mean(deslocadas))


def contraste_rotulos(volume: Volume) -> float:
    """
    Menor diferença entre um voxel de primeiro plano e a média do fundo da
    mesma fatia. Deve ficar acima de PISO_CONTRASTE.
    """
    if not volume.tem_rotulos:
        raise ErroConfiguracao(f"Volume '{volume.id}' sem rotulos")
    menor = float("inf")
    for fatia, rotulos in zip(volume.voxels, volume.labels):
        fundo = rotulos == 0
        frente = ~fundo
        if not frente.any() or not fundo.any():
            continue
        media_fundo = float(fatia[fundo].mean())
        menor = min(menor, float(fatia[frente].min()) - media_fundo)
    return menor

"""
Construção dos conjuntos de pares similares e dissimilares.

Global: G^R (aleatória), G^D- (exclui negativos da mesma partição) e G^D
(acrescenta positivos entre volumes na mesma partição).
Local: L^R (regiões da mesma imagem sob duas transformações de intensidade) e
L^D (acrescenta regiões correspondentes de volumes diferentes).

Todas as funções são puras; a aleatoriedade vem do Generator recebido.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..config.constantes import MensagensErro
from ..erros import ErroConfiguracao
from ..volumes.volume import partition_volume


VARIANTES = ("orig", "tilde", "hat")

Celula = Tuple[int, int]
Regiao = Tuple[int, int, int]   # (mapa, u, v)


# ============================================================================
# TIPOS
# ============================================================================


@dataclass(frozen=True)
class BatchItem:
    """
    Uma imagem do lote.

    volume: índice do volume; particao: índice s (None em G^R);
    variante: orig, tilde ou hat; fatia: índice dentro da partição
    (ou dentro do volume quando não há partição).
    """

    volume: int
    particao: Optional[int]
    variante: str
    fatia: int


@dataclass(frozen=True)
class BatchPlan:
    itens: Tuple[BatchItem, ...]
    positivos: Tuple[Tuple[int, int], ...]
    negativos_de: Tuple[Tuple[int, ...], ...]

    def validar(self) -> List[str]:
        problemas: List[str] = []
        n = len(self.itens)
        if len(self.positivos) != len(self.negativos_de):
            problemas.append("positivos e negativos_de com tamanhos diferentes")
        for p, ((a, b), negativos) in enumerate(zip(self.positivos, self.negativos_de)):
            if a == b:
                problemas.append(f"par {p}: itens iguais ({a})")
            if not (0 <= a < n and 0 <= b < n) or any(not 0 <= x < n for x in negativos):
                problemas.append(f"par {p}: indice fora do intervalo")
            if a in negativos or b in negativos:
                problemas.append(f"par {p}: item positivo na propria lista de negativos")
        return problemas


@dataclass(frozen=True)
class MapaInfo:
    """Mapa de características de uma imagem do conjunto X sob uma variante."""

    imagem: int
    variante: str
    volume: Optional[int] = None
    particao: Optional[int] = None


@dataclass(frozen=True)
class RegionPlan:
    grade: Tuple[Celula, ...]
    K: int
    mapas: Tuple[MapaInfo, ...]
    positivos: Tuple[Tuple[Regiao, Regiao], ...]
    negativos_de: Tuple[Tuple[Regiao, ...], ...]
    num_imagens: int

    @property
    def A(self) -> int:
        return len(self.grade)

    def validar(self, W1: int, W2: int) -> List[str]:
        problemas: List[str] = []
        for u, v in self.grade:
            if not (0 <= u and u + self.K <= W1 and 0 <= v and v + self.K <= W2):
                problemas.append(f"regiao ({u}, {v}) fora do mapa {W1}x{W2}")
        if len(set(self.grade)) != len(self.grade):
            problemas.append("grade com regioes repetidas")
        if any(u % self.K or v % self.K for u, v in self.grade):
            problemas.append("grade fora do passo K (regioes sobrepostas)")
        for p, (a, b) in enumerate(self.positivos):
            if a == b:
                problemas.append(f"par {p}: regioes iguais")
            if a in self.negativos_de[p] or b in self.negativos_de[p]:
                problemas.append(f"par {p}: regiao positiva entre os negativos")
        return problemas


# ============================================================================
# ESTRATÉGIAS GLOBAIS
# ============================================================================


def compose_global_GR(
    N: int,
    rng: np.random.Generator,
    num_fatias: Optional[Sequence[int]] = None,
) -> BatchPlan:
    """
    G^R: N imagens sorteadas entre todos os volumes, duas versões transformadas
    de cada; para cada par, os negativos são as 2N - 2 imagens restantes.

    Args:
        N: Número de imagens
        rng: Gerador
        num_fatias: Número de fatias de cada volume. Sem ele, a imagem k é a
            fatia 0 do volume k.

    Raises:
        ErroConfiguracao: N < 2 ou fatias insuficientes
    """
    if N < 2:
        raise ErroConfiguracao(MensagensErro.GR_POUCAS_IMAGENS.format(n=N))

    if num_fatias is None:
        origens = [(k, 0) for k in range(N)]
    else:
        total = int(sum(num_fatias))
        if total < N:
            raise ErroConfiguracao(f"G^R com N={N} imagens, mas so ha {total} fatias")
        inicios = np.cumsum([0] + list(num_fatias))
        escolhidas = np.sort(rng.choice(total, size=N, replace=False))
        origens = []
        for g in escolhidas:
            volume = int(np.searchsorted(inicios, g, side="right") - 1)
            origens.append((volume, int(g - inicios[volume])))

    itens: List[BatchItem] = []
    for volume, fatia in origens:
        itens.append(BatchItem(volume=volume, particao=None, variante="tilde", fatia=fatia))
        itens.append(BatchItem(volume=volume, particao=None, variante="hat", fatia=fatia))

    todos = range(2 * N)
    positivos = tuple((2 * k, 2 * k + 1) for k in range(N))
    negativos = tuple(tuple(x for x in todos if x not in (a, b)) for a, b in positivos)
    return BatchPlan(itens=tuple(itens), positivos=positivos, negativos_de=negativos)


def _itens_por_particao(
    m: int,
    S: int,
    rng: np.random.Generator,
    num_fatias: Optional[Sequence[int]],
) -> Tuple[List[BatchItem], List[int]]:
    """Sorteia m volumes e uma fatia por partição; devolve itens (orig, tilde, hat) e os volumes."""
    if num_fatias is None:
        volumes = list(range(m))
        fatias = {(i, s): 0 for i in volumes for s in range(S)}
    else:
        if m > len(num_fatias):
            raise ErroConfiguracao(MensagensErro.GD_POUCOS_VOLUMES.format(m=m, disponiveis=len(num_fatias)))
        volumes = [int(i) for i in rng.choice(len(num_fatias), size=m, replace=False)]
        fatias = {}
        for i in volumes:
            particao = partition_volume(int(num_fatias[i]), S)
            for s, comprimento in enumerate(particao.comprimentos):
                fatias[(i, s)] = int(rng.integers(0, comprimento))

    itens: List[BatchItem] = []
    for i in volumes:
        for s in range(S):
            for variante in VARIANTES:
                itens.append(BatchItem(volume=i, particao=s, variante=variante, fatia=fatias[(i, s)]))
    return itens, volumes


def _negativos_por_particao(itens: Sequence[BatchItem], s: int) -> Tuple[int, ...]:
    return tuple(x for x, item in enumerate(itens) if item.particao != s)


def _validar_gd(m: int, S: int) -> None:
    if m < 1:
        raise ErroConfiguracao(f"m={m} volumes por lote (minimo 1)")
    if S < 2:
        raise ErroConfiguracao(MensagensErro.GD_POUCAS_PARTICOES.format(s=S))


def compose_global_GDminus(
    m: int,
    S: int,
    rng: np.random.Generator,
    num_fatias: Optional[Sequence[int]] = None,
) -> BatchPlan:
    """
    G^D-: m volumes, uma fatia por partição, cada uma em três versões
    (orig, tilde, hat). Positivos: (x, x~), (x, x^), (x~, x^) por (i, s).
    Negativos de um par da partição s: todos os itens de partições != s.

    Raises:
        ErroConfiguracao: S < 2, m < 1 ou m maior que o número de volumes
    """
    _validar_gd(m, S)
    itens, _volumes = _itens_por_particao(m, S, rng, num_fatias)
    positivos: List[Tuple[int, int]] = []
    negativos: List[Tuple[int, ...]] = []
    for base in range(0, len(itens), 3):
        s = itens[base].particao
        excluidos = _negativos_por_particao(itens, s)
        for a, b in ((base, base + 1), (base, base + 2), (base + 1, base + 2)):
            positivos.append((a, b))
            negativos.append(excluidos)
    return BatchPlan(itens=tuple(itens), positivos=tuple(positivos), negativos_de=tuple(negativos))


def compose_global_GD(
    m: int,
    S: int,
    rng: np.random.Generator,
    num_fatias: Optional[Sequence[int]] = None,
) -> BatchPlan:
    """
    G^D: os pares de G^D- mais, por partição s e por par de volumes (i, j),
    os positivos (x_s^i, x_s^j) e (x~_s^i, x^_s^j). Negativos como em G^D-.
    Consome o gerador exatamente como G^D-, logo G^D(m=1) == G^D-(m=1).
    """
    base = compose_global_GDminus(m, S, rng, num_fatias)
    itens = base.itens
    posicao = {(item.volume, item.particao, item.variante): x for x, item in enumerate(itens)}
    volumes = list(dict.fromkeys(item.volume for item in itens))

    positivos = list(base.positivos)
    negativos = list(base.negativos_de)
    for s in range(S):
        excluidos = _negativos_por_particao(itens, s)
        for i, j in combinations(volumes, 2):
            positivos.append((posicao[(i, s, "orig")], posicao[(j, s, "orig")]))
            negativos.append(excluidos)
            positivos.append((posicao[(i, s, "tilde")], posicao[(j, s, "hat")]))
            negativos.append(excluidos)
    return BatchPlan(itens=itens, positivos=tuple(positivos), negativos_de=tuple(negativos))


# ============================================================================
# GRADE DE REGIÕES
# ============================================================================


def make_region_grid(
    W1: int,
    W2: int,
    C: int,
    K: int,
    A: int,
    rng: np.random.Generator,
) -> List[Celula]:
    """
    A células K x K não sobrepostas da grade regular de passo K.

    Com capacidade exatamente A, todas as células são usadas (ordem por linha);
    caso contrário, A células são sorteadas sem reposição e ordenadas.

    Raises:
        ErroConfiguracao: K inválido ou A acima da capacidade da grade
    """
    if C < 1:
        raise ErroConfiguracao(f"C={C} canais (minimo 1)")
    if K < 1 or K > min(W1, W2):
        raise ErroConfiguracao(MensagensErro.GRADE_K_INVALIDO.format(k=K, w1=W1, w2=W2))
    linhas, colunas = W1 // K, W2 // K
    capacidade = linhas * colunas
    if A < 1 or A > capacidade:
        raise ErroConfiguracao(MensagensErro.GRADE_CAPACIDADE.format(a=A, capacidade=capacidade, k=K))
    if A == capacidade:
        indices = np.arange(capacidade)
    else:
        indices = np.sort(rng.choice(capacidade, size=A, replace=False))
    return [(int(g // colunas) * K, int(g % colunas) * K) for g in indices]


def _celulas_negativas(grade: Sequence[Celula], celula: Celula, estrito: bool) -> List[Celula]:
    u, v = celula
    if estrito:
        return [(a, b) for a, b in grade if a != u and b != v]
    return [(a, b) for a, b in grade if (a, b) != (u, v)]


# ============================================================================
# ESTRATÉGIAS LOCAIS
# ============================================================================


def compose_local_LR(
    num_imagens: int,
    grid: Sequence[Celula],
    K: int = 1,
    estrito: bool = False,
) -> RegionPlan:
    """
    L^R: para cada imagem e célula (u, v), o par (f~(u, v), f^(u, v)).
    Negativos: todas as células != (u, v) de f~ e de f^ da mesma imagem,
    ou seja 2(A - 1). Com estrito=True vale a leitura literal u' != u e v' != v.

    Mapas: 2k = tilde da imagem k, 2k + 1 = hat.
    """
    if num_imagens < 1:
        raise ErroConfiguracao(f"L^R com {num_imagens} imagens (minimo 1)")
    grade = tuple((int(u), int(v)) for u, v in grid)
    mapas: List[MapaInfo] = []
    positivos: List[Tuple[Regiao, Regiao]] = []
    negativos: List[Tuple[Regiao, ...]] = []
    for k in range(num_imagens):
        tilde, hat = 2 * k, 2 * k + 1
        mapas.append(MapaInfo(imagem=k, variante="tilde"))
        mapas.append(MapaInfo(imagem=k, variante="hat"))
        for u, v in grade:
            positivos.append(((tilde, u, v), (hat, u, v)))
            outras = _celulas_negativas(grade, (u, v), estrito)
            negativos.append(tuple((mapa, a, b) for mapa in (tilde, hat) for a, b in outras))
    return RegionPlan(
        grade=grade,
        K=K,
        mapas=tuple(mapas),
        positivos=tuple(positivos),
        negativos_de=tuple(negativos),
        num_imagens=num_imagens,
    )


def compose_local_LD(
    itens: Sequence[Tuple[int, int]],
    grid: Sequence[Celula],
    K: int = 1,
    estrito: bool = False,
) -> RegionPlan:
    """
    L^D: pares de L^R mais, para imagens k, l de volumes diferentes na mesma
    partição, os pares (f_s^i(u, v), f_s^j(u, v)) e (f~_s^i(u, v), f^_s^j(u, v)).
    Negativos de um par entre volumes: as células != (u, v) de
    {f_s^i, f_s^j, f~_s^i, f^_s^j}, ou seja 4(A - 1).

    Args:
        itens: (volume, particao) de cada imagem do conjunto X

    Mapas: 3k = orig da imagem k, 3k + 1 = tilde, 3k + 2 = hat.

    Raises:
        ErroConfiguracao: nenhum par de volumes diferentes compartilha partição
    """
    grade = tuple((int(u), int(v)) for u, v in grid)
    cruzados = [
        (k, l)
        for k, l in combinations(range(len(itens)), 2)
        if itens[k][1] == itens[l][1] and itens[k][0] != itens[l][0]
    ]
    if not cruzados:
        raise ErroConfiguracao(MensagensErro.LD_SEM_PARES)

    mapas: List[MapaInfo] = []
    for k, (volume, particao) in enumerate(itens):
        for variante in VARIANTES:
            mapas.append(MapaInfo(imagem=k, variante=variante, volume=int(volume), particao=int(particao)))

    positivos: List[Tuple[Regiao, Regiao]] = []
    negativos: List[Tuple[Regiao, ...]] = []
    for k in range(len(itens)):
        tilde, hat = 3 * k + 1, 3 * k + 2
        for u, v in grade:
            positivos.append(((tilde, u, v), (hat, u, v)))
            outras = _celulas_negativas(grade, (u, v), estrito)
            negativos.append(tuple((mapa, a, b) for mapa in (tilde, hat) for a, b in outras))

    for k, l in cruzados:
        orig_k, tilde_k = 3 * k, 3 * k + 1
        orig_l, hat_l = 3 * l, 3 * l + 2
        conjunto = (orig_k, orig_l, tilde_k, hat_l)
        for u, v in grade:
            outras = _celulas_negativas(grade, (u, v), estrito)
            lista = tuple((mapa, a, b) for mapa in conjunto for a, b in outras)
            positivos.append(((orig_k, u, v), (orig_l, u, v)))
            negativos.append(lista)
            positivos.append(((tilde_k, u, v), (hat_l, u, v)))
            negativos.append(lista)

    return RegionPlan(
        grade=grade,
        K=K,
        mapas=tuple(mapas),
        positivos=tuple(positivos),
        negativos_de=tuple(negativos),
        num_imagens=len(itens),
    )


# ============================================================================
# DEPURAÇÃO
# ============================================================================


def formatar_plano(plano: BatchPlan | RegionPlan) -> str:
    """Texto legível e estável de um plano (usado por --dump-plan e testes)."""
    linhas: List[str] = []
    if isinstance(plano, BatchPlan):
        linhas.append(f"BatchPlan itens={len(plano.itens)} positivos={len(plano.positivos)}")
        for x, item in enumerate(plano.itens):
            particao = "-" if item.particao is None else str(item.particao)
            linhas.append(f"  item {x}: volume={item.volume} particao={particao} {item.variante} fatia={item.fatia}")
        for (a, b), negativos in zip(plano.positivos, plano.negativos_de):
            linhas.append(f"  par ({a}, {b}) negativos[{len(negativos)}]={list(negativos)}")
        return "\n".join(linhas)

    linhas.append(
        f"RegionPlan A={plano.A} K={plano.K} imagens={plano.num_imagens} "
        f"mapas={len(plano.mapas)} positivos={len(plano.positivos)}"
    )
    linhas.append(f"  grade={list(plano.grade)}")
    for m, info in enumerate(plano.mapas):
        linhas.append(f"  mapa {m}: imagem={info.imagem} {info.variante}")
    for (a, b), negativos in zip(plano.positivos, plano.negativos_de):
        linhas.append(f"  par {a} ~ {b} negativos[{len(negativos)}]")
    return "\n".join(linhas)

"""
Conjunto de volumes em disco: manifesto, carregamento com pré-processamento e
divisões X_pre / X_tr / X_vl / X_ts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..erros import ErroConfiguracao, ErroDados
from .formato_vol import read_volume
from .preprocessamento import normalize_volume, resample_and_pad
from .volume import Volume


NOME_MANIFESTO = "manifesto.tsv"
COLUNAS_MANIFESTO = ("id", "arquivo", "divisao")
DIVISOES_VALIDAS = ("pretrain", "test")


@dataclass(frozen=True)
class EntradaManifesto:
    id: str
    arquivo: str
    divisao: str


def escrever_manifesto(diretorio: str | Path, entradas: Sequence[EntradaManifesto]) -> Path:
    caminho = Path(diretorio) / NOME_MANIFESTO
    with caminho.open("w", encoding="utf-8", newline="") as arquivo:
        escritor = csv.writer(arquivo, delimiter="\t", lineterminator="\n")
        escritor.writerow(COLUNAS_MANIFESTO)
        for entrada in entradas:
            escritor.writerow([entrada.id, entrada.arquivo, entrada.divisao])
    return caminho


def ler_manifesto(diretorio: str | Path) -> List[EntradaManifesto]:
    """
    Raises:
        ErroDados: manifesto ausente, cabeçalho inesperado ou divisão desconhecida
    """
    caminho = Path(diretorio) / NOME_MANIFESTO
    if not caminho.exists():
        raise ErroDados(f"Manifesto nao encontrado: {caminho}")
    entradas: List[EntradaManifesto] = []
    with caminho.open("r", encoding="utf-8", newline="") as arquivo:
        leitor = csv.reader(arquivo, delimiter="\t")
        cabecalho = next(leitor, None)
        if tuple(cabecalho or ()) != COLUNAS_MANIFESTO:
            raise ErroDados(f"Cabecalho do manifesto invalido em {caminho}: {cabecalho}")
        for numero, linha in enumerate(leitor, start=2):
            if not linha:
                continue
            if len(linha) != len(COLUNAS_MANIFESTO):
                raise ErroDados(f"Linha {numero} do manifesto com {len(linha)} colunas")
            id_volume, nome_arquivo, divisao = linha
            if divisao not in DIVISOES_VALIDAS:
                raise ErroDados(f"Linha {numero} do manifesto: divisao desconhecida '{divisao}'")
            entradas.append(EntradaManifesto(id=id_volume, arquivo=nome_arquivo, divisao=divisao))
    return entradas


@dataclass
class ConjuntoVolumes:
    """
    Volumes de pré-treino (X_pre) e de teste (X_ts) já pré-processados.

    X_tr e X_vl são subconjuntos disjuntos de X_pre sorteados por semente.
    """

    pretreino: List[Volume] = field(default_factory=list)
    teste: List[Volume] = field(default_factory=list)

    @classmethod
    def carregar(
        cls,
        diretorio: str | Path,
        target_spacing: Optional[Sequence[float]] = None,
        target_size: Optional[Sequence[int]] = None,
        normalizar: bool = True,
        n_pre: Optional[int] = None,
        n_ts: Optional[int] = None,
        callback_log: Optional[Callable[[str], None]] = None,
    ) -> "ConjuntoVolumes":
        """
        Lê o manifesto e os .vol do diretório, aplicando o pré-processamento.

        Args:
            diretorio: Pasta gerada por gen-data
            target_spacing / target_size: Reamostragem no plano (ambos ou nenhum)
            normalizar: Aplica normalize_volume a cada volume
            n_pre / n_ts: Limites de quantos volumes usar de cada divisão

        Raises:
            ErroDados: manifesto ou arquivos inválidos, ou volumes insuficientes
        """
        log = callback_log or (lambda _msg: None)
        entradas = ler_manifesto(diretorio)
        pretreino: List[Volume] = []
        teste: List[Volume] = []
        for entrada in entradas:
            volume = read_volume(Path(diretorio) / entrada.arquivo, entrada.id)
            if normalizar:
                volume = normalize_volume(volume)
            if target_spacing is not None and target_size is not None:
                volume = resample_and_pad(volume, target_spacing, target_size)
            (pretreino if entrada.divisao == "pretrain" else teste).append(volume)

        if n_pre is not None:
            if len(pretreino) < n_pre:
                raise ErroDados(f"n_pre={n_pre}, mas o manifesto lista {len(pretreino)} volumes de pre-treino")
            pretreino = pretreino[:n_pre]
        if n_ts is not None:
            if len(teste) < n_ts:
                raise ErroDados(f"n_ts={n_ts}, mas o manifesto lista {len(teste)} volumes de teste")
            teste = teste[:n_ts]

        log(f"[INFO] Conjunto carregado: {len(pretreino)} pre-treino, {len(teste)} teste")
        return cls(pretreino=pretreino, teste=teste)

    def dividir_treino_validacao(self, n_tr: int, n_vl: int, semente: int) -> Tuple[List[Volume], List[Volume]]:
        """
        Sorteia X_tr e X_vl disjuntos dentro de X_pre.

        Raises:
            ErroConfiguracao: n_tr + n_vl excede |X_pre|
        """
        if n_tr < 1 or n_vl < 1:
            raise ErroConfiguracao(f"n_tr={n_tr} e n_vl={n_vl} devem ser >= 1")
        if n_tr + n_vl > len(self.pretreino):
            raise ErroConfiguracao(
                f"n_tr + n_vl = {n_tr + n_vl} excede |X_pre| = {len(self.pretreino)}"
            )
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(semente), 0x5EED])))
        ordem = rng.permutation(len(self.pretreino))
        treino = [self.pretreino[i] for i in ordem[:n_tr]]
        validacao = [self.pretreino[i] for i in ordem[n_tr:n_tr + n_vl]]
        return treino, validacao

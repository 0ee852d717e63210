"""
Histórico de treino por estágio (CSV append-only) e seleção de modelo pela validação.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

import numpy as np
import torch


COLUNAS_HISTORICO = ("iteracao", "perda_total", "perda_global", "perda_local", "dsc_validacao")


@dataclass(slots=True)
class RegistroIteracao:
    iteracao: int
    perda_total: float
    perda_global: Optional[float] = None
    perda_local: Optional[float] = None
    dsc_validacao: Optional[float] = None

    def para_linha(self) -> Dict[str, str]:
        linha = {}
        for chave, valor in asdict(self).items():
            if valor is None:
                linha[chave] = ""
            elif isinstance(valor, float):
                linha[chave] = repr(valor)
            else:
                linha[chave] = str(valor)
        return linha


class HistoricoEstagio:
    """
    Registros em memória; com caminho, cada registro também é anexado ao CSV.
    O cabeçalho só é escrito quando o arquivo ainda não existe.
    """

    def __init__(self, estagio: str, caminho_csv: Optional[str | Path] = None):
        self.estagio = estagio
        self.caminho_csv = Path(caminho_csv) if caminho_csv else None
        self.registros: List[RegistroIteracao] = []

    def registrar(self, registro: RegistroIteracao) -> None:
        self.registros.append(registro)
        if self.caminho_csv is None:
            return
        novo = not self.caminho_csv.exists()
        self.caminho_csv.parent.mkdir(parents=True, exist_ok=True)
        with open(self.caminho_csv, "a", encoding="utf-8", newline="") as arquivo:
            escritor = csv.DictWriter(arquivo, fieldnames=COLUNAS_HISTORICO)
            if novo:
                escritor.writeheader()
            escritor.writerow(registro.para_linha())

    def perdas(self) -> np.ndarray:
        return np.array([r.perda_total for r in self.registros], dtype=np.float64)

    def media_janela(self, inicio: bool, tamanho: int = 100) -> float:
        """Média da perda total nas primeiras (inicio=True) ou últimas iterações."""
        perdas = self.perdas()
        if perdas.size == 0:
            return float("nan")
        janela = perdas[:tamanho] if inicio else perdas[-tamanho:]
        return float(janela.mean())

    def validacoes(self) -> List[RegistroIteracao]:
        return [r for r in self.registros if r.dsc_validacao is not None]


def ler_historico_csv(caminho: str | Path) -> List[Dict[str, str]]:
    with open(caminho, "r", encoding="utf-8", newline="") as arquivo:
        return list(csv.DictReader(arquivo))


@dataclass
class SeletorModelo:
    """
    Guarda o estado com o maior DSC de validação; em empate fica o primeiro.
    """

    melhor_dsc: float = float("-inf")
    melhor_iteracao: Optional[int] = None
    melhor_estado: Optional[Dict[str, torch.Tensor]] = field(default=None, repr=False)

    def observar(self, iteracao: int, dsc: float, estado: Mapping[str, torch.Tensor]) -> bool:
        """Devolve True quando o estado observado passa a ser o selecionado."""
        if self.melhor_iteracao is not None and not dsc > self.melhor_dsc:
            return False
        self.melhor_dsc = float(dsc)
        self.melhor_iteracao = int(iteracao)
        self.melhor_estado = {k: v.detach().clone() for k, v in estado.items()}
        return True

    def para_dict(self) -> Dict[str, Any]:
        return {
            "melhor_dsc": self.melhor_dsc,
            "melhor_iteracao": self.melhor_iteracao,
            "melhor_estado": self.melhor_estado,
        }

    @classmethod
    def de_dict(cls, dados: Mapping[str, Any]) -> "SeletorModelo":
        return cls(
            melhor_dsc=float(dados["melhor_dsc"]),
            melhor_iteracao=dados["melhor_iteracao"],
            melhor_estado=dados["melhor_estado"],
        )

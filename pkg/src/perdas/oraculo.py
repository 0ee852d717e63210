"""
Oráculos de referência das perdas contrastivas.

Laços explícitos sobre os conjuntos do plano, avaliação direta das
exponenciais (sem log-sum-exp) em precisão dupla. Servem apenas para conferir
as implementações vetorizadas.
"""

import math
from typing import Sequence

import numpy as np

from ..erros import ErroConfiguracao, ErroNumerico
from ..pares.estrategias import BatchPlan, RegionPlan


def _sim(a: np.ndarray, b: np.ndarray) -> float:
    na = math.sqrt(float(np.dot(a, a)))
    nb = math.sqrt(float(np.dot(b, b)))
    if na == 0.0 or nb == 0.0:
        raise ErroNumerico("Vetor nulo no oraculo")
    return float(np.dot(a, b)) / (na * nb)


def _perda_par(ancora: np.ndarray, positivo: np.ndarray, negativos: Sequence[np.ndarray], tau: float) -> float:
    if len(negativos) == 0:
        raise ErroConfiguracao("Oraculo: par sem negativos")
    numerador = math.exp(_sim(ancora, positivo) / tau)
    denominador = numerador
    for negativo in negativos:
        denominador += math.exp(_sim(ancora, negativo) / tau)
    return -math.log(numerador / denominador)


def oraculo_global(Z, plan: BatchPlan, tau: float) -> float:
    Z = np.asarray(Z, dtype=np.float64)
    total = 0.0
    for (a, b), negativos in zip(plan.positivos, plan.negativos_de):
        vetores_neg = [Z[x] for x in negativos]
        total += _perda_par(Z[a], Z[b], vetores_neg, tau)
        total += _perda_par(Z[b], Z[a], vetores_neg, tau)
    return total / (2 * len(plan.positivos))


def oraculo_local(F, plan: RegionPlan, tau: float, apenas_segundo_mapa: bool = False) -> float:
    F = np.asarray(F, dtype=np.float64)
    K = plan.K

    def regiao(mapa: int, u: int, v: int) -> np.ndarray:
        return F[mapa, :, u:u + K, v:v + K].reshape(-1)

    total = 0.0
    for (ra, rb), negativos in zip(plan.positivos, plan.negativos_de):
        va, vb = regiao(*ra), regiao(*rb)
        neg_ab = [regiao(*r) for r in negativos if not apenas_segundo_mapa or r[0] == rb[0]]
        neg_ba = [regiao(*r) for r in negativos if not apenas_segundo_mapa or r[0] == ra[0]]
        total += _perda_par(va, vb, neg_ab, tau)
        total += _perda_par(vb, va, neg_ba, tau)
    return total / (plan.num_imagens * 2 * plan.A)

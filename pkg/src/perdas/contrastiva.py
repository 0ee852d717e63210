"""
Perdas contrastivas global e local.

Os negativos de cada par vêm das listas explícitas do plano (BatchPlan ou
RegionPlan). As similaridades de cosseno são calculadas uma vez numa matriz
densa e os logits de cada par são reunidos com índices acolchoados e máscara;
a soma é estabilizada com log-sum-exp.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import torch

from ..config.constantes import MensagensErro, TAU_PADRAO
from ..erros import ErroConfiguracao, ErroNumerico
from ..pares.estrategias import BatchPlan, RegionPlan


@dataclass(frozen=True)
class LossConfig:
    """
    tau: temperatura. negativos_apenas_segundo_mapa: leitura literal do
    denominador da perda local (negativos só do mapa do segundo argumento).
    """

    tau: float = TAU_PADRAO
    negativos_apenas_segundo_mapa: bool = False

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ErroConfiguracao(f"tau deve ser > 0; recebido {self.tau}")


def _como_tensor(x) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    return torch.as_tensor(x, dtype=torch.float64)


def _normalizar_linhas(Z: torch.Tensor, contexto: str) -> torch.Tensor:
    normas = torch.linalg.vector_norm(Z, dim=-1, keepdim=True)
    if bool((normas == 0).any()):
        raise ErroNumerico(f"Vetor nulo na similaridade de cosseno ({contexto})")
    return Z / normas


def cosine_sim(a, b) -> torch.Tensor:
    """
    sim(a, b) = a^T b / (|a| |b|).

    Raises:
        ErroNumerico: a ou b é o vetor nulo
    """
    a = _como_tensor(a).reshape(-1)
    b = _como_tensor(b).reshape(-1)
    na = torch.linalg.vector_norm(a)
    nb = torch.linalg.vector_norm(b)
    if float(na) == 0.0 or float(nb) == 0.0:
        raise ErroNumerico("Vetor nulo na similaridade de cosseno")
    return torch.dot(a, b) / (na * nb)


def _perda_de_logits(logit_positivo: torch.Tensor, logits_negativos: torch.Tensor, mascara: torch.Tensor) -> torch.Tensor:
    """-log softmax do positivo contra os negativos válidos (por linha)."""
    preenchido = logits_negativos.masked_fill(~mascara, float("-inf"))
    todos = torch.cat([logit_positivo.unsqueeze(-1), preenchido], dim=-1)
    return torch.logsumexp(todos, dim=-1) - logit_positivo


def global_pair_loss(z_pos_a, z_pos_b, z_negs: Sequence, cfg: LossConfig = LossConfig()) -> torch.Tensor:
    """
    l(a, b) = -log[ e^{sim(a,b)/tau} / (e^{sim(a,b)/tau} + sum_neg e^{sim(a,neg)/tau}) ].

    Os negativos são contrastados com o PRIMEIRO argumento.

    Raises:
        ErroConfiguracao: lista de negativos vazia
        ErroNumerico: vetor nulo
    """
    if len(z_negs) == 0:
        raise ErroConfiguracao(MensagensErro.NEGATIVOS_VAZIOS.format(indice=0))
    a = _como_tensor(z_pos_a).reshape(1, -1)
    b = _como_tensor(z_pos_b).reshape(1, -1)
    negs = torch.stack([_como_tensor(n).reshape(-1) for n in z_negs])
    ua = _normalizar_linhas(a, "ancora")
    ub = _normalizar_linhas(b, "positivo")
    un = _normalizar_linhas(negs, "negativos")
    logit_pos = (ua * ub).sum(-1) / cfg.tau
    logits_neg = (ua @ un.T) / cfg.tau
    mascara = torch.ones_like(logits_neg, dtype=torch.bool)
    return _perda_de_logits(logit_pos, logits_neg, mascara)[0]


def _indices_acolchoados(listas: Sequence[Sequence[int]]) -> Tuple[torch.Tensor, torch.Tensor]:
    largura = max(len(lista) for lista in listas)
    indices = torch.zeros((len(listas), largura), dtype=torch.long)
    mascara = torch.zeros((len(listas), largura), dtype=torch.bool)
    for p, lista in enumerate(listas):
        if len(lista) == 0:
            raise ErroConfiguracao(MensagensErro.NEGATIVOS_VAZIOS.format(indice=p))
        indices[p, : len(lista)] = torch.as_tensor(list(lista), dtype=torch.long)
        mascara[p, : len(lista)] = True
    return indices, mascara


def _perda_simetrizada(
    similaridades: torch.Tensor,
    a: torch.Tensor,
    b: torch.Tensor,
    negativos: torch.Tensor,
    mascara_ab: torch.Tensor,
    mascara_ba: torch.Tensor,
    tau: float,
) -> torch.Tensor:
    """l(a, b) + l(b, a) por par, com as mesmas listas de negativos."""
    logit_ab = similaridades[a, b] / tau
    l_ab = _perda_de_logits(logit_ab, similaridades[a.unsqueeze(-1), negativos] / tau, mascara_ab)
    l_ba = _perda_de_logits(logit_ab, similaridades[b.unsqueeze(-1), negativos] / tau, mascara_ba)
    return l_ab + l_ba


def global_loss(Z, plan: BatchPlan, cfg: LossConfig = LossConfig()) -> torch.Tensor:
    """
    Média, sobre os pares de Lambda+, da perda simetrizada
    (l(a, b) + l(b, a)) / 2, com os negativos de cada par vindos do plano.

    Args:
        Z: Representações (n_itens x dim), uma linha por item do plano

    Raises:
        ErroConfiguracao: par sem negativos ou plano vazio
        ErroNumerico: representação nula
    """
    Z = _como_tensor(Z)
    if Z.shape[0] != len(plan.itens):
        raise ErroConfiguracao(f"{Z.shape[0]} representacoes para {len(plan.itens)} itens do plano")
    if not plan.positivos:
        raise ErroConfiguracao("Plano sem pares positivos")
    U = _normalizar_linhas(Z, "representacoes globais")
    similaridades = U @ U.T
    a = torch.as_tensor([p[0] for p in plan.positivos], dtype=torch.long)
    b = torch.as_tensor([p[1] for p in plan.positivos], dtype=torch.long)
    negativos, mascara = _indices_acolchoados(plan.negativos_de)
    perdas = _perda_simetrizada(similaridades, a, b, negativos, mascara, mascara, cfg.tau)
    return perdas.sum() / (2 * len(plan.positivos))


# ============================================================================
# PERDA LOCAL
# ============================================================================


def extrair_regioes(F: torch.Tensor, grade: Sequence[Tuple[int, int]], K: int) -> torch.Tensor:
    """
    Vetores de região achatados (K x K x C).

    Args:
        F: Mapas (M x C x W1 x W2)

    Returns:
        Tensor M x A x (C K K)
    """
    blocos = [F[:, :, u:u + K, v:v + K].reshape(F.shape[0], -1) for u, v in grade]
    return torch.stack(blocos, dim=1)


def local_pair_loss(
    f_a,
    f_b,
    uv: Tuple[int, int],
    omega_neg: Sequence[Tuple[int, int, int]],
    K: int,
    cfg: LossConfig = LossConfig(),
    mapas: Optional[Dict[int, torch.Tensor]] = None,
) -> torch.Tensor:
    """
    Perda para o par (f_a(u, v), f_b(u, v)) com negativos listados em omega_neg.

    Args:
        f_a, f_b: Mapas C x W1 x W2
        uv: Canto superior esquerdo da região
        omega_neg: (mapa, u', v'); mapa 0 = f_a, 1 = f_b, salvo quando `mapas` é dado
        K: Lado da região

    Raises:
        ErroConfiguracao: omega_neg vazio
    """
    if len(omega_neg) == 0:
        raise ErroConfiguracao(MensagensErro.NEGATIVOS_VAZIOS.format(indice=0))
    f_a = _como_tensor(f_a)
    f_b = _como_tensor(f_b)
    fontes = mapas if mapas is not None else {0: f_a, 1: f_b}
    u, v = uv
    ancora = f_a[:, u:u + K, v:v + K].reshape(-1)
    positivo = f_b[:, u:u + K, v:v + K].reshape(-1)
    negativos = [fontes[m][:, a:a + K, b:b + K].reshape(-1) for m, a, b in omega_neg]
    return global_pair_loss(ancora, positivo, negativos, cfg)


def local_loss(F, plan: RegionPlan, cfg: LossConfig = LossConfig()) -> torch.Tensor:
    """
    L_l = 1/(|X| 2A) * soma sobre os pares do plano de [l(a, b) + l(b, a)].

    Os pares entre volumes de L^D entram na mesma soma com o mesmo peso.

    Args:
        F: Mapas (n_mapas x C x W1 x W2), indexados pelos ids de mapa do plano

    Raises:
        ErroConfiguracao: algum par sem negativos (por exemplo A = 1)
        ErroNumerico: região nula
    """
    F = _como_tensor(F)
    if F.shape[0] != len(plan.mapas):
        raise ErroConfiguracao(f"{F.shape[0]} mapas para {len(plan.mapas)} mapas do plano")
    if not plan.positivos:
        raise ErroConfiguracao("Plano local sem pares positivos")
    A = plan.A
    posicao_celula = {celula: g for g, celula in enumerate(plan.grade)}

    def plano_para_id(regiao: Tuple[int, int, int]) -> int:
        mapa, u, v = regiao
        return mapa * A + posicao_celula[(u, v)]

    R = extrair_regioes(F, plan.grade, plan.K).reshape(F.shape[0] * A, -1)
    U = _normalizar_linhas(R, "regioes locais")
    similaridades = U @ U.T

    a = torch.as_tensor([plano_para_id(p[0]) for p in plan.positivos], dtype=torch.long)
    b = torch.as_tensor([plano_para_id(p[1]) for p in plan.positivos], dtype=torch.long)
    negativos, mascara = _indices_acolchoados(
        [[plano_para_id(r) for r in lista] for lista in plan.negativos_de]
    )
    mascara_ab, mascara_ba = mascara, mascara
    if cfg.negativos_apenas_segundo_mapa:
        mapa_neg = negativos // A
        mascara_ab = mascara & (mapa_neg == (b // A).unsqueeze(-1))
        mascara_ba = mascara & (mapa_neg == (a // A).unsqueeze(-1))
        vazios = ~(mascara_ab.any(-1) & mascara_ba.any(-1))
        if bool(vazios.any()):
            indice = int(torch.nonzero(vazios)[0])
            raise ErroConfiguracao(MensagensErro.NEGATIVOS_VAZIOS.format(indice=indice))

    perdas = _perda_simetrizada(similaridades, a, b, negativos, mascara_ab, mascara_ba, cfg.tau)
    return perdas.sum() / (plan.num_imagens * 2 * A)

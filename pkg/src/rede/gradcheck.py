"""
Verificador de gradientes por diferenças finitas centrais.

Compara o gradiente reverso (autograd) com (f(θ+ε) - f(θ-ε)) / 2ε numa
subamostra aleatória de entradas dos parâmetros, em precisão dupla.

Entradas sobre uma quina de ReLU/max-pooling (derivadas laterais
discordantes) não são diferenciáveis e ficam fora do máximo; o mesmo vale
para entradas cujo gradiente está abaixo do piso de ruído da diferença finita.
Ambas são contadas no relatório e substituídas por novas amostras.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import torch

from ..config.experimento import NetworkConfig
from ..erros import ErroConfiguracao, ErroNumerico
from ..pares.estrategias import compose_global_GDminus, compose_local_LR, make_region_grid
from ..perdas.contrastiva import LossConfig, global_loss, local_loss
from ..perdas.segmentacao import segmentation_loss
from ..registro import Registrador
from .parametros import ParameterStore
from .unet import RedeUNet


EPSILON_PADRAO = 1e-5
TOLERANCIA_PADRAO = 1e-4
AMOSTRAS_PADRAO = 200
PISO_RUIDO_PADRAO = 1e-6


@dataclass(frozen=True)
class EntradaGradiente:
    parametro: str
    indice: int
    analitico: float
    numerico: float
    erro_relativo: float


@dataclass(frozen=True)
class RelatorioGradiente:
    entradas: Tuple[EntradaGradiente, ...]
    tolerancia: float
    nao_diferenciaveis: int = 0
    abaixo_do_ruido: int = 0

    @property
    def max_erro_relativo(self) -> float:
        return max((e.erro_relativo for e in self.entradas), default=0.0)

    @property
    def aprovado(self) -> bool:
        return bool(self.entradas) and self.max_erro_relativo < self.tolerancia

    def acima_da_tolerancia(self) -> List[EntradaGradiente]:
        return [e for e in self.entradas if e.erro_relativo >= self.tolerancia]

    def formatar(self) -> str:
        status = "OK" if self.aprovado else "FALHOU"
        return (
            f"{status}: {len(self.entradas)} entradas, erro relativo maximo "
            f"{self.max_erro_relativo:.3e} (tolerancia {self.tolerancia:.0e}); "
            f"{self.nao_diferenciaveis} nao diferenciaveis, {self.abaixo_do_ruido} abaixo do ruido"
        )


def erro_relativo(analitico: float, numerico: float) -> float:
    return abs(analitico - numerico) / max(abs(analitico), abs(numerico), 1e-8)


def _avaliar(loss_fn: Callable[[], torch.Tensor]) -> float:
    with torch.no_grad():
        valor = float(loss_fn())
    if not np.isfinite(valor):
        raise ErroNumerico(f"Perda nao finita durante a verificacao de gradiente: {valor}")
    return valor


def grad_check(
    loss_fn: Callable[[], torch.Tensor],
    params: Mapping[str, torch.Tensor],
    epsilon: float = EPSILON_PADRAO,
    tolerancia: float = TOLERANCIA_PADRAO,
    amostras: int = AMOSTRAS_PADRAO,
    semente: int = 0,
    gradientes: Optional[Mapping[str, torch.Tensor]] = None,
    incluir: Sequence[Tuple[str, int]] = (),
    piso_ruido: float = PISO_RUIDO_PADRAO,
) -> RelatorioGradiente:
    """
    Args:
        loss_fn: Função sem argumentos que devolve a perda escalar com os
            valores atuais de `params`
        params: Tensores folha (float64) perturbados entrada a entrada
        gradientes: Gradientes analíticos a verificar; sem eles, são
            calculados por autograd (usado para injeção de falhas)
        incluir: (nome, índice) verificados antes da subamostra aleatória

    Raises:
        ErroConfiguracao: parâmetros fora de float64 ou lista vazia
        ErroNumerico: perda não finita
    """
    if not params:
        raise ErroConfiguracao("grad_check sem parametros")
    nomes = list(params)
    for nome in nomes:
        if params[nome].dtype != torch.float64:
            raise ErroConfiguracao(f"grad_check exige float64; '{nome}' e {params[nome].dtype}")

    perda = loss_fn()
    if not bool(torch.isfinite(perda)):
        raise ErroNumerico(f"Perda nao finita durante a verificacao de gradiente: {float(perda)}")
    if gradientes is None:
        brutos = torch.autograd.grad(perda, [params[n] for n in nomes], allow_unused=True)
        gradientes = {
            n: (torch.zeros_like(params[n]) if g is None else g.detach())
            for n, g in zip(nomes, brutos)
        }
    f0 = float(perda.detach())

    tamanhos = np.array([params[n].numel() for n in nomes])
    inicios = np.concatenate([[0], np.cumsum(tamanhos)])
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([semente, 0x6C4D])))
    ordem = rng.permutation(int(inicios[-1]))
    candidatos = list(incluir) + [
        (nomes[int(np.searchsorted(inicios, g, side="right") - 1)],
         int(g - inicios[int(np.searchsorted(inicios, g, side="right") - 1)]))
        for g in ordem
    ]

    entradas: List[EntradaGradiente] = []
    vistos = set()
    nao_diferenciaveis = 0
    abaixo_do_ruido = 0
    for nome, indice in candidatos:
        if len(entradas) >= amostras:
            break
        if (nome, indice) in vistos:
            continue
        vistos.add((nome, indice))

        plano = params[nome].data.view(-1)
        original = plano[indice].item()
        plano[indice] = original + epsilon
        f_mais = _avaliar(loss_fn)
        plano[indice] = original - epsilon
        f_menos = _avaliar(loss_fn)
        plano[indice] = original

        analitico = float(gradientes[nome].reshape(-1)[indice])
        numerico = (f_mais - f_menos) / (2 * epsilon)
        erro = erro_relativo(analitico, numerico)
        if erro >= tolerancia:
            lateral_mais = (f_mais - f0) / epsilon
            lateral_menos = (f0 - f_menos) / epsilon
            if abs(lateral_mais - lateral_menos) / 2 >= 0.5 * abs(analitico - numerico):
                nao_diferenciaveis += 1
                continue
        if max(abs(analitico), abs(numerico)) < piso_ruido:
            abaixo_do_ruido += 1
            continue
        entradas.append(EntradaGradiente(nome, indice, analitico, numerico, erro))

    return RelatorioGradiente(
        entradas=tuple(entradas),
        tolerancia=tolerancia,
        nao_diferenciaveis=nao_diferenciaveis,
        abaixo_do_ruido=abaixo_do_ruido,
    )


# ============================================================================
# VERIFICAÇÕES DE REFERÊNCIA
# ============================================================================


def config_rede_verificacao() -> NetworkConfig:
    """Rede de 2 blocos em 16 x 16 usada nas três verificações."""
    return NetworkConfig(
        enc_blocks=2,
        base_channels=4,
        max_channel_multiplier=8,
        dec_blocks_pretrained=1,
        g1_dims=(16, 8),
        g2_channels=(8, 4),
        num_classes=3,
        input_size=(16, 16),
    )


def _rede_f64(semente: int) -> RedeUNet:
    torch.manual_seed(semente)
    return RedeUNet(config_rede_verificacao()).double()


def _imagens(rng: np.random.Generator, n: int) -> torch.Tensor:
    return torch.from_numpy(rng.standard_normal((n, 1, 16, 16)))


def verificar_perda_global(semente: int = 0, amostras: int = AMOSTRAS_PADRAO) -> RelatorioGradiente:
    """L_g (plano G^D- com m=2, S=2) através do encoder de 2 blocos e g1."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([semente, 1])))
    rede = _rede_f64(semente)
    plano = compose_global_GDminus(2, 2, rng)
    x = _imagens(rng, len(plano.itens))
    loja = ParameterStore(rede)
    loja.aplicar_modos(treino=True)
    params = loja.parametros_nomeados(["encoder", "g1"])
    return grad_check(
        lambda: global_loss(rede.representacao_global(x), plano, LossConfig()),
        params,
        amostras=amostras,
        semente=semente,
    )


def verificar_perda_local(semente: int = 0, amostras: int = AMOSTRAS_PADRAO) -> RelatorioGradiente:
    """L_l (plano L^R, K=2, A=4) com encoder congelado, 1 bloco do decoder e g2."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([semente, 2])))
    rede = _rede_f64(semente)
    loja = ParameterStore(rede)
    loja.congelar("encoder")
    grade = make_region_grid(8, 8, rede.cfg.g2_channels[1], 2, 4, rng)
    plano = compose_local_LR(2, grade, K=2)
    x = _imagens(rng, len(plano.mapas))
    params = loja.parametros_nomeados(["decoder_l", "g2"])
    return grad_check(
        lambda: local_loss(rede.representacao_local(x), plano, LossConfig()),
        params,
        amostras=amostras,
        semente=semente,
    )


def verificar_perda_segmentacao(semente: int = 0, amostras: int = AMOSTRAS_PADRAO) -> RelatorioGradiente:
    """Perda de segmentação pela rede completa."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([semente, 3])))
    rede = _rede_f64(semente)
    loja = ParameterStore(rede)
    loja.aplicar_modos(treino=True)
    x = _imagens(rng, 2)
    alvo = torch.from_numpy(rng.integers(0, rede.cfg.num_classes, size=(2, 16, 16)))
    params = dict(rede.named_parameters())
    return grad_check(
        lambda: segmentation_loss(rede.seg_forward(x), alvo),
        params,
        amostras=amostras,
        semente=semente,
    )


def suite_gradientes(
    semente: int = 0,
    amostras: int = AMOSTRAS_PADRAO,
    callback_log: Optional[Callable[[str], None]] = None,
) -> Dict[str, RelatorioGradiente]:
    """Executa as três verificações e registra um resumo de cada."""
    registro = Registrador(callback_log)
    relatorios = {
        "perda_global": verificar_perda_global(semente, amostras),
        "perda_local": verificar_perda_local(semente, amostras),
        "perda_segmentacao": verificar_perda_segmentacao(semente, amostras),
    }
    for nome, relatorio in relatorios.items():
        if relatorio.aprovado:
            registro.sucesso(f"{nome}: {relatorio.formatar()}")
        else:
            registro.erro(f"{nome}: {relatorio.formatar()}")
    return relatorios

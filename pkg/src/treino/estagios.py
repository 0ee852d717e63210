"""
Pipeline de treino por estágios: pré-treino global, pré-treino local,
pré-treino conjunto (ablação) e ajuste fino com seleção pela validação.

Cada estágio recria a rede com torch.manual_seed(semente), usa um gerador
numpy próprio por (semente, estágio) e pode ser retomado de um checkpoint do
mesmo estágio, continuando bit a bit.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
import torch

from ..avaliacao.dice import evaluate
from ..config.constantes import MensagensErro
from ..config.experimento import ExperimentConfig
from ..erros import ErroConfiguracao, ErroNumerico
from ..pares.estrategias import BatchPlan, RegionPlan
from ..perdas.contrastiva import LossConfig, global_loss, local_loss
from ..perdas.segmentacao import segmentation_loss
from ..rede.checkpoint import Checkpoint
from ..rede.parametros import ParameterStore
from ..rede.unet import RedeUNet
from ..registro import Registrador
from ..transformacoes.familia import familia_finetune, familia_global, familia_local
from ..volumes.conjunto import ConjuntoVolumes
from .amostragem import (
    gerador_do_estagio,
    montar_lote_global,
    montar_lote_local,
    montar_lote_segmentacao,
    plano_global,
    verificar_forma_entrada,
    verificar_rotulos,
)
from .historico import HistoricoEstagio, RegistroIteracao, SeletorModelo


GRUPOS_FINETUNE = ("encoder", "decoder_l", "decoder_resto", "seg")
GRUPOS_PRE_TREINADOS = ("encoder", "decoder_l")


@dataclass
class ResultadoEstagio:
    checkpoint: Checkpoint
    historico: HistoricoEstagio


def configurar_determinismo(ativo: bool) -> None:
    """Uma thread e algoritmos determinísticos do torch."""
    if ativo:
        torch.set_num_threads(1)
        torch.use_deterministic_algorithms(True)


def _total_iteracoes(iteracoes: Optional[int], padrao: int) -> int:
    """Total pedido explicitamente ou o da configuração; nunca menor que 1."""
    total = padrao if iteracoes is None else int(iteracoes)
    if total < 1:
        raise ErroConfiguracao(f"iteracoes={total} (minimo 1)")
    return total


def perda_conjunta(
    rede: RedeUNet,
    x_global: torch.Tensor,
    plano_g: BatchPlan,
    x_local: torch.Tensor,
    plano_l: RegionPlan,
    lambda_l: float,
    perda_cfg: LossConfig,
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """
    L_net = L_g + lambda_l * L_l.

    Returns:
        (L_net, L_g, L_l)
    """
    perda_g = global_loss(rede.representacao_global(x_global), plano_g, perda_cfg)
    perda_l = local_loss(rede.representacao_local(x_local), plano_l, perda_cfg)
    return perda_g + lambda_l * perda_l, perda_g, perda_l


class Treinador:
    """
    Executa os estágios de treino de um experimento para uma semente.

    Eventos de progresso: ('iteracao', {...}) a cada passo e
    ('validacao', {...}) a cada avaliação do ajuste fino.
    """

    def __init__(
        self,
        cfg: ExperimentConfig,
        conjunto: ConjuntoVolumes,
        semente: Optional[int] = None,
        diretorio_saida: Optional[str | Path] = None,
        callback_log: Optional[Callable[[str], None]] = None,
        callback_progresso: Optional[Callable[[str, Dict[str, Any]], None]] = None,
        nivel_log: str = "INFO",
    ):
        self.cfg = cfg
        self.conjunto = conjunto
        self.semente = int(cfg.seeds[0] if semente is None else semente)
        self.diretorio_saida = Path(diretorio_saida) if diretorio_saida else None
        self.registro = Registrador(callback_log, nivel_log)
        self.callback_progresso = callback_progresso
        self.dtype = torch.float64 if cfg.dtype == "float64" else torch.float32
        configurar_determinismo(cfg.deterministic)

    # ------------------------------------------------------------------
    # Infraestrutura
    # ------------------------------------------------------------------

    def _nova_rede(self) -> Tuple[RedeUNet, ParameterStore]:
        torch.manual_seed(self.semente)
        rede = RedeUNet(self.cfg.network).to(self.dtype)
        loja = ParameterStore(rede)
        loja.aplicar_modos(treino=True)
        return rede, loja

    def _otimizador(self, parametros: Iterable[torch.nn.Parameter]) -> torch.optim.Adam:
        return torch.optim.Adam(
            list(parametros),
            lr=self.cfg.learning_rate,
            betas=(self.cfg.adam_beta1, self.cfg.adam_beta2),
            eps=self.cfg.adam_eps,
        )

    def _tensor(self, imagens: np.ndarray) -> torch.Tensor:
        return torch.from_numpy(imagens).to(self.dtype).unsqueeze(1)

    def _historico(self, estagio: str) -> HistoricoEstagio:
        caminho = self.diretorio_saida / f"{estagio}_log.csv" if self.diretorio_saida else None
        return HistoricoEstagio(estagio, caminho)

    def _emitir(self, etapa: str, detalhes: Dict[str, Any]) -> None:
        if self.callback_progresso:
            self.callback_progresso(etapa, detalhes)

    def _passo(self, otimizador: torch.optim.Optimizer, perda: torch.Tensor, iteracao: int, estagio: str) -> None:
        if not bool(torch.isfinite(perda)):
            raise ErroNumerico(MensagensErro.PERDA_NAO_FINITA.format(iteracao=iteracao, estagio=estagio))
        otimizador.zero_grad(set_to_none=True)
        perda.backward()
        otimizador.step()

    def _registrar(self, historico: HistoricoEstagio, registro: RegistroIteracao, total: int) -> None:
        historico.registrar(registro)
        self._emitir(
            "iteracao",
            {
                "estagio": historico.estagio,
                "iteracao": registro.iteracao,
                "total": total,
                "perda_total": registro.perda_total,
                "perda_global": registro.perda_global,
                "perda_local": registro.perda_local,
            },
        )
        passo_log = max(1, total // 10)
        if registro.iteracao % passo_log == 0 or registro.iteracao == total:
            self.registro.info(
                f"[{historico.estagio}] iteracao {registro.iteracao}/{total} perda={registro.perda_total:.5f}"
            )

    def _estado_retomada(
        self,
        rede: RedeUNet,
        otimizador: torch.optim.Optimizer,
        rng: np.random.Generator,
        iteracao: int,
        **extras: Any,
    ) -> Dict[str, Any]:
        return {
            "rede": {k: v.detach().clone() for k, v in rede.state_dict().items()},
            "otimizador": copy.deepcopy(otimizador.state_dict()),
            "rng": json.dumps(rng.bit_generator.state),
            "iteracao": int(iteracao),
            **extras,
        }

    def _retomar(
        self,
        ckpt: Checkpoint,
        estagio: str,
        loja: ParameterStore,
        otimizador: torch.optim.Optimizer,
        rng: np.random.Generator,
    ) -> int:
        """
        Raises:
            ErroConfiguracao: checkpoint de outro estágio ou sem estado de retomada
        """
        if ckpt.estagio != estagio or not ckpt.estado_treino:
            raise ErroConfiguracao(
                f"Checkpoint do estagio '{ckpt.estagio}' sem estado de retomada para '{estagio}'"
            )
        estado = ckpt.estado_treino
        loja.restaurar(estado["rede"])
        otimizador.load_state_dict(estado["otimizador"])
        rng.bit_generator.state = json.loads(estado["rng"])
        iteracao = int(estado["iteracao"])
        self.registro.info(f"Retomando o estagio '{estagio}' da iteracao {iteracao}")
        return iteracao

    def _checkpoint(
        self,
        estagio: str,
        parametros: Dict[str, torch.Tensor],
        estado_treino: Dict[str, Any],
        metricas: Optional[Dict[str, Any]] = None,
    ) -> Checkpoint:
        config = self.cfg.para_dict()
        return Checkpoint(
            config=config,
            rede=config["network"],
            parametros=parametros,
            estagio=estagio,
            estado_treino=estado_treino,
            metricas={"semente": self.semente, **(metricas or {})},
        )

    @staticmethod
    def _grupos_do_checkpoint(loja: ParameterStore, ckpt: Checkpoint, grupos: Sequence[str]) -> Dict[str, torch.Tensor]:
        return {k: v for k, v in ckpt.parametros.items() if loja.grupo_de(k) in grupos}

    def _forma_mapa_local(self) -> Tuple[int, int]:
        rede_cfg = self.cfg.network
        fator = 2 ** (rede_cfg.enc_blocks - rede_cfg.dec_blocks_pretrained)
        return rede_cfg.input_size[0] // fator, rede_cfg.input_size[1] // fator

    def _verificar_local(self) -> None:
        if self.cfg.local_strategy == "none":
            raise ErroConfiguracao("local_strategy 'none': nao ha estagio local para treinar")
        if self.cfg.A < 2:
            raise ErroConfiguracao(
                f"A={self.cfg.A}: " + MensagensErro.NEGATIVOS_VAZIOS.format(indice=0)
            )

    # ------------------------------------------------------------------
    # Estágios
    # ------------------------------------------------------------------

    def pretrain_global(
        self,
        iteracoes: Optional[int] = None,
        retomar_de: Optional[Checkpoint] = None,
    ) -> ResultadoEstagio:
        """
        Treina encoder + g1 minimizando L_g; g1 fica fora dos parâmetros exportados.

        Raises:
            ErroConfiguracao: lote pequeno para G^D (m = 0) ou N < 2 em G^R
            ErroNumerico: perda não finita
        """
        cfg = self.cfg
        total = _total_iteracoes(iteracoes, cfg.iterations_global)
        volumes = self.conjunto.pretreino
        verificar_forma_entrada(volumes, cfg.network.input_size)
        if cfg.global_strategy == "GR":
            cfg.imagens_por_lote_gr()
        else:
            cfg.volumes_por_lote()

        rede, loja = self._nova_rede()
        otimizador = self._otimizador(loja.parametros(["encoder", "g1"]))
        rng = gerador_do_estagio(self.semente, "global")
        inicio = self._retomar(retomar_de, "global", loja, otimizador, rng) if retomar_de else 0
        familia = familia_global()
        perda_cfg = LossConfig(tau=cfg.tau)
        S = None if cfg.global_strategy == "GR" else cfg.S
        historico = self._historico("global")

        self.registro.banner(f"PRE-TREINO GLOBAL ({cfg.global_strategy}, semente {self.semente})")
        for it in range(inicio, total):
            plano = plano_global(cfg, volumes, rng)
            lote = montar_lote_global(volumes, plano, familia, rng, S)
            perda = global_loss(rede.representacao_global(self._tensor(lote)), plano, perda_cfg)
            self._passo(otimizador, perda, it + 1, "global")
            valor = float(perda.detach())
            self._registrar(historico, RegistroIteracao(it + 1, valor, perda_global=valor), total)

        ckpt = self._checkpoint(
            "global",
            loja.estado(["encoder"]),
            self._estado_retomada(rede, otimizador, rng, total),
        )
        self.registro.sucesso(f"Pre-treino global concluido ({total} iteracoes); g1 descartado")
        return ResultadoEstagio(ckpt, historico)

    def pretrain_local(
        self,
        checkpoint_encoder: Optional[Checkpoint],
        iteracoes: Optional[int] = None,
        retomar_de: Optional[Checkpoint] = None,
    ) -> ResultadoEstagio:
        """
        Congela o encoder e treina d_l + g2 minimizando L_l com transformações
        apenas de intensidade; g2 fica fora dos parâmetros exportados.

        Raises:
            ErroConfiguracao: local_strategy 'none', A < 2 ou L^D sem pares entre volumes
        """
        cfg = self.cfg
        self._verificar_local()
        total = _total_iteracoes(iteracoes, cfg.iterations_local)
        volumes = self.conjunto.pretreino
        verificar_forma_entrada(volumes, cfg.network.input_size)

        rede, loja = self._nova_rede()
        if checkpoint_encoder is not None:
            loja.restaurar(self._grupos_do_checkpoint(loja, checkpoint_encoder, ("encoder",)))
        else:
            self.registro.atencao("Pre-treino local sem checkpoint de encoder: encoder aleatorio congelado")
        loja.congelar("encoder")
        otimizador = self._otimizador(loja.parametros(["decoder_l", "g2"]))
        rng = gerador_do_estagio(self.semente, "local")
        inicio = self._retomar(retomar_de, "local", loja, otimizador, rng) if retomar_de else 0
        familia = familia_local()
        perda_cfg = LossConfig(tau=cfg.tau, negativos_apenas_segundo_mapa=cfg.local_negatives_second_map_only)
        forma_mapa = self._forma_mapa_local()
        historico = self._historico("local")

        self.registro.banner(f"PRE-TREINO LOCAL ({cfg.local_strategy}, l={cfg.l}, semente {self.semente})")
        for it in range(inicio, total):
            lote = montar_lote_local(cfg, volumes, familia, rng, forma_mapa, cfg.network.g2_channels[1])
            perda = local_loss(rede.representacao_local(self._tensor(lote.mapas)), lote.plano, perda_cfg)
            self._passo(otimizador, perda, it + 1, "local")
            valor = float(perda.detach())
            self._registrar(historico, RegistroIteracao(it + 1, valor, perda_local=valor), total)

        ckpt = self._checkpoint(
            "local",
            loja.estado(GRUPOS_PRE_TREINADOS),
            self._estado_retomada(rede, otimizador, rng, total),
        )
        self.registro.sucesso(f"Pre-treino local concluido ({total} iteracoes); g2 descartado")
        return ResultadoEstagio(ckpt, historico)

    def joint_pretrain(
        self,
        iteracoes: Optional[int] = None,
        retomar_de: Optional[Checkpoint] = None,
    ) -> ResultadoEstagio:
        """Encoder, d_l, g1 e g2 atualizados juntos por L_g + lambda_l * L_l durante iterations_joint iterações."""
        cfg = self.cfg
        self._verificar_local()
        total = _total_iteracoes(iteracoes, cfg.iterations_joint)
        volumes = self.conjunto.pretreino
        verificar_forma_entrada(volumes, cfg.network.input_size)
        if cfg.global_strategy == "GR":
            cfg.imagens_por_lote_gr()
        else:
            cfg.volumes_por_lote()

        rede, loja = self._nova_rede()
        otimizador = self._otimizador(loja.parametros(["encoder", "g1", "decoder_l", "g2"]))
        rng = gerador_do_estagio(self.semente, "joint")
        inicio = self._retomar(retomar_de, "joint", loja, otimizador, rng) if retomar_de else 0
        familia_g, familia_l = familia_global(), familia_local()
        perda_cfg = LossConfig(tau=cfg.tau, negativos_apenas_segundo_mapa=cfg.local_negatives_second_map_only)
        S = None if cfg.global_strategy == "GR" else cfg.S
        forma_mapa = self._forma_mapa_local()
        historico = self._historico("joint")

        self.registro.banner(f"PRE-TREINO CONJUNTO (lambda_l={cfg.lambda_l}, semente {self.semente})")
        for it in range(inicio, total):
            plano = plano_global(cfg, volumes, rng)
            lote_g = montar_lote_global(volumes, plano, familia_g, rng, S)
            lote_l = montar_lote_local(cfg, volumes, familia_l, rng, forma_mapa, cfg.network.g2_channels[1])
            perda, perda_g, perda_l = perda_conjunta(
                rede,
                self._tensor(lote_g),
                plano,
                self._tensor(lote_l.mapas),
                lote_l.plano,
                cfg.lambda_l,
                perda_cfg,
            )
            self._passo(otimizador, perda, it + 1, "joint")
            self._registrar(
                historico,
                RegistroIteracao(
                    it + 1,
                    float(perda.detach()),
                    perda_global=float(perda_g.detach()),
                    perda_local=float(perda_l.detach()),
                ),
                total,
            )

        ckpt = self._checkpoint(
            "joint",
            loja.estado(GRUPOS_PRE_TREINADOS),
            self._estado_retomada(rede, otimizador, rng, total),
        )
        self.registro.sucesso(f"Pre-treino conjunto concluido ({total} iteracoes)")
        return ResultadoEstagio(ckpt, historico)

    def finetune(
        self,
        checkpoint_pretreino: Optional[Checkpoint] = None,
        iteracoes: Optional[int] = None,
        retomar_de: Optional[Checkpoint] = None,
    ) -> ResultadoEstagio:
        """
        Ajuste fino da rede inteira na segmentação. Os blocos restantes do
        decoder e a cabeça de segmentação partem da inicialização aleatória;
        o checkpoint devolvido contém o estado de maior DSC de validação.

        Raises:
            ErroConfiguracao: X_tr vazio
            ErroDados: volumes sem rótulos ou com classes além de num_classes
        """
        cfg = self.cfg
        total = _total_iteracoes(iteracoes, cfg.iterations_finetune)
        treino, validacao = self.conjunto.dividir_treino_validacao(cfg.n_tr, cfg.n_vl, self.semente)
        if not treino:
            raise ErroConfiguracao(MensagensErro.TREINO_VAZIO)
        num_classes = cfg.network.num_classes
        verificar_forma_entrada(treino + validacao, cfg.network.input_size)
        verificar_rotulos(treino + validacao, num_classes)

        rede, loja = self._nova_rede()
        if checkpoint_pretreino is not None:
            loja.restaurar(self._grupos_do_checkpoint(loja, checkpoint_pretreino, GRUPOS_PRE_TREINADOS))
        otimizador = self._otimizador(loja.parametros(GRUPOS_FINETUNE))
        rng = gerador_do_estagio(self.semente, "finetune")
        seletor = SeletorModelo()
        inicio = 0
        if retomar_de:
            inicio = self._retomar(retomar_de, "finetune", loja, otimizador, rng)
            seletor = SeletorModelo.de_dict(retomar_de.estado_treino["seletor"])
        familia = familia_finetune()
        lote = cfg.lote_finetune()
        historico = self._historico("finetune")

        origem = "aleatoria" if checkpoint_pretreino is None else f"checkpoint '{checkpoint_pretreino.estagio}'"
        self.registro.banner(f"AJUSTE FINO (inicializacao {origem}, |X_tr|={len(treino)}, semente {self.semente})")
        for it in range(inicio, total):
            x, y = montar_lote_segmentacao(treino, lote, familia, rng, num_classes, cfg.mixup_alpha)
            alvo = torch.from_numpy(y)
            if alvo.is_floating_point():
                alvo = alvo.to(self.dtype)
            perda = segmentation_loss(rede.seg_forward(self._tensor(x)), alvo)
            self._passo(otimizador, perda, it + 1, "finetune")

            n = it + 1
            dsc: Optional[float] = None
            if n % cfg.validation_interval == 0 or n == total:
                dsc = evaluate(rede, validacao, num_classes, semente=self.semente, dtype=self.dtype).media
                if seletor.observar(n, dsc, loja.estado(GRUPOS_FINETUNE)):
                    self.registro.debug(f"Novo melhor DSC de validacao {dsc:.4f} na iteracao {n}")
                self._emitir(
                    "validacao",
                    {"iteracao": n, "dsc_validacao": dsc, "melhor_iteracao": seletor.melhor_iteracao},
                )
            self._registrar(historico, RegistroIteracao(n, float(perda.detach()), dsc_validacao=dsc), total)

        ckpt = self._checkpoint(
            "finetune",
            dict(seletor.melhor_estado),
            self._estado_retomada(rede, otimizador, rng, total, seletor=seletor.para_dict()),
            metricas={"melhor_dsc": seletor.melhor_dsc, "melhor_iteracao": seletor.melhor_iteracao},
        )
        self.registro.sucesso(
            f"Ajuste fino concluido: melhor DSC de validacao {seletor.melhor_dsc:.4f} "
            f"na iteracao {seletor.melhor_iteracao}"
        )
        return ResultadoEstagio(ckpt, historico)

"""
Configuração de experimento: hiperparâmetros, estratégias, sementes e caminhos.

Carregada de JSON; chaves desconhecidas são rejeitadas em todos os níveis.
Os valores padrão correspondem à escala completa (tau 0.1, lr 1e-3, 10000 iterações, lote 40, A = 13).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from ..erros import ErroConfiguracao
from .constantes import (
    ADAM_BETA1,
    ADAM_BETA2,
    ADAM_EPS,
    BLOCOS_DECODER_PRE_TREINADOS,
    BLOCOS_ENCODER_COMPLETO,
    CANAIS_BASE_COMPLETO,
    DIMENSOES_G1_COMPLETO,
    ESTRATEGIAS_GLOBAIS,
    ESTRATEGIAS_LOCAIS,
    INTERVALO_VALIDACAO_PADRAO,
    ITERACOES_PADRAO,
    LAMBDA_LOCAL_PADRAO,
    LOTE_IMAGENS_PADRAO,
    MULTIPLICADOR_MAXIMO_CANAIS,
    MensagensErro,
    PARTICOES_PADRAO,
    REGIOES_POR_MAPA_PADRAO,
    TAMANHO_ENTRADA_COMPLETO,
    TAMANHO_REGIAO_PADRAO,
    TAU_PADRAO,
    TAXA_APRENDIZADO_PADRAO,
)


def _como_tupla(valor: Any) -> Any:
    if isinstance(valor, list):
        return tuple(_como_tupla(v) for v in valor)
    return valor


def _verificar_chaves(classe: type, dados: Dict[str, Any], secao: str) -> None:
    conhecidas = {f.name for f in fields(classe)}
    desconhecidas = sorted(set(dados) - conhecidas)
    if desconhecidas:
        raise ErroConfiguracao(
            f"Chaves desconhecidas na secao '{secao}': {', '.join(desconhecidas)}"
        )


def _levantar_se_houver(problemas: List[str], secao: str) -> None:
    if problemas:
        lista = "\n".join(f"- {p}" for p in problemas)
        raise ErroConfiguracao(f"Configuracao invalida ({secao}):\n{lista}")


@dataclass(frozen=True)
class NetworkConfig:
    """Geometria do encoder-decoder e das cabeças de projeção."""

    enc_blocks: int = BLOCOS_ENCODER_COMPLETO
    base_channels: int = CANAIS_BASE_COMPLETO
    max_channel_multiplier: int = MULTIPLICADOR_MAXIMO_CANAIS
    dec_blocks_pretrained: int = BLOCOS_DECODER_PRE_TREINADOS
    g1_dims: Tuple[int, int] = DIMENSOES_G1_COMPLETO
    g2_channels: Tuple[int, int] = (128, 128)
    num_classes: int = 4
    input_size: Tuple[int, int] = TAMANHO_ENTRADA_COMPLETO

    def __post_init__(self) -> None:
        _levantar_se_houver(self.validar(), "network")

    def validar(self) -> List[str]:
        problemas: List[str] = []
        if self.enc_blocks < 2:
            problemas.append(f"enc_blocks={self.enc_blocks} (minimo 2)")
        if self.base_channels < 1:
            problemas.append(f"base_channels={self.base_channels} (minimo 1)")
        if self.max_channel_multiplier < 1:
            problemas.append(f"max_channel_multiplier={self.max_channel_multiplier} (minimo 1)")
        if not 1 <= self.dec_blocks_pretrained <= self.enc_blocks - 1:
            problemas.append(
                f"dec_blocks_pretrained={self.dec_blocks_pretrained} fora de [1, {self.enc_blocks - 1}]"
            )
        if len(self.g1_dims) != 2 or min(self.g1_dims) < 1:
            problemas.append(f"g1_dims={self.g1_dims} (dois inteiros positivos)")
        if len(self.g2_channels) != 2 or min(self.g2_channels) < 1:
            problemas.append(f"g2_channels={self.g2_channels} (dois inteiros positivos)")
        if self.num_classes < 2:
            problemas.append(f"num_classes={self.num_classes} (minimo 2)")
        if len(self.input_size) != 2 or min(self.input_size) < 1:
            problemas.append(f"input_size={self.input_size} (dois inteiros positivos)")
        else:
            fator = 2 ** max(self.enc_blocks, 0)
            if self.input_size[0] % fator or self.input_size[1] % fator:
                problemas.append(
                    f"input_size={self.input_size} nao divisivel por 2^enc_blocks={fator}"
                )
        return problemas

    def canais(self) -> Tuple[int, ...]:
        """Canais por bloco do encoder: base dobrando a cada bloco, limitado ao multiplicador."""
        return tuple(
            self.base_channels * min(2 ** b, self.max_channel_multiplier)
            for b in range(self.enc_blocks)
        )

    @classmethod
    def de_dict(cls, dados: Dict[str, Any]) -> "NetworkConfig":
        _verificar_chaves(cls, dados, "network")
        return cls(**{k: _como_tupla(v) for k, v in dados.items()})


@dataclass(frozen=True)
class PhantomConfig:
    """Parâmetros do gerador de volumes sintéticos usados por gen-data."""

    shape: Tuple[int, int, int] = (12, 32, 32)
    num_classes: int = 3
    inter_subject_jitter: float = 0.1
    intensity_jitter: float = 0.2

    @classmethod
    def de_dict(cls, dados: Dict[str, Any]) -> "PhantomConfig":
        _verificar_chaves(cls, dados, "phantom")
        return cls(**{k: _como_tupla(v) for k, v in dados.items()})


@dataclass(frozen=True)
class ExperimentConfig:
    """Todos os hiperparâmetros de um experimento."""

    # Dados e divisões
    data_dir: str = "dados"
    out_dir: Optional[str] = None
    n_pre: int = 20
    n_tr: int = 1
    n_vl: int = 2
    n_ts: int = 20
    target_spacing: Tuple[float, float] = (1.0, 1.0)
    normalize: bool = True

    # Estratégias
    global_strategy: str = "GD"
    local_strategy: str = "LR"
    S: int = PARTICOES_PADRAO
    batch_images: int = LOTE_IMAGENS_PADRAO
    originals_count_in_batch: bool = True
    region_negatives_strict: bool = False
    local_negatives_second_map_only: bool = False

    # Otimização
    iterations_global: int = ITERACOES_PADRAO
    iterations_local: int = ITERACOES_PADRAO
    iterations_joint: int = ITERACOES_PADRAO
    iterations_finetune: int = ITERACOES_PADRAO
    learning_rate: float = TAXA_APRENDIZADO_PADRAO
    adam_beta1: float = ADAM_BETA1
    adam_beta2: float = ADAM_BETA2
    adam_eps: float = ADAM_EPS
    tau: float = TAU_PADRAO
    K: int = TAMANHO_REGIAO_PADRAO
    A: int = REGIOES_POR_MAPA_PADRAO
    lambda_l: float = LAMBDA_LOCAL_PADRAO
    mixup_alpha: Optional[float] = None
    finetune_batch: Optional[int] = None
    validation_interval: int = INTERVALO_VALIDACAO_PADRAO

    # Execução
    seeds: Tuple[int, ...] = (0,)
    deterministic: bool = True
    dtype: str = "float32"

    # Matriz de experimentos
    arms: Tuple[str, ...] = ("random", "GR", "GD", "GD+LR")
    x_tr_grid: Tuple[int, ...] = (1,)

    network: NetworkConfig = field(default_factory=NetworkConfig)
    phantom: PhantomConfig = field(default_factory=PhantomConfig)

    def __post_init__(self) -> None:
        _levantar_se_houver(self.validar(), "experimento")

    def validar(self) -> List[str]:
        """Coleta todos os problemas da configuração (não para no primeiro)."""
        problemas: List[str] = []
        for nome in ("n_pre", "n_tr", "n_vl", "n_ts"):
            if getattr(self, nome) < 1:
                problemas.append(f"{nome}={getattr(self, nome)} (minimo 1)")
        if self.n_tr + self.n_vl > self.n_pre:
            problemas.append(
                f"n_tr + n_vl = {self.n_tr + self.n_vl} excede n_pre = {self.n_pre}"
            )
        if self.global_strategy not in ESTRATEGIAS_GLOBAIS:
            problemas.append(
                f"global_strategy '{self.global_strategy}' (validas: {', '.join(ESTRATEGIAS_GLOBAIS)})"
            )
        if self.local_strategy not in ESTRATEGIAS_LOCAIS:
            problemas.append(
                f"local_strategy '{self.local_strategy}' (validas: {', '.join(ESTRATEGIAS_LOCAIS)})"
            )
        if self.S < 1:
            problemas.append(f"S={self.S} (minimo 1)")
        if self.batch_images < 2:
            problemas.append(f"batch_images={self.batch_images} (minimo 2)")
        for nome in ("iterations_global", "iterations_local", "iterations_joint", "iterations_finetune"):
            if getattr(self, nome) < 1:
                problemas.append(f"{nome}={getattr(self, nome)} (minimo 1)")
        if self.learning_rate <= 0:
            problemas.append(f"learning_rate={self.learning_rate} (deve ser > 0)")
        if not 0 <= self.adam_beta1 < 1 or not 0 <= self.adam_beta2 < 1:
            problemas.append(f"betas do Adam fora de [0, 1): {self.adam_beta1}, {self.adam_beta2}")
        if self.adam_eps <= 0:
            problemas.append(f"adam_eps={self.adam_eps} (deve ser > 0)")
        if self.tau <= 0:
            problemas.append(f"tau={self.tau} (deve ser > 0)")
        if self.K < 1:
            problemas.append(f"K={self.K} (minimo 1)")
        if self.A < 1:
            problemas.append(f"A={self.A} (minimo 1)")
        if self.lambda_l < 0:
            problemas.append(f"lambda_l={self.lambda_l} (deve ser >= 0)")
        if self.mixup_alpha is not None and self.mixup_alpha <= 0:
            problemas.append(f"mixup_alpha={self.mixup_alpha} (deve ser > 0)")
        if self.finetune_batch is not None and self.finetune_batch < 1:
            problemas.append(f"finetune_batch={self.finetune_batch} (minimo 1)")
        if self.validation_interval < 1:
            problemas.append(f"validation_interval={self.validation_interval} (minimo 1)")
        if not self.seeds:
            problemas.append("seeds vazio")
        if any(s < 0 or s >= 2 ** 64 for s in self.seeds):
            problemas.append(f"sementes fora de u64: {self.seeds}")
        if self.dtype not in ("float32", "float64"):
            problemas.append(f"dtype '{self.dtype}' (validos: float32, float64)")
        if len(self.target_spacing) != 2 or min(self.target_spacing) <= 0:
            problemas.append(f"target_spacing={self.target_spacing} (dois reais positivos)")
        if any(n < 1 for n in self.x_tr_grid):
            problemas.append(f"x_tr_grid={self.x_tr_grid} (valores >= 1)")
        return problemas

    # ------------------------------------------------------------------
    # Derivações
    # ------------------------------------------------------------------

    @property
    def l(self) -> int:  # noqa: E743
        return self.network.dec_blocks_pretrained

    def imagens_por_fatia_gd(self) -> int:
        """Quantas imagens cada fatia amostrada ocupa no lote (3 com originais, 2 sem)."""
        return 3 if self.originals_count_in_batch else 2

    def volumes_por_lote(self) -> int:
        """m = floor(batch_images / (3 S)); erro se m = 0."""
        minimo = self.imagens_por_fatia_gd() * self.S
        m = self.batch_images // minimo
        if m < 1:
            raise ErroConfiguracao(MensagensErro.LOTE_PEQUENO_GD.format(lote=self.batch_images, minimo=minimo, s=self.S))
        return m

    def imagens_por_lote_gr(self) -> int:
        """N de G^R: cada imagem ocupa duas posições (x~, x^)."""
        n = self.batch_images // 2
        if n < 2:
            raise ErroConfiguracao(
                f"G^R exige N >= 2 imagens (batch_images={self.batch_images} resulta em N={n})"
            )
        return n

    def lote_finetune(self) -> int:
        return self.finetune_batch if self.finetune_batch is not None else self.batch_images

    def com_alteracoes(self, **alteracoes: Any) -> "ExperimentConfig":
        return replace(self, **alteracoes)

    # ------------------------------------------------------------------
    # Serialização
    # ------------------------------------------------------------------

    def para_dict(self) -> Dict[str, Any]:
        return json.loads(json.dumps(asdict(self)))

    @classmethod
    def de_dict(cls, dados: Dict[str, Any]) -> "ExperimentConfig":
        _verificar_chaves(cls, dados, "experimento")
        valores: Dict[str, Any] = {}
        for chave, valor in dados.items():
            if chave == "network":
                valores[chave] = NetworkConfig.de_dict(valor or {})
            elif chave == "phantom":
                valores[chave] = PhantomConfig.de_dict(valor or {})
            else:
                valores[chave] = _como_tupla(valor)
        return cls(**valores)


def carregar_config(caminho: Optional[str | Path]) -> ExperimentConfig:
    """
    Lê a configuração JSON; sem caminho, devolve os padrões da escala completa.

    Raises:
        ErroConfiguracao: Arquivo ausente, JSON inválido ou valores fora das regras
    """
    if caminho is None:
        return ExperimentConfig()
    caminho = Path(caminho)
    if not caminho.exists():
        raise ErroConfiguracao(f"Arquivo de configuracao nao encontrado: {caminho}")
    try:
        dados = json.loads(caminho.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ErroConfiguracao(f"JSON invalido em {caminho}: {exc}") from exc
    if not isinstance(dados, dict):
        raise ErroConfiguracao(f"Configuracao em {caminho} deve ser um objeto JSON")
    return ExperimentConfig.de_dict(dados)

"""
Checkpoints versionados: eco da configuração, tensores nomeados em f64,
estado de retomada opcional e checksum SHA-256 do conteúdo.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import torch

from ..config.experimento import NetworkConfig
from ..erros import ErroDados, ErroFormato
from .parametros import ParameterStore
from .unet import RedeUNet


FORMATO_CHECKPOINT = "SSLC"
VERSAO_CHECKPOINT = 1


def _para_f64(tensor: torch.Tensor) -> torch.Tensor:
    tensor = tensor.detach().cpu()
    if tensor.is_floating_point():
        return tensor.to(torch.float64).clone()
    return tensor.clone()


def _digerir(valor: Any, digest: "hashlib._Hash") -> None:
    """Alimenta o digest com uma serialização canônica (chaves ordenadas)."""
    if isinstance(valor, torch.Tensor):
        t = valor.detach().cpu().contiguous()
        digest.update(f"T{t.dtype}{tuple(t.shape)}".encode("utf-8"))
        digest.update(t.numpy().tobytes())
    elif isinstance(valor, dict):
        digest.update(b"{")
        for chave in sorted(valor, key=str):
            digest.update(str(chave).encode("utf-8"))
            _digerir(valor[chave], digest)
        digest.update(b"}")
    elif isinstance(valor, (list, tuple)):
        digest.update(b"[")
        for item in valor:
            _digerir(item, digest)
        digest.update(b"]")
    else:
        digest.update(repr(valor).encode("utf-8"))


def calcular_checksum(conteudo: Dict[str, Any]) -> str:
    digest = hashlib.sha256()
    _digerir(conteudo, digest)
    return digest.hexdigest()


@dataclass
class Checkpoint:
    """
    config: eco de ExperimentConfig.para_dict(); rede: NetworkConfig como dict;
    parametros: tensores nomeados (f64 para ponto flutuante);
    estagio: global, local, joint ou finetune;
    estado_treino: cabeças descartadas, estado do Adam, estado do gerador e
    iteração, usado apenas para retomar o mesmo estágio.
    """

    config: Dict[str, Any]
    rede: Dict[str, Any]
    parametros: Dict[str, torch.Tensor]
    estagio: str
    estado_treino: Optional[Dict[str, Any]] = None
    metricas: Dict[str, Any] = field(default_factory=dict)

    def conteudo(self) -> Dict[str, Any]:
        return {
            "formato": FORMATO_CHECKPOINT,
            "versao": VERSAO_CHECKPOINT,
            "config": self.config,
            "rede": self.rede,
            "parametros": {k: _para_f64(v) for k, v in self.parametros.items()},
            "estagio": self.estagio,
            "estado_treino": self.estado_treino,
            "metricas": self.metricas,
        }

    @property
    def checksum(self) -> str:
        return calcular_checksum(self.conteudo())

    def igual(self, outro: "Checkpoint") -> bool:
        """Igualdade bit a bit via checksum do conteúdo."""
        return self.checksum == outro.checksum


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> str:
    """
    Grava o checkpoint e devolve o checksum.
    """
    caminho = Path(path)
    caminho.parent.mkdir(parents=True, exist_ok=True)
    conteudo = ckpt.conteudo()
    conteudo["checksum"] = calcular_checksum(conteudo)
    torch.save(conteudo, caminho)
    return conteudo["checksum"]


def load_checkpoint(path: str | Path) -> Checkpoint:
    """
    Raises:
        ErroDados: arquivo inexistente
        ErroFormato: formato, versão ou checksum inválidos
    """
    caminho = Path(path)
    if not caminho.exists():
        raise ErroDados(f"Checkpoint nao encontrado: {caminho}")
    try:
        conteudo = torch.load(caminho, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise ErroFormato(f"Checkpoint ilegivel em {caminho}: {exc}") from exc
    if not isinstance(conteudo, dict) or conteudo.get("formato") != FORMATO_CHECKPOINT:
        raise ErroFormato(f"Arquivo {caminho} nao e um checkpoint {FORMATO_CHECKPOINT}")
    if conteudo.get("versao") != VERSAO_CHECKPOINT:
        raise ErroFormato(f"Versao de checkpoint nao suportada: {conteudo.get('versao')}")
    esperado = conteudo.pop("checksum", None)
    if esperado != calcular_checksum(conteudo):
        raise ErroFormato(f"Checksum do checkpoint {caminho} nao confere")
    return Checkpoint(
        config=conteudo["config"],
        rede=conteudo["rede"],
        parametros=conteudo["parametros"],
        estagio=conteudo["estagio"],
        estado_treino=conteudo["estado_treino"],
        metricas=conteudo.get("metricas") or {},
    )


def resumo_checkpoint(ckpt: Checkpoint) -> str:
    total = sum(int(t.numel()) for t in ckpt.parametros.values())
    return json.dumps(
        {"estagio": ckpt.estagio, "tensores": len(ckpt.parametros), "valores": total, "checksum": ckpt.checksum},
        ensure_ascii=False,
    )


def rede_de_checkpoint(ckpt: Checkpoint, dtype: torch.dtype = torch.float32) -> RedeUNet:
    """Reconstrói a rede e carrega os tensores presentes no checkpoint, em modo de avaliação."""
    rede = RedeUNet(NetworkConfig.de_dict(dict(ckpt.rede))).to(dtype)
    ParameterStore(rede).restaurar(ckpt.parametros)
    rede.eval()
    return rede

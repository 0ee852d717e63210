"""
Armazém de parâmetros nomeados com grupos e máscara de congelamento.

Grupos: encoder, g1, decoder_l (os l primeiros blocos do decoder),
decoder_resto, g2 e seg. Congelar um grupo desliga o gradiente dos seus
pesos e mantém as estatísticas de BN fixas (módulos em modo de avaliação).
"""

from __future__ import annotations

from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Set

import torch
from torch import nn

from ..erros import ErroNumerico
from .unet import RedeUNet


GRUPOS = ("encoder", "g1", "decoder_l", "decoder_resto", "g2", "seg")


class ParameterStore:
    def __init__(self, rede: RedeUNet):
        self.rede = rede
        self.congelados: Set[str] = set()

    def grupo_de(self, nome: str) -> str:
        """Grupo de uma chave do state_dict (por exemplo 'decoder.2.0.weight')."""
        raiz = nome.split(".", 1)[0]
        if raiz == "decoder":
            bloco = int(nome.split(".")[1])
            return "decoder_l" if bloco < self.rede.l else "decoder_resto"
        if raiz not in GRUPOS:
            raise KeyError(f"Parametro fora dos grupos conhecidos: {nome}")
        return raiz

    def modulos_do_grupo(self, grupo: str) -> List[nn.Module]:
        if grupo == "decoder_l":
            return [self.rede.decoder[j] for j in range(self.rede.l)]
        if grupo == "decoder_resto":
            return [self.rede.decoder[j] for j in range(self.rede.l, self.rede.cfg.enc_blocks)]
        return [getattr(self.rede, grupo)]

    def parametros(self, grupos: Iterable[str]) -> List[nn.Parameter]:
        selecionados: List[nn.Parameter] = []
        for grupo in grupos:
            for modulo in self.modulos_do_grupo(grupo):
                selecionados.extend(modulo.parameters())
        return selecionados

    def parametros_nomeados(self, grupos: Iterable[str]) -> Dict[str, nn.Parameter]:
        alvo = set(grupos)
        return {n: p for n, p in self.rede.named_parameters() if self.grupo_de(n) in alvo}

    def congelar(self, *grupos: str) -> None:
        for grupo in grupos:
            self.congelados.add(grupo)
            for p in self.parametros([grupo]):
                p.requires_grad_(False)
        self.aplicar_modos()

    def descongelar(self, *grupos: str) -> None:
        for grupo in grupos:
            self.congelados.discard(grupo)
            for p in self.parametros([grupo]):
                p.requires_grad_(True)
        self.aplicar_modos()

    def aplicar_modos(self, treino: bool = True) -> None:
        """Modo de treino (ou avaliação) na rede; grupos congelados ficam sempre em avaliação."""
        self.rede.train(treino)
        for grupo in self.congelados:
            for modulo in self.modulos_do_grupo(grupo):
                modulo.eval()

    def estado(self, grupos: Iterable[str] | None = None) -> Dict[str, torch.Tensor]:
        """Cópia do state_dict (pesos e estatísticas de BN), opcionalmente filtrada por grupo."""
        alvo = set(grupos) if grupos is not None else set(GRUPOS)
        return {
            nome: tensor.detach().clone()
            for nome, tensor in self.rede.state_dict().items()
            if self.grupo_de(nome) in alvo
        }

    def snapshot(self) -> Mapping[str, torch.Tensor]:
        """Instantâneo imutável de todos os tensores."""
        return MappingProxyType(self.estado())

    def restaurar(self, estado: Mapping[str, torch.Tensor]) -> None:
        """Carrega um estado parcial; as chaves ausentes ficam como estão."""
        atual = self.rede.state_dict()
        desconhecidas = sorted(set(estado) - set(atual))
        if desconhecidas:
            raise KeyError(f"Chaves desconhecidas no estado: {desconhecidas[:5]}")
        with torch.no_grad():
            for nome, tensor in estado.items():
                atual[nome].copy_(tensor.to(atual[nome].dtype))

    def verificar_finitos(self) -> None:
        for nome, p in self.rede.named_parameters():
            if not bool(torch.isfinite(p).all()):
                raise ErroNumerico(f"Parametro nao finito: {nome}")

"""
Encoder-decoder (família UNet) com cabeças de projeção g1/g2 e cabeça de segmentação.

- Encoder: enc_blocks blocos de duas convoluções 3x3 (BN + ReLU após cada uma),
  seguidos de max-pooling 2x2; canais dobram a cada bloco até 8x a base.
- Decoder: bloco j = upsampling x2 (vizinho mais próximo), concatenação com o
  skip correspondente e duas convoluções 3x3 com BN + ReLU.
- g1: achatamento, densa (g1_dims[0]) com BN + ReLU e densa final sem ativação.
- g2: conv 1x1 com BN + ReLU e conv 1x1 final sem ativação.
- Segmentação: conv 1x1 para num_classes, sem ativação.
"""

from __future__ import annotations

from typing import List, Tuple

import torch
from torch import nn
import torch.nn.functional as F

from ..config.experimento import NetworkConfig
from ..erros import ErroConfiguracao


class BlocoConv(nn.Sequential):
    """Duas convoluções 3x3 sem viés, cada uma seguida de BN e ReLU."""

    def __init__(self, entrada: int, saida: int):
        super().__init__(
            nn.Conv2d(entrada, saida, kernel_size=3, padding=1, bias=False),
            nn.BatchNorm2d(saida),
            nn.ReLU(),
            nn.Conv2d(saida, saida, kernel_size=3, padding=1, bias=False),
            nn.BatchNorm2d(saida),
            nn.ReLU(),
        )


def inicializar_fan_in(modulo: nn.Module) -> None:
    """Uniforme escalada pelo fan-in nas camadas lineares e convolucionais; viés zero."""
    for camada in modulo.modules():
        if isinstance(camada, (nn.Conv2d, nn.Linear)):
            nn.init.kaiming_uniform_(camada.weight, nonlinearity="relu")
            if camada.bias is not None:
                nn.init.zeros_(camada.bias)
        elif isinstance(camada, (nn.BatchNorm1d, nn.BatchNorm2d)):
            nn.init.ones_(camada.weight)
            nn.init.zeros_(camada.bias)


class RedeUNet(nn.Module):
    def __init__(self, cfg: NetworkConfig):
        super().__init__()
        problemas = cfg.validar()
        if problemas:
            raise ErroConfiguracao("NetworkConfig invalido: " + "; ".join(problemas))
        self.cfg = cfg
        canais = cfg.canais()
        n = cfg.enc_blocks

        self.encoder = nn.ModuleList()
        anterior = 1
        for c in canais:
            self.encoder.append(BlocoConv(anterior, c))
            anterior = c

        self.decoder = nn.ModuleList()
        for j in range(n):
            skip = canais[n - 1 - j]
            self.decoder.append(BlocoConv(anterior + skip, skip))
            anterior = skip

        altura, largura = cfg.input_size
        fator = 2 ** n
        achatado = canais[-1] * (altura // fator) * (largura // fator)
        self.g1 = nn.Sequential(
            nn.Flatten(),
            nn.Linear(achatado, cfg.g1_dims[0], bias=False),
            nn.BatchNorm1d(cfg.g1_dims[0]),
            nn.ReLU(),
            nn.Linear(cfg.g1_dims[0], cfg.g1_dims[1]),
        )

        canais_decoder_l = canais[n - cfg.dec_blocks_pretrained]
        self.g2 = nn.Sequential(
            nn.Conv2d(canais_decoder_l, cfg.g2_channels[0], kernel_size=1, bias=False),
            nn.BatchNorm2d(cfg.g2_channels[0]),
            nn.ReLU(),
            nn.Conv2d(cfg.g2_channels[0], cfg.g2_channels[1], kernel_size=1),
        )
        self.seg = nn.Conv2d(canais[0], cfg.num_classes, kernel_size=1)

        inicializar_fan_in(self)

    @property
    def l(self) -> int:  # noqa: E743
        return self.cfg.dec_blocks_pretrained

    def _verificar_entrada(self, x: torch.Tensor) -> None:
        if x.dim() != 4 or x.shape[1] != 1:
            raise ErroConfiguracao(f"Entrada deve ser B x 1 x H x W; recebido {tuple(x.shape)}")
        fator = 2 ** self.cfg.enc_blocks
        if x.shape[2] % fator or x.shape[3] % fator:
            raise ErroConfiguracao(
                f"Entrada {tuple(x.shape[2:])} nao divisivel por 2^enc_blocks={fator}"
            )

    def encoder_forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, List[torch.Tensor]]:
        """Devolve o gargalo (entrada / 2^enc_blocks) e os skips de cada nível."""
        self._verificar_entrada(x)
        skips: List[torch.Tensor] = []
        h = x
        for bloco in self.encoder:
            h = bloco(h)
            skips.append(h)
            h = F.max_pool2d(h, kernel_size=2, stride=2)
        return h, skips

    def decoder_forward(self, gargalo: torch.Tensor, skips: List[torch.Tensor], l: int) -> torch.Tensor:
        """Aplica os l primeiros blocos do decoder; saída com entrada / 2^(enc_blocks - l)."""
        if not 0 <= l <= self.cfg.enc_blocks:
            raise ErroConfiguracao(f"l={l} fora de [0, {self.cfg.enc_blocks}]")
        h = gargalo
        n = self.cfg.enc_blocks
        for j in range(l):
            h = F.interpolate(h, scale_factor=2, mode="nearest")
            h = torch.cat([h, skips[n - 1 - j]], dim=1)
            h = self.decoder[j](h)
        return h

    def g1_forward(self, gargalo: torch.Tensor) -> torch.Tensor:
        return self.g1(gargalo)

    def g2_forward(self, features: torch.Tensor) -> torch.Tensor:
        return self.g2(features)

    def seg_forward(self, x: torch.Tensor) -> torch.Tensor:
        """Logits B x num_classes x H x W com todos os blocos do decoder."""
        gargalo, skips = self.encoder_forward(x)
        h = self.decoder_forward(gargalo, skips, self.cfg.enc_blocks)
        return self.seg(h)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.seg_forward(x)

    def representacao_global(self, x: torch.Tensor) -> torch.Tensor:
        gargalo, _skips = self.encoder_forward(x)
        return self.g1_forward(gargalo)

    def representacao_local(self, x: torch.Tensor) -> torch.Tensor:
        gargalo, skips = self.encoder_forward(x)
        return self.g2_forward(self.decoder_forward(gargalo, skips, self.l))


"""
Contêiner de volume 3D e particionamento das fatias em S grupos consecutivos.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..config.constantes import MensagensErro
from ..erros import ErroConfiguracao, ErroDados


def _somente_leitura(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Volume:
    """
    Volume D×H×W (D = número de fatias 2D) com rótulos opcionais.

    Os arrays são convertidos para float32/uint8 contíguos e marcados como
    somente leitura, de modo que o volume pode ser compartilhado entre threads.
    """

    id: str
    voxels: np.ndarray
    spacing: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    labels: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        voxels = np.asarray(self.voxels, dtype=np.float32)
        if voxels.ndim != 3:
            raise ErroDados(f"Volume '{self.id}' deve ser 3D (D, H, W); recebido ndim={voxels.ndim}")
        if not np.all(np.isfinite(voxels)):
            raise ErroDados(MensagensErro.VOLUME_NAO_FINITO.format(id=self.id))

        spacing = tuple(float(np.float32(s)) for s in self.spacing)
        if len(spacing) != 3 or min(spacing) <= 0:
            raise ErroDados(MensagensErro.VOL_ESPACAMENTO_INVALIDO.format(espacamento=self.spacing))

        labels = None
        if self.labels is not None:
            bruto = np.asarray(self.labels)
            if bruto.shape != voxels.shape:
                raise ErroDados(
                    MensagensErro.VOLUME_FORMAS_DIFERENTES.format(voxels=voxels.shape, rotulos=bruto.shape)
                )
            if bruto.size and (bruto.min() < 0 or bruto.max() > 255):
                raise ErroDados(f"Rotulos do volume '{self.id}' fora de [0, 255]")
            labels = _somente_leitura(bruto.astype(np.uint8))

        object.__setattr__(self, "voxels", _somente_leitura(voxels))
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "labels", labels)

    @property
    def forma(self) -> Tuple[int, int, int]:
        return tuple(self.voxels.shape)  # type: ignore[return-value]

    @property
    def num_fatias(self) -> int:
        return int(self.voxels.shape[0])

    @property
    def tem_rotulos(self) -> bool:
        return self.labels is not None

    def fatias_da_particao(self, particao: "Partitioning", s: int) -> np.ndarray:
        """Fatias (voxels) da partição s, na ordem original."""
        ini, fim = particao.bounds[s]
        return self.voxels[ini:fim]

    def igual(self, outro: "Volume") -> bool:
        """Igualdade bit a bit de voxels, rótulos, espaçamento e id."""
        if self.id != outro.id or self.spacing != outro.spacing:
            return False
        if self.voxels.shape != outro.voxels.shape:
            return False
        if self.voxels.tobytes() != outro.voxels.tobytes():
            return False
        if (self.labels is None) != (outro.labels is None):
            return False
        return self.labels is None or np.array_equal(self.labels, outro.labels)

    def com_voxels(self, voxels: np.ndarray, labels: Optional[np.ndarray] = None) -> "Volume":
        return Volume(id=self.id, voxels=voxels, spacing=self.spacing, labels=labels)


@dataclass(frozen=True)
class Partitioning:
    """S faixas semiabertas [ini, fim) de fatias consecutivas."""

    S: int
    bounds: Tuple[Tuple[int, int], ...] = field(default_factory=tuple)

    @property
    def comprimentos(self) -> Tuple[int, ...]:
        return tuple(fim - ini for ini, fim in self.bounds)


def partition_volume(D: int, S: int) -> Partitioning:
    """
    Divide D fatias em S partições consecutivas e balanceadas.

    As fatias restantes (D mod S) vão para as primeiras partições, então os
    comprimentos nunca crescem da primeira para a última.

    Raises:
        ErroConfiguracao: S < 1 ou S > D
    """
    if S < 1 or S > D:
        raise ErroConfiguracao(MensagensErro.PARTICOES_INVALIDAS.format(s=S, d=D))
    base, resto = divmod(D, S)
    bounds = []
    ini = 0
    for s in range(S):
        fim = ini + base + (1 if s < resto else 0)
        bounds.append((ini, fim))
        ini = fim
    return Partitioning(S=S, bounds=tuple(bounds))

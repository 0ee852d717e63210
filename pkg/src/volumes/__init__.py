"""
Volumes: contêiner, formato .vol, pré-processamento e particionamento.
"""

from .conjunto import ConjuntoVolumes, EntradaManifesto, escrever_manifesto, ler_manifesto
from .formato_vol import read_volume, validar_arquivo_vol, write_volume
from .preprocessamento import normalize_volume, resample_and_pad
from .volume import Partitioning, Volume, partition_volume

__all__ = [
    "ConjuntoVolumes",
    "EntradaManifesto",
    "Partitioning",
    "Volume",
    "escrever_manifesto",
    "ler_manifesto",
    "normalize_volume",
    "partition_volume",
    "read_volume",
    "resample_and_pad",
    "validar_arquivo_vol",
    "write_volume",
]

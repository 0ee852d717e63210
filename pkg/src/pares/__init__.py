"""
Conjuntos de pares positivos e negativos para as perdas contrastivas.
"""

from .estrategias import (
    BatchItem,
    BatchPlan,
    MapaInfo,
    RegionPlan,
    compose_global_GD,
    compose_global_GDminus,
    compose_global_GR,
    compose_local_LD,
    compose_local_LR,
    formatar_plano,
    make_region_grid,
)

__all__ = [
    "BatchItem",
    "BatchPlan",
    "MapaInfo",
    "RegionPlan",
    "compose_global_GD",
    "compose_global_GDminus",
    "compose_global_GR",
    "compose_local_LD",
    "compose_local_LR",
    "formatar_plano",
    "make_region_grid",
]

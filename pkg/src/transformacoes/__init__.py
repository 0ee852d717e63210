"""
Transformações para pares contrastivos, aumentos de ajuste fino e Mixup.
"""

from .familia import (
    TransformFamily,
    TransformParams,
    amostrar_lambda_mixup,
    apply_transform,
    familia_finetune,
    familia_global,
    familia_local,
    identidade,
    mixup,
    mixup_lote,
    one_hot,
    sample_transform_pair,
)

__all__ = [
    "TransformFamily",
    "TransformParams",
    "amostrar_lambda_mixup",
    "apply_transform",
    "familia_finetune",
    "familia_global",
    "familia_local",
    "identidade",
    "mixup",
    "mixup_lote",
    "one_hot",
    "sample_transform_pair",
]

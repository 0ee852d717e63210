"""
Avaliação por Dice. A matriz de experimentos fica em src.avaliacao.matriz,
que depende do pacote de treino.
"""

from .dice import DiceReport, dice, evaluate, formatar_relatorio, prever_volume

__all__ = ["DiceReport", "dice", "evaluate", "formatar_relatorio", "prever_volume"]

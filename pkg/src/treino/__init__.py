"""
Pipeline de treino por estágios, montagem de lotes e histórico.
"""

from .estagios import ResultadoEstagio, Treinador, perda_conjunta
from .historico import HistoricoEstagio, RegistroIteracao, SeletorModelo

__all__ = [
    "HistoricoEstagio",
    "RegistroIteracao",
    "ResultadoEstagio",
    "SeletorModelo",
    "Treinador",
    "perda_conjunta",
]

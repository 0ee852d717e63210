"""
Pré-treino contrastivo global e local para segmentação volumétrica.
"""

__version__ = "1.0.0"

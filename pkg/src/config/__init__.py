"""
Módulo de configuração do sistema.
"""

from .experimento import ExperimentConfig, NetworkConfig, PhantomConfig, carregar_config

__all__ = ['ExperimentConfig', 'NetworkConfig', 'PhantomConfig', 'carregar_config']

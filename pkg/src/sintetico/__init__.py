"""
Dados sintéticos alinhados para experimentos de bancada.
"""

from .fantoma import PhantomSpec, escrever_dataset, generate_dataset, medir_alinhamento

__all__ = ["PhantomSpec", "escrever_dataset", "generate_dataset", "medir_alinhamento"]

"""
Sanitização de identificadores usados em nomes de arquivos e colunas.
"""

import re
from typing import Optional

import unidecode


TAMANHO_MAXIMO_IDENTIFICADOR = 48


def sanitizar_identificador(texto: Optional[str], padrao: str = "item") -> str:
    """
    Converte um rótulo livre em identificador ASCII seguro para o sistema de arquivos.

    Remove acentos, troca qualquer sequência fora de [a-z0-9+-] por "_" e limita o
    tamanho. Os sinais "+" e "-" são preservados porque compõem nomes de braços
    como "GD+LR" e "GDminus".

    Args:
        texto: Rótulo original (pode ser None)
        padrao: Valor devolvido quando nada sobra após a limpeza

    Returns:
        Identificador em minúsculas, nunca vazio
    """
    if not texto:
        return padrao

    texto = str(texto).replace('\n', ' ').replace('\r', ' ').replace('\t', ' ')
    texto_ascii = unidecode.unidecode(texto).lower()
    texto_limpo = re.sub(r'[^a-z0-9+\-]+', '_', texto_ascii)
    texto_limpo = re.sub(r'_+', '_', texto_limpo).strip('_')

    if not texto_limpo:
        return padrao
    return texto_limpo[:TAMANHO_MAXIMO_IDENTIFICADOR]

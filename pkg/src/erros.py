"""
Exceções do projeto.
Cada família de erro corresponde a um código de saída da CLI.
"""

from typing import Optional


class ErroConfiguracao(ValueError):
    """Configuração inválida (hiperparâmetros, estratégias, geometria)."""

    codigo_saida = 2


class ErroParametro(ErroConfiguracao):
    """Parâmetro de operação incompatível com a entrada (forma, caixa, lambda)."""


class ErroDados(ValueError):
    """Dados de entrada inconsistentes (rótulos, volumes, divisões)."""

    codigo_saida = 3


class ErroFormato(ErroDados):
    """Arquivo .vol ou checkpoint mal formado."""

    def __init__(self, mensagem: str, offset: Optional[int] = None):
        """
        Args:
            mensagem: Descrição do problema
            offset: Posição em bytes onde o problema foi detectado (opcional)
        """
        self.mensagem = mensagem
        self.offset = offset
        if offset is not None:
            mensagem = f"{mensagem} (offset {offset})"
        super().__init__(mensagem)


class ErroVolumeDegenerado(ErroDados):
    """Volume com intensidade constante entre os percentis 1 e 99."""


class ErroNumerico(ArithmeticError):
    """Vetor nulo na similaridade de cosseno, perda não finita, gradiente divergente."""

    codigo_saida = 4


class ErroBraco(RuntimeError):
    """Falha de um braço da matriz de experimentos, com braço e estágio."""

    def __init__(self, braco: str, estagio: str, causa: BaseException):
        self.braco = braco
        self.estagio = estagio
        self.causa = causa
        super().__init__(f"Braco '{braco}' falhou no estagio '{estagio}': {causa}")

    @property
    def codigo_saida(self) -> int:
        return codigo_saida_para(self.causa)


def codigo_saida_para(erro: BaseException) -> int:
    """
    Traduz uma exceção para o código de saída da CLI.

    Returns:
        2 configuração, 3 dados/formato, 4 numérico, 1 para o resto
    """
    return int(getattr(erro, "codigo_saida", 1))

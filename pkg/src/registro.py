"""
Registro de mensagens de execução.
Formata linhas "[TIPO] mensagem" e as entrega ao callback do chamador (ou ao stdout).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from datetime import datetime
from typing import Callable, Dict, List, Optional


NIVEIS = {
    "DEBUG": 10,
    "INFO": 20,
    "SUCESSO": 25,
    "ATENCAO": 30,
    "ERRO": 40,
}


@dataclass(slots=True)
class RegistroMensagem:
    tipo: str
    mensagem: str
    horario: str

    def para_dict(self) -> Dict[str, str]:
        return asdict(self)


class Registrador:
    """Centraliza logs dos estágios com filtro por nível mínimo."""

    def __init__(
        self,
        callback_log: Optional[Callable[[str], None]] = None,
        nivel_minimo: str = "INFO",
    ) -> None:
        """
        Args:
            callback_log: Função que recebe a linha já formatada. Sem ela, usa print.
            nivel_minimo: Tipos abaixo deste nível são descartados.
        """
        if nivel_minimo.upper() not in NIVEIS:
            raise ValueError(
                f"Nivel de log desconhecido: {nivel_minimo}. Use um de {', '.join(NIVEIS)}."
            )
        self.callback_log = callback_log
        self.nivel_minimo = nivel_minimo.upper()
        self.mensagens: List[RegistroMensagem] = []

    def log(self, tipo: str, mensagem: str) -> None:
        tipo = tipo.upper()
        if NIVEIS.get(tipo, NIVEIS["INFO"]) < NIVEIS[self.nivel_minimo]:
            return
        registro = RegistroMensagem(
            tipo=tipo,
            mensagem=mensagem,
            horario=datetime.now().strftime("%H:%M:%S"),
        )
        self.mensagens.append(registro)
        linha = f"[{tipo}] {mensagem}"
        if self.callback_log:
            self.callback_log(linha)
        else:
            print(linha)

    def log_linha(self, linha: str) -> None:
        """Recebe uma linha já no formato "[TIPO] mensagem" (callback de outro componente)."""
        tipo = "INFO"
        mensagem = linha
        if linha.startswith("[") and "]" in linha:
            tipo = linha[1:linha.index("]")].strip()
            mensagem = linha[linha.index("]") + 1:].strip()
        self.log(tipo, mensagem)

    def debug(self, mensagem: str) -> None:
        self.log("DEBUG", mensagem)

    def info(self, mensagem: str) -> None:
        self.log("INFO", mensagem)

    def sucesso(self, mensagem: str) -> None:
        self.log("SUCESSO", mensagem)

    def atencao(self, mensagem: str) -> None:
        self.log("ATENCAO", mensagem)

    def erro(self, mensagem: str) -> None:
        self.log("ERRO", mensagem)

    def banner(self, titulo: str, tipo: str = "INFO") -> None:
        """Separador visual entre estágios."""
        linha = "=" * 60
        self.log(tipo, linha)
        self.log(tipo, titulo)
        self.log(tipo, linha)

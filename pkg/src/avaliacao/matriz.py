"""
Matriz de experimentos: cada braço (estratégia de inicialização) é treinado
de ponta a ponta para cada |X_tr| e semente e avaliado no mesmo X_ts.

Nomes de braço:
    random            sem pré-treino
    GR | GDminus | GD pré-treino global
    <global>+LR|LD    pré-treino global seguido do local
    joint:<g>+<l>     pré-treino conjunto (L_g + lambda_l L_l)
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from ..config.constantes import ESTRATEGIAS_GLOBAIS, ORDENACAO_REFERENCIA_ACDC_XTR1
from ..config.experimento import ExperimentConfig
from ..erros import ErroBraco, ErroConfiguracao
from ..registro import Registrador
from ..sanitizers import sanitizar_identificador
from ..treino.estagios import Treinador
from ..volumes.conjunto import ConjuntoVolumes
from .dice import DiceReport, evaluate


NOME_CSV_MATRIZ = "matriz.csv"
NOME_METADADOS_MATRIZ = "matriz_metadata.json"
SEMENTE_RESUMO = "resumo"


@dataclass(frozen=True)
class Braco:
    nome: str
    global_strategy: Optional[str] = None
    local_strategy: str = "none"
    conjunto: bool = False

    @property
    def estagios(self) -> Tuple[str, ...]:
        if self.conjunto:
            return ("joint", "finetune")
        estagios: List[str] = []
        if self.global_strategy:
            estagios.append("global")
        if self.local_strategy != "none":
            estagios.append("local")
        return tuple(estagios) + ("finetune",)


def interpretar_braco(nome: str) -> Braco:
    """
    Raises:
        ErroConfiguracao: nome fora da gramática dos braços
    """
    texto = nome.strip()
    if texto == "random":
        return Braco(nome=texto)
    conjunto = texto.startswith("joint:")
    corpo = texto[len("joint:"):] if conjunto else texto
    partes = corpo.split("+")
    if len(partes) > 2 or partes[0] not in ESTRATEGIAS_GLOBAIS:
        raise ErroConfiguracao(f"Braco invalido: '{nome}'")
    local = partes[1] if len(partes) == 2 else "none"
    if local not in ("none", "LR", "LD"):
        raise ErroConfiguracao(f"Braco invalido: '{nome}' (estrategia local '{local}')")
    if conjunto and local == "none":
        raise ErroConfiguracao(f"Braco conjunto '{nome}' exige estrategia local")
    return Braco(nome=texto, global_strategy=partes[0], local_strategy=local, conjunto=conjunto)


@dataclass(frozen=True)
class ResultadoBraco:
    braco: str
    x_tr: int
    semente: int
    relatorio: DiceReport
    segundos: float


@dataclass
class ExperimentMatrix:
    num_classes: int
    resultados: List[ResultadoBraco] = field(default_factory=list)

    def colunas(self) -> List[str]:
        return (
            ["arm", "x_tr", "seed"]
            + [f"dsc_classe_{c}" for c in range(1, self.num_classes)]
            + ["mean_dsc", "sd_dsc", "wallclock_s"]
        )

    def chaves(self) -> List[Tuple[str, int]]:
        return list(dict.fromkeys((r.braco, r.x_tr) for r in self.resultados))

    def do_grupo(self, braco: str, x_tr: int) -> List[ResultadoBraco]:
        return sorted(
            (r for r in self.resultados if r.braco == braco and r.x_tr == x_tr),
            key=lambda r: r.semente,
        )

    def medias_por_braco(self, x_tr: int) -> Dict[str, float]:
        return {
            braco: float(np.mean([r.relatorio.media for r in self.do_grupo(braco, x)]))
            for braco, x in self.chaves()
            if x == x_tr
        }

    def linhas(self) -> List[Dict[str, str]]:
        """Uma linha por (braço, |X_tr|, semente) e uma linha de resumo por (braço, |X_tr|)."""
        saida: List[Dict[str, str]] = []
        for braco, x_tr in self.chaves():
            grupo = self.do_grupo(braco, x_tr)
            for r in grupo:
                linha = {"arm": braco, "x_tr": str(x_tr), "seed": str(r.semente)}
                for c, valor in enumerate(r.relatorio.por_classe, start=1):
                    linha[f"dsc_classe_{c}"] = f"{valor:.6f}"
                linha["mean_dsc"] = f"{r.relatorio.media:.6f}"
                linha["sd_dsc"] = ""
                linha["wallclock_s"] = f"{r.segundos:.3f}"
                saida.append(linha)
            medias = np.array([r.relatorio.media for r in grupo])
            por_classe = np.array([r.relatorio.por_classe for r in grupo])
            resumo = {"arm": braco, "x_tr": str(x_tr), "seed": SEMENTE_RESUMO}
            for c in range(1, self.num_classes):
                resumo[f"dsc_classe_{c}"] = f"{por_classe[:, c - 1].mean():.6f}"
            resumo["mean_dsc"] = f"{medias.mean():.6f}"
            resumo["sd_dsc"] = f"{medias.std(ddof=1) if len(medias) > 1 else 0.0:.6f}"
            resumo["wallclock_s"] = f"{sum(r.segundos for r in grupo):.3f}"
            saida.append(resumo)
        return saida

    def escrever_csv(self, caminho: str | Path) -> Path:
        caminho = Path(caminho)
        caminho.parent.mkdir(parents=True, exist_ok=True)
        with open(caminho, "w", encoding="utf-8", newline="") as arquivo:
            escritor = csv.DictWriter(arquivo, fieldnames=self.colunas())
            escritor.writeheader()
            escritor.writerows(self.linhas())
        return caminho


def _executar_braco(
    cfg: ExperimentConfig,
    braco: Braco,
    conjunto: ConjuntoVolumes,
    semente: int,
    diretorio: Optional[Path],
    callback_log: Optional[Callable[[str], None]],
    callback_progresso: Optional[Callable[[str, Dict[str, Any]], None]],
) -> DiceReport:
    estagio = "configuracao"
    try:
        treinador = Treinador(
            cfg,
            conjunto,
            semente=semente,
            diretorio_saida=diretorio,
            callback_log=callback_log,
            callback_progresso=callback_progresso,
        )
        pre_treino = None
        for estagio in braco.estagios:
            if estagio == "global":
                pre_treino = treinador.pretrain_global().checkpoint
            elif estagio == "local":
                pre_treino = treinador.pretrain_local(pre_treino).checkpoint
            elif estagio == "joint":
                pre_treino = treinador.joint_pretrain().checkpoint
            else:
                ajustado = treinador.finetune(pre_treino).checkpoint
        estagio = "avaliacao"
        return evaluate(ajustado, conjunto.teste, cfg.network.num_classes, semente=semente)
    except ErroBraco:
        raise
    except Exception as exc:
        raise ErroBraco(braco.nome, estagio, exc) from exc


def run_matrix(
    cfg: ExperimentConfig,
    conjunto: ConjuntoVolumes,
    diretorio_saida: Optional[str | Path] = None,
    callback_log: Optional[Callable[[str], None]] = None,
    callback_progresso: Optional[Callable[[str, Dict[str, Any]], None]] = None,
) -> ExperimentMatrix:
    """
    Executa braços x |X_tr| x sementes, nessa ordem.

    Raises:
        ErroConfiguracao: lista de braços vazia ou braço inválido
        ErroBraco: falha de um braço, com o nome do braço e o estágio
    """
    if not cfg.arms:
        raise ErroConfiguracao("Matriz sem bracos")
    bracos = [interpretar_braco(nome) for nome in cfg.arms]
    if not conjunto.teste:
        raise ErroConfiguracao("Matriz exige volumes de teste (X_ts)")
    registro = Registrador(callback_log)
    destino = Path(diretorio_saida) if diretorio_saida else None
    matriz = ExperimentMatrix(num_classes=cfg.network.num_classes)

    for braco in bracos:
        for x_tr in cfg.x_tr_grid:
            cfg_braco = cfg.com_alteracoes(
                global_strategy=braco.global_strategy or cfg.global_strategy,
                local_strategy=braco.local_strategy,
                n_tr=int(x_tr),
            )
            for semente in cfg.seeds:
                registro.banner(f"BRACO {braco.nome} | |X_tr|={x_tr} | semente {semente}")
                diretorio = (
                    destino / sanitizar_identificador(braco.nome, "braco") / f"xtr{x_tr}" / f"semente{semente}"
                    if destino
                    else None
                )
                inicio = time.perf_counter()
                relatorio = _executar_braco(
                    cfg_braco, braco, conjunto, int(semente), diretorio, callback_log, callback_progresso
                )
                segundos = time.perf_counter() - inicio
                matriz.resultados.append(ResultadoBraco(braco.nome, int(x_tr), int(semente), relatorio, segundos))
                registro.sucesso(f"{braco.nome} |X_tr|={x_tr} semente {semente}: DSC {relatorio.media:.4f}")

    if destino:
        matriz.escrever_csv(destino / NOME_CSV_MATRIZ)
        escrever_metadados(matriz, cfg, destino / NOME_METADADOS_MATRIZ)
    return matriz


def escrever_metadados(matriz: ExperimentMatrix, cfg: ExperimentConfig, caminho: str | Path) -> Path:
    """Eco da configuração, ordenação de referência e médias observadas por |X_tr|."""
    caminho = Path(caminho)
    referencia = sorted(ORDENACAO_REFERENCIA_ACDC_XTR1.items(), key=lambda item: item[1])
    metadados = {
        "ordenacao_referencia_acdc_xtr1": [{"arm": braco, "dsc": valor} for braco, valor in referencia],
        "medias_observadas": {
            str(x_tr): matriz.medias_por_braco(int(x_tr)) for x_tr in dict.fromkeys(r.x_tr for r in matriz.resultados)
        },
        "config": cfg.para_dict(),
    }
    caminho.parent.mkdir(parents=True, exist_ok=True)
    with open(caminho, "w", encoding="utf-8") as arquivo:
        json.dump(metadados, arquivo, ensure_ascii=False, indent=2)
    return caminho

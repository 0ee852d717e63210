"""
Ponto de entrada de linha de comando do pré-treino contrastivo global e local.

Uso:
    python main.py gen-data --config configs/desk.json --seed 0
    python main.py pretrain-global --config configs/desk.json --out saida/
    python main.py pretrain-local --encoder saida/global.ckpt --out saida/
    python main.py finetune --pretreino saida/local.ckpt --out saida/
    python main.py evaluate --checkpoint saida/finetune.ckpt
    python main.py run-matrix --config configs/desk.json --out matriz/

Códigos de saída: 0 sucesso, 2 configuração, 3 dados/formato, 4 numérico.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Callable, Iterable, Optional

from src.avaliacao.dice import evaluate, formatar_relatorio
from src.avaliacao.matriz import run_matrix
from src.config import ExperimentConfig, carregar_config
from src.erros import ErroConfiguracao, codigo_saida_para
from src.pares.estrategias import formatar_plano
from src.rede.checkpoint import load_checkpoint, resumo_checkpoint, save_checkpoint
from src.rede.gradcheck import suite_gradientes
from src.registro import NIVEIS, Registrador
from src.sintetico.fantoma import PhantomSpec, escrever_dataset, generate_dataset
from src.transformacoes.familia import familia_local
from src.treino.amostragem import gerador_do_estagio, montar_lote_local, plano_global
from src.treino.estagios import Treinador
from src.volumes.conjunto import ConjuntoVolumes
from src.volumes.formato_vol import _cli as validar_vol_cli


SUBCOMANDOS = (
    "gen-data",
    "pretrain-global",
    "pretrain-local",
    "joint-pretrain",
    "finetune",
    "evaluate",
    "gradcheck",
    "run-matrix",
    "validate-vol",
)


def _parser() -> argparse.ArgumentParser:
    comum = argparse.ArgumentParser(add_help=False)
    comum.add_argument("--config", help="Arquivo JSON de configuracao (padrao: escala completa)")
    comum.add_argument("--seed", type=int, help="Semente u64; substitui 'seeds' da configuracao")
    comum.add_argument("--out", help="Diretorio de saida; substitui 'out_dir'")
    comum.add_argument("--data", help="Diretorio de dados; substitui 'data_dir'")
    comum.add_argument("--log-level", default="INFO", choices=list(NIVEIS), help="Nivel minimo de log")

    parser = argparse.ArgumentParser(description="Pre-treino contrastivo global e local para segmentacao volumetrica.")
    sub = parser.add_subparsers(dest="comando", required=True)

    sub.add_parser("gen-data", parents=[comum], help="Gera o conjunto sintetico alinhado")

    for nome in ("pretrain-global", "pretrain-local", "joint-pretrain", "finetune"):
        p = sub.add_parser(nome, parents=[comum])
        p.add_argument("--iteracoes", type=int, help="Total de iteracoes do estagio")
        p.add_argument("--retomar", help="Checkpoint do mesmo estagio a retomar")
        if nome in ("pretrain-global", "pretrain-local"):
            p.add_argument("--dump-plan", action="store_true", help="Imprime o plano do primeiro lote e sai")
    sub.choices["pretrain-local"].add_argument("--encoder", help="Checkpoint do pre-treino global")
    sub.choices["finetune"].add_argument("--pretreino", help="Checkpoint de pre-treino (omita para inicializacao aleatoria)")

    p_eval = sub.add_parser("evaluate", parents=[comum])
    p_eval.add_argument("--checkpoint", required=True, help="Checkpoint do ajuste fino")

    p_grad = sub.add_parser("gradcheck", parents=[comum])
    p_grad.add_argument("--amostras", type=int, default=200, help="Entradas verificadas por perda")

    sub.add_parser("run-matrix", parents=[comum])

    p_vol = sub.add_parser("validate-vol", parents=[comum])
    p_vol.add_argument("arquivos", nargs="+", help="Arquivos .vol a validar")
    return parser


def _configuracao(args: argparse.Namespace) -> ExperimentConfig:
    cfg = carregar_config(args.config)
    alteracoes = {}
    if args.seed is not None:
        alteracoes["seeds"] = (args.seed,)
    if args.out:
        alteracoes["out_dir"] = args.out
    if args.data:
        alteracoes["data_dir"] = args.data
    return cfg.com_alteracoes(**alteracoes) if alteracoes else cfg


def _saida(cfg: ExperimentConfig) -> Path:
    destino = Path(cfg.out_dir or "saida")
    destino.mkdir(parents=True, exist_ok=True)
    return destino


def _carregar_conjunto(cfg: ExperimentConfig, log: Callable[[str], None]) -> ConjuntoVolumes:
    return ConjuntoVolumes.carregar(
        cfg.data_dir,
        target_spacing=cfg.target_spacing,
        target_size=cfg.network.input_size,
        normalizar=cfg.normalize,
        n_pre=cfg.n_pre,
        n_ts=cfg.n_ts,
        callback_log=log,
    )


def _carregar_opcional(caminho: Optional[str]):
    return load_checkpoint(caminho) if caminho else None


def _gen_data(cfg: ExperimentConfig, registro: Registrador) -> int:
    spec = PhantomSpec(
        num_volumes=cfg.n_pre + cfg.n_ts,
        shape=cfg.phantom.shape,
        num_classes=cfg.phantom.num_classes,
        seed=cfg.seeds[0],
        inter_subject_jitter=cfg.phantom.inter_subject_jitter,
        intensity_jitter=cfg.phantom.intensity_jitter,
    )
    volumes = generate_dataset(spec)
    manifesto = escrever_dataset(volumes, cfg.data_dir, cfg.n_pre, callback_log=registro.log_linha)
    registro.info(f"Manifesto: {manifesto}")
    return 0


def _dump_plan(cfg: ExperimentConfig, conjunto: ConjuntoVolumes, comando: str) -> int:
    semente = cfg.seeds[0]
    if comando == "pretrain-global":
        plano = plano_global(cfg, conjunto.pretreino, gerador_do_estagio(semente, "global"))
    else:
        rede_cfg = cfg.network
        fator = 2 ** (rede_cfg.enc_blocks - rede_cfg.dec_blocks_pretrained)
        forma = (rede_cfg.input_size[0] // fator, rede_cfg.input_size[1] // fator)
        plano = montar_lote_local(
            cfg, conjunto.pretreino, familia_local(), gerador_do_estagio(semente, "local"),
            forma, rede_cfg.g2_channels[1],
        ).plano
    print(formatar_plano(plano))
    return 0


def _estagio(args: argparse.Namespace, cfg: ExperimentConfig, registro: Registrador) -> int:
    conjunto = _carregar_conjunto(cfg, registro.log_linha)
    if getattr(args, "dump_plan", False):
        return _dump_plan(cfg, conjunto, args.comando)

    destino = _saida(cfg)
    treinador = Treinador(
        cfg,
        conjunto,
        diretorio_saida=destino,
        callback_log=registro.log_linha,
        nivel_log=args.log_level,
    )
    retomar = _carregar_opcional(args.retomar)
    if args.comando == "pretrain-global":
        resultado, nome = treinador.pretrain_global(args.iteracoes, retomar), "global.ckpt"
    elif args.comando == "pretrain-local":
        encoder = _carregar_opcional(args.encoder)
        resultado, nome = treinador.pretrain_local(encoder, args.iteracoes, retomar), "local.ckpt"
    elif args.comando == "joint-pretrain":
        resultado, nome = treinador.joint_pretrain(args.iteracoes, retomar), "joint.ckpt"
    else:
        pretreino = _carregar_opcional(args.pretreino)
        resultado, nome = treinador.finetune(pretreino, args.iteracoes, retomar), "finetune.ckpt"
    checksum = save_checkpoint(resultado.checkpoint, destino / nome)
    registro.sucesso(f"Checkpoint gravado em {destino / nome} (sha256 {checksum[:16]})")
    return 0


def _evaluate(args: argparse.Namespace, cfg: ExperimentConfig, registro: Registrador) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    registro.info(f"Checkpoint: {resumo_checkpoint(ckpt)}")
    conjunto = _carregar_conjunto(cfg, registro.log_linha)
    relatorio = evaluate(ckpt, conjunto.teste, int(ckpt.rede["num_classes"]), semente=cfg.seeds[0])
    print(formatar_relatorio(relatorio))
    destino = _saida(cfg) / "avaliacao.json"
    with open(destino, "w", encoding="utf-8") as arquivo:
        json.dump(
            {
                "media": relatorio.media,
                "por_classe": list(relatorio.por_classe),
                "por_volume": {id_volume: list(valores) for id_volume, valores in relatorio.por_volume},
                "semente": relatorio.semente,
            },
            arquivo,
            ensure_ascii=False,
            indent=2,
        )
    return 0


def _gradcheck(args: argparse.Namespace, cfg: ExperimentConfig, registro: Registrador) -> int:
    relatorios = suite_gradientes(semente=cfg.seeds[0], amostras=args.amostras, callback_log=registro.log_linha)
    return 0 if all(r.aprovado for r in relatorios.values()) else 4


def _run_matrix(cfg: ExperimentConfig, registro: Registrador) -> int:
    conjunto = _carregar_conjunto(cfg, registro.log_linha)
    destino = _saida(cfg)
    matriz = run_matrix(cfg, conjunto, destino, callback_log=registro.log_linha)
    for braco, media in matriz.medias_por_braco(cfg.x_tr_grid[0]).items():
        registro.info(f"{braco}: DSC medio {media:.4f}")
    return 0


def _validate_vol(args: argparse.Namespace) -> int:
    return validar_vol_cli(args.arquivos)


def _cli(argv: Iterable[str] | None = None) -> int:
    args = _parser().parse_args(list(argv) if argv is not None else None)
    registro = Registrador(nivel_minimo=args.log_level)
    try:
        if args.comando == "validate-vol":
            return _validate_vol(args)
        cfg = _configuracao(args)
        if args.comando == "gen-data":
            return _gen_data(cfg, registro)
        if args.comando == "evaluate":
            return _evaluate(args, cfg, registro)
        if args.comando == "gradcheck":
            return _gradcheck(args, cfg, registro)
        if args.comando == "run-matrix":
            return _run_matrix(cfg, registro)
        if args.comando in SUBCOMANDOS:
            return _estagio(args, cfg, registro)
        raise ErroConfiguracao(f"Subcomando desconhecido: {args.comando}")
    except Exception as erro:
        codigo = codigo_saida_para(erro)
        print(f"\n[ERRO] {erro}", file=sys.stderr)
        if codigo == 1:
            raise
        return codigo


if __name__ == "__main__":
    raise SystemExit(_cli())

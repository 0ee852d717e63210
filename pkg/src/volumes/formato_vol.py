"""
Leitura e escrita do contêiner binário .vol e validador de arquivos.

Layout (little-endian, sem compressão e sem bytes de preenchimento):
- magic "SSLV" (4 bytes)
- versão u32 = 1
- D, H, W como u32
- espaçamento 3 x f32 (mm)
- has_labels u8 (0/1)
- voxels D*H*W x f32 (W varia mais rápido)
- rótulos D*H*W x u8, somente se has_labels
"""

from __future__ import annotations

import argparse
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from ..config.constantes import MensagensErro
from ..erros import ErroDados, ErroFormato
from .volume import Volume


MAGIC = b"SSLV"
VERSAO_FORMATO = 1
CABECALHO = struct.Struct("<4sIIII3fB")
TAMANHO_CABECALHO = CABECALHO.size  # 33

# Offsets de cada campo no cabeçalho
OFFSET_MAGIC = 0
OFFSET_VERSAO = 4
OFFSET_FORMA = 8
OFFSET_ESPACAMENTO = 20
OFFSET_FLAG_ROTULOS = 32


def _tamanho_esperado(d: int, h: int, w: int, tem_rotulos: bool) -> int:
    n = d * h * w
    return TAMANHO_CABECALHO + 4 * n + (n if tem_rotulos else 0)


def codificar_volume(v: Volume) -> bytes:
    d, h, w = v.forma
    cabecalho = CABECALHO.pack(
        MAGIC, VERSAO_FORMATO, d, h, w, *v.spacing, 1 if v.tem_rotulos else 0
    )
    partes = [cabecalho, v.voxels.astype("<f4", copy=False).tobytes(order="C")]
    if v.tem_rotulos:
        partes.append(v.labels.astype(np.uint8, copy=False).tobytes(order="C"))
    return b"".join(partes)


def decodificar_volume(conteudo: bytes, id_volume: str) -> Volume:
    """
    Decodifica bytes .vol em um Volume.

    Raises:
        ErroFormato: magic, versão, forma, espaçamento, flag ou tamanho inválidos
    """
    if len(conteudo) < TAMANHO_CABECALHO:
        if conteudo[:4] != MAGIC[: len(conteudo[:4])]:
            raise ErroFormato(
                MensagensErro.VOL_MAGIC_INVALIDO.format(esperado=MAGIC, encontrado=conteudo[:4]),
                offset=OFFSET_MAGIC,
            )
        raise ErroFormato(
            MensagensErro.VOL_TRUNCADO.format(esperado=TAMANHO_CABECALHO, encontrado=len(conteudo)),
            offset=len(conteudo),
        )

    magic, versao, d, h, w, s_d, s_h, s_w, flag = CABECALHO.unpack_from(conteudo, 0)
    if magic != MAGIC:
        raise ErroFormato(
            MensagensErro.VOL_MAGIC_INVALIDO.format(esperado=MAGIC, encontrado=magic),
            offset=OFFSET_MAGIC,
        )
    if versao != VERSAO_FORMATO:
        raise ErroFormato(MensagensErro.VOL_VERSAO_INVALIDA.format(versao=versao), offset=OFFSET_VERSAO)
    if min(d, h, w) < 1:
        raise ErroFormato(MensagensErro.VOL_FORMA_INVALIDA.format(d=d, h=h, w=w), offset=OFFSET_FORMA)
    espacamento = (s_d, s_h, s_w)
    if not all(np.isfinite(espacamento)) or min(espacamento) <= 0:
        raise ErroFormato(
            MensagensErro.VOL_ESPACAMENTO_INVALIDO.format(espacamento=espacamento),
            offset=OFFSET_ESPACAMENTO,
        )
    if flag not in (0, 1):
        raise ErroFormato(MensagensErro.VOL_FLAG_ROTULOS.format(valor=flag), offset=OFFSET_FLAG_ROTULOS)

    esperado = _tamanho_esperado(d, h, w, bool(flag))
    if len(conteudo) < esperado:
        raise ErroFormato(
            MensagensErro.VOL_TRUNCADO.format(esperado=esperado, encontrado=len(conteudo)),
            offset=len(conteudo),
        )
    if len(conteudo) > esperado:
        raise ErroFormato(
            MensagensErro.VOL_BYTES_EXCEDENTES.format(excedente=len(conteudo) - esperado),
            offset=esperado,
        )

    n = d * h * w
    voxels = np.frombuffer(conteudo, dtype="<f4", count=n, offset=TAMANHO_CABECALHO)
    voxels = voxels.astype(np.float32).reshape(d, h, w)
    labels = None
    if flag:
        labels = np.frombuffer(conteudo, dtype=np.uint8, count=n, offset=TAMANHO_CABECALHO + 4 * n)
        labels = labels.reshape(d, h, w).copy()

    if not np.all(np.isfinite(voxels)):
        raise ErroFormato(MensagensErro.VOLUME_NAO_FINITO.format(id=id_volume), offset=TAMANHO_CABECALHO)
    return Volume(id=id_volume, voxels=voxels, spacing=espacamento, labels=labels)


def read_volume(path: str | Path, id_volume: Optional[str] = None) -> Volume:
    """
    Lê um arquivo .vol. O id padrão é o nome do arquivo sem extensão.

    Raises:
        ErroDados: arquivo inexistente
        ErroFormato: conteúdo mal formado (com offset em bytes)
    """
    caminho = Path(path)
    if not caminho.exists():
        raise ErroDados(f"Arquivo .vol nao encontrado: {caminho}")
    return decodificar_volume(caminho.read_bytes(), id_volume or caminho.stem)


def write_volume(v: Volume, path: str | Path) -> None:
    caminho = Path(path)
    caminho.parent.mkdir(parents=True, exist_ok=True)
    caminho.write_bytes(codificar_volume(v))


# ============================================================================
# VALIDAÇÃO DE ARQUIVOS
# ============================================================================


@dataclass(frozen=True)
class ErroArquivoVol:
    offset: Optional[int]
    mensagem: str

    def formatar(self) -> str:
        if self.offset is None:
            return self.mensagem
        return f"Offset {self.offset}: {self.mensagem}"


@dataclass(frozen=True)
class ResultadoValidacaoVol:
    caminho: Path
    forma: Optional[tuple]
    tem_rotulos: bool
    erros: Sequence[ErroArquivoVol]

    @property
    def valido(self) -> bool:
        return not self.erros


def validar_arquivo_vol(path: str | Path) -> ResultadoValidacaoVol:
    """Valida um .vol sem levantar exceção; devolve o relatório com offsets."""
    caminho = Path(path)
    erros: List[ErroArquivoVol] = []
    forma = None
    tem_rotulos = False
    try:
        volume = read_volume(caminho)
        forma = volume.forma
        tem_rotulos = volume.tem_rotulos
    except ErroFormato as exc:
        erros.append(ErroArquivoVol(offset=exc.offset, mensagem=exc.mensagem))
    except ErroDados as exc:
        erros.append(ErroArquivoVol(offset=None, mensagem=str(exc)))
    return ResultadoValidacaoVol(caminho=caminho, forma=forma, tem_rotulos=tem_rotulos, erros=erros)


def _cli(argv: Iterable[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Valida arquivos .vol.")
    parser.add_argument("arquivos", nargs="+", help="Caminhos dos arquivos .vol a validar")
    args = parser.parse_args(list(argv) if argv is not None else None)

    codigo = 0
    for arquivo in args.arquivos:
        resultado = validar_arquivo_vol(arquivo)
        if resultado.valido:
            d, h, w = resultado.forma
            rotulos = "com rotulos" if resultado.tem_rotulos else "sem rotulos"
            print(f"OK: {resultado.caminho} | {d}x{h}x{w} {rotulos}")
            continue
        codigo = 3
        print(f"ERRO: {resultado.caminho} | {len(resultado.erros)} problema(s) encontrado(s).")
        for erro in resultado.erros:
            print(f"- {erro.formatar()}")
    return codigo


if __name__ == "__main__":
    raise SystemExit(_cli())

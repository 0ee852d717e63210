import tempfile
import unittest
from pathlib import Path

import torch

from src.config.experimento import ExperimentConfig, NetworkConfig
from src.erros import ErroConfiguracao, ErroDados, ErroFormato, ErroNumerico
from src.rede.checkpoint import (
    Checkpoint,
    load_checkpoint,
    rede_de_checkpoint,
    resumo_checkpoint,
    save_checkpoint,
)
from src.rede.parametros import GRUPOS, ParameterStore
from src.rede.unet import RedeUNet


def config_pequena(**alteracoes) -> NetworkConfig:
    valores = dict(
        enc_blocks=3,
        base_channels=4,
        max_channel_multiplier=8,
        dec_blocks_pretrained=1,
        g1_dims=(16, 8),
        g2_channels=(8, 4),
        num_classes=3,
        input_size=(32, 32),
    )
    valores.update(alteracoes)
    return NetworkConfig(**valores)


def nova_rede(semente: int = 0, **alteracoes) -> RedeUNet:
    torch.manual_seed(semente)
    return RedeUNet(config_pequena(**alteracoes))


def checkpoint_da_rede(rede: RedeUNet) -> Checkpoint:
    config = ExperimentConfig(network=rede.cfg).para_dict()
    return Checkpoint(
        config=config,
        rede=config["network"],
        parametros=ParameterStore(rede).estado(),
        estagio="global",
        metricas={"perda_final": 1.25},
    )


class TestArquitetura(unittest.TestCase):
    def test_formas_das_saidas(self) -> None:
        rede = nova_rede()
        x = torch.rand((2, 1, 32, 32))
        gargalo, skips = rede.encoder_forward(x)
        self.assertEqual(tuple(gargalo.shape), (2, 16, 4, 4))
        self.assertEqual([tuple(s.shape[1:]) for s in skips], [(4, 32, 32), (8, 16, 16), (16, 8, 8)])
        self.assertEqual(tuple(rede.decoder_forward(gargalo, skips, 1).shape), (2, 16, 8, 8))
        self.assertEqual(tuple(rede.representacao_global(x).shape), (2, 8))
        self.assertEqual(tuple(rede.representacao_local(x).shape), (2, 4, 8, 8))
        self.assertEqual(tuple(rede(x).shape), (2, 3, 32, 32))

    def test_profundidade_do_decoder_muda_o_mapa_local(self) -> None:
        rede = nova_rede(dec_blocks_pretrained=2)
        self.assertEqual(tuple(rede.representacao_local(torch.rand((2, 1, 32, 32))).shape), (2, 4, 16, 16))

    def test_canais_limitados_pelo_multiplicador(self) -> None:
        cfg = config_pequena(enc_blocks=4, max_channel_multiplier=4, base_channels=2)
        self.assertEqual(cfg.canais(), (2, 4, 8, 8))

    def test_entrada_nao_divisivel_e_erro(self) -> None:
        with self.assertRaises(ErroConfiguracao):
            config_pequena(input_size=(30, 30))
        with self.assertRaises(ErroConfiguracao):
            nova_rede().encoder_forward(torch.rand((1, 1, 30, 30)))
        with self.assertRaises(ErroConfiguracao):
            nova_rede().encoder_forward(torch.rand((1, 2, 32, 32)))

    def test_configuracoes_invalidas(self) -> None:
        for alteracao in (
            {"enc_blocks": 1, "input_size": (2, 2)},
            {"dec_blocks_pretrained": 3},
            {"dec_blocks_pretrained": 0},
            {"num_classes": 1},
            {"g1_dims": (0, 8)},
        ):
            with self.subTest(alteracao=alteracao):
                with self.assertRaises(ErroConfiguracao):
                    config_pequena(**alteracao)

    def test_mesma_semente_gera_os_mesmos_pesos(self) -> None:
        a, b = nova_rede(5), nova_rede(5)
        for (nome, pa), (_n, pb) in zip(a.state_dict().items(), b.state_dict().items()):
            self.assertTrue(torch.equal(pa, pb), nome)
        self.assertFalse(torch.equal(nova_rede(6).encoder[0][0].weight, a.encoder[0][0].weight))

    def test_ultima_camada_de_g1_sem_ativacao(self) -> None:
        rede = nova_rede()
        rede.eval()
        with torch.no_grad():
            z = rede.representacao_global(torch.rand((4, 1, 32, 32)))
        self.assertTrue(bool((z < 0).any()))


class TestParameterStore(unittest.TestCase):
    def test_grupos_cobrem_todos_os_parametros(self) -> None:
        loja = ParameterStore(nova_rede())
        encontrados = {loja.grupo_de(nome) for nome in loja.rede.state_dict()}
        self.assertEqual(encontrados, set(GRUPOS))
        self.assertEqual(loja.grupo_de("decoder.0.0.weight"), "decoder_l")
        self.assertEqual(loja.grupo_de("decoder.2.0.weight"), "decoder_resto")
        with self.assertRaises(KeyError):
            loja.grupo_de("cabeca.weight")

    def test_congelar_desliga_gradiente_e_bn(self) -> None:
        loja = ParameterStore(nova_rede())
        loja.congelar("encoder")
        self.assertTrue(all(not p.requires_grad for p in loja.parametros(["encoder"])))
        self.assertTrue(all(p.requires_grad for p in loja.parametros(["g2", "decoder_l"])))
        self.assertFalse(loja.rede.encoder.training)
        self.assertTrue(loja.rede.g2.training)

        antes = loja.estado(["encoder"])
        loja.rede.representacao_local(torch.rand((2, 1, 32, 32)))
        for nome, tensor in loja.estado(["encoder"]).items():
            self.assertTrue(torch.equal(tensor, antes[nome]), nome)

        loja.descongelar("encoder")
        self.assertTrue(loja.rede.encoder.training)
        self.assertTrue(all(p.requires_grad for p in loja.parametros(["encoder"])))

    def test_estado_filtrado_e_restaurado(self) -> None:
        origem, destino = ParameterStore(nova_rede(1)), ParameterStore(nova_rede(2))
        estado = origem.estado(["encoder", "g1"])
        self.assertTrue(all(nome.split(".")[0] in ("encoder", "g1") for nome in estado))
        destino.restaurar(estado)
        depois = destino.estado()
        for nome, tensor in estado.items():
            self.assertTrue(torch.equal(depois[nome], tensor), nome)
        self.assertFalse(torch.equal(depois["seg.weight"], origem.estado()["seg.weight"]))

    def test_snapshot_imutavel_e_chave_desconhecida(self) -> None:
        loja = ParameterStore(nova_rede())
        with self.assertRaises(TypeError):
            loja.snapshot()["seg.weight"] = torch.zeros(1)
        with self.assertRaises(KeyError):
            loja.restaurar({"inexistente.weight": torch.zeros(1)})

    def test_parametro_nao_finito(self) -> None:
        loja = ParameterStore(nova_rede())
        with torch.no_grad():
            loja.rede.seg.bias[0] = float("nan")
        with self.assertRaises(ErroNumerico):
            loja.verificar_finitos()


class TestCheckpoint(unittest.TestCase):
    def test_gravar_e_carregar(self) -> None:
        rede = nova_rede(3)
        ckpt = checkpoint_da_rede(rede)
        with tempfile.TemporaryDirectory() as tmp:
            caminho = Path(tmp) / "sub" / "global.ckpt"
            checksum = save_checkpoint(ckpt, caminho)
            relido = load_checkpoint(caminho)

        self.assertEqual(checksum, ckpt.checksum)
        self.assertTrue(relido.igual(ckpt))
        self.assertEqual(relido.estagio, "global")
        self.assertEqual(relido.metricas, {"perda_final": 1.25})
        self.assertTrue(all(t.dtype == torch.float64 for t in relido.parametros.values() if t.is_floating_point()))
        self.assertIn('"estagio": "global"', resumo_checkpoint(relido))

        reconstruida = rede_de_checkpoint(relido)
        x = torch.rand((2, 1, 32, 32))
        rede.eval()
        with torch.no_grad():
            self.assertTrue(torch.allclose(reconstruida(x), rede(x)))

    def test_checksum_adulterado(self) -> None:
        ckpt = checkpoint_da_rede(nova_rede())
        with tempfile.TemporaryDirectory() as tmp:
            caminho = Path(tmp) / "global.ckpt"
            save_checkpoint(ckpt, caminho)
            conteudo = torch.load(caminho, weights_only=True)
            conteudo["parametros"]["seg.bias"][0] += 1.0
            torch.save(conteudo, caminho)
            with self.assertRaises(ErroFormato):
                load_checkpoint(caminho)

    def test_formato_ou_versao_invalidos(self) -> None:
        ckpt = checkpoint_da_rede(nova_rede())
        with tempfile.TemporaryDirectory() as tmp:
            caminho = Path(tmp) / "x.ckpt"
            for chave, valor in (("formato", "XXXX"), ("versao", 99)):
                with self.subTest(chave=chave):
                    conteudo = ckpt.conteudo()
                    conteudo[chave] = valor
                    torch.save(conteudo, caminho)
                    with self.assertRaises(ErroFormato):
                        load_checkpoint(caminho)

            caminho.write_bytes(b"nao e um checkpoint")
            with self.assertRaises(ErroFormato):
                load_checkpoint(caminho)

    def test_arquivo_inexistente(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ErroDados):
                load_checkpoint(Path(tmp) / "nada.ckpt")

    def test_pesos_diferentes_mudam_o_checksum(self) -> None:
        self.assertFalse(checkpoint_da_rede(nova_rede(1)).igual(checkpoint_da_rede(nova_rede(2))))


if __name__ == "__main__":
    unittest.main()

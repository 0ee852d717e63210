import tempfile
import unittest
from pathlib import Path

import numpy as np
import torch

from src.avaliacao.dice import evaluate
from src.config.experimento import ExperimentConfig, NetworkConfig
from src.erros import ErroConfiguracao, ErroDados
from src.perdas.contrastiva import LossConfig, global_loss
from src.rede.checkpoint import load_checkpoint, save_checkpoint
from src.rede.unet import RedeUNet
from src.sintetico.fantoma import PhantomSpec, generate_dataset
from src.transformacoes.familia import familia_global, familia_local
from src.treino.amostragem import (
    gerador_do_estagio,
    montar_lote_global,
    montar_lote_local,
    plano_global,
)
from src.treino.estagios import Treinador, perda_conjunta
from src.treino.historico import (
    COLUNAS_HISTORICO,
    HistoricoEstagio,
    RegistroIteracao,
    SeletorModelo,
    ler_historico_csv,
)
from src.volumes.conjunto import ConjuntoVolumes


def config_bancada(**alteracoes) -> ExperimentConfig:
    valores = dict(
        n_pre=6,
        n_tr=1,
        n_vl=1,
        n_ts=2,
        S=2,
        batch_images=12,
        K=1,
        A=4,
        iterations_global=4,
        iterations_local=4,
        iterations_joint=3,
        iterations_finetune=4,
        validation_interval=2,
        finetune_batch=4,
        lambda_l=1.0,
        network=NetworkConfig(
            enc_blocks=2,
            base_channels=4,
            max_channel_multiplier=8,
            dec_blocks_pretrained=1,
            g1_dims=(16, 8),
            g2_channels=(8, 4),
            num_classes=3,
            input_size=(16, 16),
        ),
    )
    valores.update(alteracoes)
    return ExperimentConfig(**valores)


def conjunto_bancada() -> ConjuntoVolumes:
    volumes = generate_dataset(PhantomSpec(num_volumes=8, shape=(8, 16, 16), num_classes=3, seed=0))
    return ConjuntoVolumes(pretreino=volumes[:6], teste=volumes[6:])


def parametros_iguais(a, b, prefixo: str = "") -> bool:
    chaves = [k for k in a if k.startswith(prefixo)]
    return bool(chaves) and all(torch.equal(a[k], b[k]) for k in chaves)


class TestAmostragem(unittest.TestCase):
    def test_gerador_por_estagio(self) -> None:
        self.assertEqual(
            gerador_do_estagio(3, "global").integers(0, 2 ** 32), gerador_do_estagio(3, "global").integers(0, 2 ** 32)
        )
        self.assertNotEqual(
            gerador_do_estagio(3, "global").integers(0, 2 ** 32), gerador_do_estagio(3, "local").integers(0, 2 ** 32)
        )

    def test_lote_global_segue_o_plano(self) -> None:
        cfg = config_bancada()
        volumes = conjunto_bancada().pretreino
        rng = gerador_do_estagio(0, "global")
        plano = plano_global(cfg, volumes, rng)
        lote = montar_lote_global(volumes, plano, familia_global(), rng, cfg.S)
        self.assertEqual(lote.shape, (len(plano.itens), 16, 16))
        self.assertEqual(len(plano.itens), 12)
        for x, item in enumerate(plano.itens):
            if item.variante == "orig":
                inicio = 0 if item.particao == 0 else 4
                self.assertTrue(np.array_equal(lote[x], volumes[item.volume].voxels[inicio + item.fatia]))

    def test_lote_local_ld_tem_tres_mapas_por_imagem(self) -> None:
        cfg = config_bancada(local_strategy="LD")
        volumes = conjunto_bancada().pretreino
        lote = montar_lote_local(cfg, volumes, familia_local(), gerador_do_estagio(0, "local"), (8, 8), 4)
        self.assertEqual(lote.mapas.shape, (12, 16, 16))
        self.assertEqual(lote.plano.num_imagens, 4)
        self.assertEqual(lote.plano.A, 4)


class TestHistorico(unittest.TestCase):
    def test_csv_com_cabecalho_unico(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            caminho = Path(tmp) / "global_log.csv"
            historico = HistoricoEstagio("global", caminho)
            historico.registrar(RegistroIteracao(1, 2.0, perda_global=2.0))
            historico.registrar(RegistroIteracao(2, 1.0, perda_global=1.0, dsc_validacao=0.5))
            linhas = ler_historico_csv(caminho)
            self.assertEqual(caminho.read_text(encoding="utf-8").count("iteracao"), 1)

        self.assertEqual(list(linhas[0]), list(COLUNAS_HISTORICO))
        self.assertEqual(linhas[0]["perda_local"], "")
        self.assertEqual(float(linhas[1]["dsc_validacao"]), 0.5)
        self.assertEqual(historico.media_janela(True, 1), 2.0)
        self.assertEqual(historico.media_janela(False, 1), 1.0)
        self.assertEqual([r.iteracao for r in historico.validacoes()], [2])

    def test_seletor_guarda_o_primeiro_melhor(self) -> None:
        seletor = SeletorModelo()
        estado = {"w": torch.zeros(2)}
        self.assertTrue(seletor.observar(2, 0.5, estado))
        self.assertFalse(seletor.observar(4, 0.5, {"w": torch.ones(2)}))
        self.assertFalse(seletor.observar(6, 0.4, {"w": torch.ones(2)}))
        self.assertEqual(seletor.melhor_iteracao, 2)
        self.assertTrue(torch.equal(seletor.melhor_estado["w"], torch.zeros(2)))

        self.assertTrue(seletor.observar(8, 0.7, {"w": torch.ones(2)}))
        copia = SeletorModelo.de_dict(seletor.para_dict())
        self.assertEqual((copia.melhor_dsc, copia.melhor_iteracao), (0.7, 8))


class TestPreTreino(unittest.TestCase):
    def test_mesma_semente_gera_o_mesmo_checkpoint(self) -> None:
        cfg, conjunto = config_bancada(), conjunto_bancada()
        a = Treinador(cfg, conjunto, semente=1, callback_log=lambda _m: None).pretrain_global(iteracoes=2)
        b = Treinador(cfg, conjunto, semente=1, callback_log=lambda _m: None).pretrain_global(iteracoes=2)
        c = Treinador(cfg, conjunto, semente=2, callback_log=lambda _m: None).pretrain_global(iteracoes=2)
        self.assertTrue(a.checkpoint.igual(b.checkpoint))
        self.assertFalse(a.checkpoint.igual(c.checkpoint))

    def test_checkpoint_global_sem_g1(self) -> None:
        resultado = Treinador(config_bancada(), conjunto_bancada(), callback_log=lambda _m: None).pretrain_global(iteracoes=1)
        grupos = {nome.split(".")[0] for nome in resultado.checkpoint.parametros}
        self.assertEqual(grupos, {"encoder"})
        self.assertEqual(resultado.checkpoint.estagio, "global")

    def test_retomada_continua_bit_a_bit(self) -> None:
        for estrategia in ("GR", "GD"):
            cfg, conjunto = config_bancada(global_strategy=estrategia), conjunto_bancada()
            with self.subTest(estrategia=estrategia), tempfile.TemporaryDirectory() as tmp:
                direto = Treinador(cfg, conjunto, callback_log=lambda _m: None).pretrain_global(iteracoes=4)
                parcial = Treinador(cfg, conjunto, callback_log=lambda _m: None).pretrain_global(iteracoes=2)
                caminho = Path(tmp) / "global.ckpt"
                save_checkpoint(parcial.checkpoint, caminho)
                retomado = Treinador(cfg, conjunto, callback_log=lambda _m: None).pretrain_global(
                    iteracoes=4, retomar_de=load_checkpoint(caminho)
                )
                self.assertTrue(direto.checkpoint.igual(retomado.checkpoint))
                self.assertEqual(list(direto.historico.perdas()[2:]), list(retomado.historico.perdas()))

    def test_retomar_de_outro_estagio_e_erro(self) -> None:
        cfg, conjunto = config_bancada(), conjunto_bancada()
        treinador = Treinador(cfg, conjunto, callback_log=lambda _m: None)
        global_ = treinador.pretrain_global(iteracoes=1)
        with self.assertRaises(ErroConfiguracao):
            treinador.pretrain_local(global_.checkpoint, iteracoes=2, retomar_de=global_.checkpoint)

    def test_estagio_local_nao_altera_o_encoder(self) -> None:
        for estrategia in ("LR", "LD"):
            cfg, conjunto = config_bancada(local_strategy=estrategia), conjunto_bancada()
            with self.subTest(estrategia=estrategia):
                treinador = Treinador(cfg, conjunto, callback_log=lambda _m: None)
                global_ = treinador.pretrain_global(iteracoes=2)
                local = treinador.pretrain_local(global_.checkpoint, iteracoes=2)
                self.assertTrue(parametros_iguais(global_.checkpoint.parametros, local.checkpoint.parametros, "encoder."))
                grupos = {nome.split(".")[0] for nome in local.checkpoint.parametros}
                self.assertEqual(grupos, {"encoder", "decoder"})
                self.assertTrue(all(r.perda_local is not None for r in local.historico.registros))

    def test_estagio_local_sem_encoder_avisa(self) -> None:
        mensagens = []
        Treinador(config_bancada(), conjunto_bancada(), callback_log=mensagens.append).pretrain_local(None, iteracoes=1)
        self.assertTrue(any(m.startswith("[ATENCAO]") and "encoder aleatorio" in m for m in mensagens))

    def test_uma_regiao_ou_sem_estrategia_local_e_erro(self) -> None:
        conjunto = conjunto_bancada()
        for alteracao in ({"A": 1}, {"local_strategy": "none"}):
            with self.subTest(alteracao=alteracao):
                treinador = Treinador(config_bancada(**alteracao), conjunto, callback_log=lambda _m: None)
                with self.assertRaises(ErroConfiguracao):
                    treinador.pretrain_local(None, iteracoes=1)

    def test_lote_pequeno_demais_para_gd(self) -> None:
        treinador = Treinador(config_bancada(batch_images=4), conjunto_bancada(), callback_log=lambda _m: None)
        with self.assertRaises(ErroConfiguracao):
            treinador.pretrain_global(iteracoes=1)

    def test_fatias_fora_da_entrada_da_rede(self) -> None:
        volumes = generate_dataset(PhantomSpec(num_volumes=8, shape=(8, 32, 32), seed=0))
        conjunto = ConjuntoVolumes(pretreino=volumes[:6], teste=volumes[6:])
        with self.assertRaises(ErroConfiguracao):
            Treinador(config_bancada(), conjunto, callback_log=lambda _m: None).pretrain_global(iteracoes=1)

    def test_pre_treino_conjunto_registra_as_duas_perdas(self) -> None:
        cfg = config_bancada(lambda_l=10.0)
        resultado = Treinador(cfg, conjunto_bancada(), callback_log=lambda _m: None).joint_pretrain(iteracoes=2)
        for registro in resultado.historico.registros:
            self.assertAlmostEqual(
                registro.perda_total, registro.perda_global + 10.0 * registro.perda_local, delta=1e-4
            )
        self.assertEqual(resultado.checkpoint.estagio, "joint")

    def test_lambda_zero_da_os_gradientes_do_global(self) -> None:
        cfg = config_bancada()
        volumes = conjunto_bancada().pretreino
        rng = gerador_do_estagio(0, "joint")
        plano = plano_global(cfg, volumes, rng)
        x_g = torch.from_numpy(montar_lote_global(volumes, plano, familia_global(), rng, cfg.S)).double().unsqueeze(1)
        lote_l = montar_lote_local(cfg, volumes, familia_local(), rng, (8, 8), 4)
        x_l = torch.from_numpy(lote_l.mapas).double().unsqueeze(1)

        torch.manual_seed(0)
        rede = RedeUNet(cfg.network).double()
        parametros = list(rede.encoder.parameters()) + list(rede.g1.parameters())
        total, _g, _l = perda_conjunta(rede, x_g, plano, x_l, lote_l.plano, 0.0, LossConfig())
        conjunta = torch.autograd.grad(total, parametros)
        so_global = torch.autograd.grad(global_loss(rede.representacao_global(x_g), plano, LossConfig()), parametros)
        for a, b in zip(conjunta, so_global):
            self.assertLessEqual(float((a - b).abs().max()), 1e-10)

    def test_pre_treino_conjunto_usa_o_proprio_numero_de_iteracoes(self) -> None:
        cfg = config_bancada(iterations_global=5)
        resultado = Treinador(cfg, conjunto_bancada(), callback_log=lambda _m: None).joint_pretrain()
        self.assertEqual([r.iteracao for r in resultado.historico.registros], [1, 2, 3])

    def test_zero_iteracoes_explicitas_e_erro(self) -> None:
        treinador = Treinador(config_bancada(), conjunto_bancada(), callback_log=lambda _m: None)
        estagios = {
            "global": lambda: treinador.pretrain_global(iteracoes=0),
            "local": lambda: treinador.pretrain_local(None, iteracoes=0),
            "joint": lambda: treinador.joint_pretrain(iteracoes=0),
            "finetune": lambda: treinador.finetune(None, iteracoes=0),
        }
        for estagio, executar in estagios.items():
            with self.subTest(estagio=estagio):
                with self.assertRaises(ErroConfiguracao):
                    executar()


class TestAjusteFino(unittest.TestCase):
    def test_csv_eventos_e_selecao_pela_validacao(self) -> None:
        cfg, conjunto = config_bancada(), conjunto_bancada()
        eventos = []
        with tempfile.TemporaryDirectory() as tmp:
            treinador = Treinador(
                cfg,
                conjunto,
                diretorio_saida=tmp,
                callback_log=lambda _m: None,
                callback_progresso=lambda etapa, detalhes: eventos.append((etapa, detalhes)),
            )
            resultado = treinador.finetune(None, iteracoes=4)
            linhas = ler_historico_csv(Path(tmp) / "finetune_log.csv")

        self.assertEqual([int(l["iteracao"]) for l in linhas], [1, 2, 3, 4])
        self.assertEqual([l["dsc_validacao"] != "" for l in linhas], [False, True, False, True])
        self.assertEqual(sum(1 for etapa, _d in eventos if etapa == "iteracao"), 4)
        self.assertEqual([d["iteracao"] for etapa, d in eventos if etapa == "validacao"], [2, 4])

        validacoes = resultado.historico.validacoes()
        melhor = max(validacoes, key=lambda r: r.dsc_validacao)
        primeiro_melhor = next(r for r in validacoes if r.dsc_validacao == melhor.dsc_validacao)
        metricas = resultado.checkpoint.metricas
        self.assertEqual(metricas["melhor_iteracao"], primeiro_melhor.iteracao)
        self.assertEqual(metricas["melhor_dsc"], melhor.dsc_validacao)

        _treino, validacao = conjunto.dividir_treino_validacao(cfg.n_tr, cfg.n_vl, 0)
        reavaliado = evaluate(resultado.checkpoint, validacao, cfg.network.num_classes)
        self.assertAlmostEqual(reavaliado.media, metricas["melhor_dsc"], delta=1e-12)

    def test_retomada_do_ajuste_fino(self) -> None:
        cfg, conjunto = config_bancada(), conjunto_bancada()
        direto = Treinador(cfg, conjunto, callback_log=lambda _m: None).finetune(None, iteracoes=4)
        parcial = Treinador(cfg, conjunto, callback_log=lambda _m: None).finetune(None, iteracoes=2)
        retomado = Treinador(cfg, conjunto, callback_log=lambda _m: None).finetune(
            None, iteracoes=4, retomar_de=parcial.checkpoint
        )
        self.assertTrue(direto.checkpoint.igual(retomado.checkpoint))

    def test_ajuste_fino_a_partir_do_pre_treino_com_mixup(self) -> None:
        cfg, conjunto = config_bancada(mixup_alpha=0.2), conjunto_bancada()
        mensagens = []
        treinador = Treinador(cfg, conjunto, callback_log=mensagens.append)
        local = treinador.pretrain_local(treinador.pretrain_global(iteracoes=1).checkpoint, iteracoes=1)
        resultado = treinador.finetune(local.checkpoint, iteracoes=2)
        self.assertEqual(resultado.checkpoint.estagio, "finetune")
        self.assertTrue(any("checkpoint 'local'" in m for m in mensagens))
        self.assertTrue(all(np.isfinite(r.perda_total) for r in resultado.historico.registros))

    def test_volumes_sem_rotulos_sao_rejeitados(self) -> None:
        base = conjunto_bancada()
        sem_rotulos = [v.com_voxels(v.voxels) for v in base.pretreino]
        conjunto = ConjuntoVolumes(pretreino=sem_rotulos, teste=base.teste)
        with self.assertRaises(ErroDados):
            Treinador(config_bancada(), conjunto, callback_log=lambda _m: None).finetune(None, iteracoes=1)


class TestGradeDeAblacao(unittest.TestCase):
    """S em {3, 4, 6}, l em {1..5}, K em {1, 3} com rede de 6 blocos em 192 x 192."""

    LADO = 192

    @classmethod
    def setUpClass(cls) -> None:
        volumes = generate_dataset(PhantomSpec(num_volumes=8, shape=(12, cls.LADO, cls.LADO), num_classes=3, seed=0))
        cls.conjunto = ConjuntoVolumes(pretreino=volumes[:6], teste=volumes[6:])

    def config(self, S: int, K: int, l: int) -> ExperimentConfig:
        return config_bancada(
            S=S,
            K=K,
            A=4,
            batch_images=36,
            global_strategy="GD",
            local_strategy="LD",
            network=NetworkConfig(
                enc_blocks=6,
                base_channels=2,
                max_channel_multiplier=8,
                dec_blocks_pretrained=l,
                g1_dims=(16, 8),
                g2_channels=(4, 4),
                num_classes=3,
                input_size=(self.LADO, self.LADO),
            ),
        )

    def test_planos_e_uma_iteracao_em_cada_ponto(self) -> None:
        volumes = self.conjunto.pretreino
        for S in (3, 4, 6):
            m = 36 // (3 * S)
            for l in range(1, 6):
                lado_mapa = self.LADO // 2 ** (6 - l)
                for K in (1, 3):
                    cfg = self.config(S, K, l)
                    with self.subTest(S=S, l=l, K=K):
                        rng = gerador_do_estagio(0, "joint")
                        plano = plano_global(cfg, volumes, rng)
                        self.assertEqual(len(plano.itens), 3 * m * S)
                        self.assertEqual(plano.validar(), [])

                        lote = montar_lote_local(cfg, volumes, familia_local(), rng, (lado_mapa, lado_mapa), 4)
                        self.assertEqual(lote.plano.num_imagens, m * S)
                        self.assertEqual(lote.mapas.shape, (3 * m * S, self.LADO, self.LADO))
                        self.assertEqual((lote.plano.A, lote.plano.K), (4, K))
                        self.assertEqual(lote.plano.validar(lado_mapa, lado_mapa), [])

                        resultado = Treinador(cfg, self.conjunto, callback_log=lambda _m: None).joint_pretrain(
                            iteracoes=1
                        )
                        registro = resultado.historico.registros[0]
                        self.assertTrue(np.isfinite(registro.perda_global))
                        self.assertTrue(np.isfinite(registro.perda_local))


if __name__ == "__main__":
    unittest.main()

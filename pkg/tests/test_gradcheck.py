import unittest

import torch

from src.erros import ErroConfiguracao, ErroNumerico
from src.rede.gradcheck import (
    erro_relativo,
    grad_check,
    suite_gradientes,
    verificar_perda_global,
    verificar_perda_local,
    verificar_perda_segmentacao,
)


def quadratica():
    torch.manual_seed(0)
    w = torch.randn(30, dtype=torch.float64, requires_grad=True)
    alvo = torch.linspace(-1.0, 1.0, 30, dtype=torch.float64)
    return w, (lambda: ((w - alvo) ** 2 * torch.arange(1, 31, dtype=torch.float64)).sum())


class TestGradCheck(unittest.TestCase):
    def test_funcao_suave_e_aprovada(self) -> None:
        w, perda = quadratica()
        relatorio = grad_check(perda, {"w": w}, amostras=30)
        self.assertTrue(relatorio.aprovado, relatorio.formatar())
        self.assertEqual(len(relatorio.entradas), 30)
        self.assertTrue(relatorio.formatar().startswith("OK"))

    def test_falha_injetada_e_detectada(self) -> None:
        w, perda = quadratica()
        gradiente = torch.autograd.grad(perda(), [w])[0].detach().clone()
        maior = int(gradiente.abs().argmax())
        gradiente[maior] = 0.0

        relatorio = grad_check(perda, {"w": w}, amostras=5, gradientes={"w": gradiente}, incluir=[("w", maior)])
        self.assertFalse(relatorio.aprovado)
        self.assertEqual([(e.parametro, e.indice) for e in relatorio.acima_da_tolerancia()], [("w", maior)])
        self.assertTrue(relatorio.formatar().startswith("FALHOU"))

    def test_parametros_devem_ser_float64(self) -> None:
        w = torch.zeros(3, dtype=torch.float32, requires_grad=True)
        with self.assertRaises(ErroConfiguracao):
            grad_check(lambda: (w ** 2).sum(), {"w": w})
        with self.assertRaises(ErroConfiguracao):
            grad_check(lambda: torch.zeros(()), {})

    def test_perda_nao_finita(self) -> None:
        w = torch.zeros(3, dtype=torch.float64, requires_grad=True)
        with self.assertRaises(ErroNumerico):
            grad_check(lambda: (w / 0.0).sum(), {"w": w})

    def test_erro_relativo_com_piso(self) -> None:
        self.assertEqual(erro_relativo(0.0, 0.0), 0.0)
        self.assertAlmostEqual(erro_relativo(1.0, 1.1), 0.1 / 1.1)
        self.assertAlmostEqual(erro_relativo(1e-9, 0.0), 1e-9 / 1e-8)

    def test_amostragem_deterministica(self) -> None:
        w, perda = quadratica()
        a = grad_check(perda, {"w": w}, amostras=10, semente=4)
        b = grad_check(perda, {"w": w}, amostras=10, semente=4)
        self.assertEqual([e.indice for e in a.entradas], [e.indice for e in b.entradas])


class TestVerificacoesDaRede(unittest.TestCase):
    def test_perda_global_pelo_encoder_e_g1(self) -> None:
        relatorio = verificar_perda_global(amostras=200)
        self.assertTrue(relatorio.aprovado, relatorio.formatar())
        self.assertEqual(len(relatorio.entradas), 200)
        self.assertTrue(all(e.parametro.split(".")[0] in ("encoder", "g1") for e in relatorio.entradas))

    def test_perda_local_pelo_decoder_e_g2(self) -> None:
        relatorio = verificar_perda_local(amostras=200)
        self.assertTrue(relatorio.aprovado, relatorio.formatar())
        self.assertTrue(all(e.parametro.split(".")[0] in ("decoder", "g2") for e in relatorio.entradas))

    def test_perda_de_segmentacao(self) -> None:
        relatorio = verificar_perda_segmentacao(amostras=200)
        self.assertTrue(relatorio.aprovado, relatorio.formatar())

    def test_suite_registra_um_resumo_por_perda(self) -> None:
        mensagens = []
        relatorios = suite_gradientes(amostras=20, callback_log=mensagens.append)
        self.assertEqual(set(relatorios), {"perda_global", "perda_local", "perda_segmentacao"})
        self.assertEqual(len(mensagens), 3)
        self.assertTrue(all(m.startswith("[SUCESSO]") for m in mensagens), mensagens)


if __name__ == "__main__":
    unittest.main()

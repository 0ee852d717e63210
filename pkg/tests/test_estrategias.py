import unittest
from math import comb

import numpy as np

from src.erros import ErroConfiguracao
from src.pares.estrategias import (
    compose_global_GD,
    compose_global_GDminus,
    compose_global_GR,
    compose_local_LD,
    compose_local_LR,
    formatar_plano,
    make_region_grid,
)


def gerador(semente: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([semente])))


class TestEstrategiasGlobais(unittest.TestCase):
    def test_gr_negativos_sao_as_demais_imagens(self) -> None:
        for N in (2, 3, 20):
            with self.subTest(N=N):
                plano = compose_global_GR(N, gerador())
                self.assertEqual(len(plano.itens), 2 * N)
                self.assertEqual(len(plano.positivos), N)
                self.assertTrue(all(len(neg) == 2 * N - 2 for neg in plano.negativos_de))
                self.assertEqual(plano.validar(), [])

    def test_gr_com_uma_imagem_e_erro(self) -> None:
        with self.assertRaises(ErroConfiguracao):
            compose_global_GR(1, gerador())

    def test_gr_sorteia_fatias_distintas_entre_volumes(self) -> None:
        plano = compose_global_GR(6, gerador(2), num_fatias=[4, 4, 4])
        origens = {(item.volume, item.fatia) for item in plano.itens}
        self.assertEqual(len(origens), 6)
        self.assertTrue(all(0 <= f < 4 for _v, f in origens))

    def test_gdminus_exemplos(self) -> None:
        plano = compose_global_GDminus(2, 4, gerador())
        self.assertEqual(len(plano.itens), 24)
        self.assertEqual(len(plano.positivos), 24)
        self.assertTrue(all(len(neg) == 18 for neg in plano.negativos_de))

        plano = compose_global_GDminus(1, 2, gerador())
        self.assertEqual(len(plano.itens), 6)
        self.assertEqual(len(plano.positivos), 6)
        self.assertTrue(all(len(neg) == 3 for neg in plano.negativos_de))

    def test_gd_exemplos(self) -> None:
        self.assertEqual(len(compose_global_GD(2, 4, gerador()).positivos), 32)
        self.assertEqual(len(compose_global_GD(3, 2, gerador()).positivos), 30)

    def test_uma_particao_e_erro(self) -> None:
        with self.assertRaises(ErroConfiguracao):
            compose_global_GDminus(2, 1, gerador())
        with self.assertRaises(ErroConfiguracao):
            compose_global_GD(2, 1, gerador())

    def test_mais_volumes_que_o_disponivel_e_erro(self) -> None:
        with self.assertRaises(ErroConfiguracao):
            compose_global_GD(3, 2, gerador(), num_fatias=[8, 8])

    def test_cardinalidades_exaustivas(self) -> None:
        for m in range(1, 5):
            for S in range(2, 7):
                menos = compose_global_GDminus(m, S, gerador(m * 10 + S))
                completo = compose_global_GD(m, S, gerador(m * 10 + S))
                with self.subTest(m=m, S=S):
                    self.assertEqual(len(menos.itens), 3 * m * S)
                    self.assertEqual(len(menos.positivos), 3 * m * S)
                    self.assertTrue(all(len(neg) == 3 * m * (S - 1) for neg in menos.negativos_de))
                    self.assertEqual(len(completo.positivos), 3 * m * S + 2 * comb(m, 2) * S)
                    for plano in (menos, completo):
                        self.assertEqual(plano.validar(), [])
                        for (a, _b), negativos in zip(plano.positivos, plano.negativos_de):
                            particao = plano.itens[a].particao
                            self.assertFalse(any(plano.itens[x].particao == particao for x in negativos))

    def test_gd_com_um_volume_igual_a_gdminus(self) -> None:
        for S in (2, 3, 5):
            self.assertEqual(
                compose_global_GD(1, S, gerador(S), num_fatias=[12, 12]),
                compose_global_GDminus(1, S, gerador(S), num_fatias=[12, 12]),
            )

    def test_gd_consome_o_gerador_como_gdminus(self) -> None:
        a, b = gerador(11), gerador(11)
        gd = compose_global_GD(3, 4, a, num_fatias=[12] * 6)
        gdm = compose_global_GDminus(3, 4, b, num_fatias=[12] * 6)
        self.assertEqual(gd.itens, gdm.itens)
        self.assertEqual(a.integers(0, 2 ** 32), b.integers(0, 2 ** 32))

    def test_variantes_referenciam_a_mesma_fatia(self) -> None:
        plano = compose_global_GDminus(3, 4, gerador(1), num_fatias=[10, 12, 13, 9])
        for base in range(0, len(plano.itens), 3):
            trio = plano.itens[base:base + 3]
            self.assertEqual([i.variante for i in trio], ["orig", "tilde", "hat"])
            self.assertEqual(len({(i.volume, i.particao, i.fatia) for i in trio}), 1)


class TestGradeERegioes(unittest.TestCase):
    def test_grade_com_capacidade_exata(self) -> None:
        grade = make_region_grid(6, 6, 4, 3, 4, gerador())
        self.assertEqual(grade, [(0, 0), (0, 3), (3, 0), (3, 3)])

    def test_grade_sorteada_sem_repeticao(self) -> None:
        grade = make_region_grid(12, 12, 4, 3, 13, gerador(5))
        self.assertEqual(len(set(grade)), 13)
        self.assertTrue(all(u % 3 == 0 and v % 3 == 0 and u + 3 <= 12 and v + 3 <= 12 for u, v in grade))
        self.assertEqual(grade, make_region_grid(12, 12, 4, 3, 13, gerador(5)))

    def test_grade_acima_da_capacidade_e_erro(self) -> None:
        with self.assertRaises(ErroConfiguracao):
            make_region_grid(6, 6, 4, 3, 5, gerador())
        with self.assertRaises(ErroConfiguracao):
            make_region_grid(6, 6, 4, 7, 1, gerador())

    def test_lr_cardinalidades(self) -> None:
        grade = make_region_grid(8, 8, 2, 2, 4, gerador())
        plano = compose_local_LR(3, grade, K=2)
        self.assertEqual(len(plano.positivos), 4 * 3)
        self.assertTrue(all(len(neg) == 6 for neg in plano.negativos_de))
        self.assertEqual(plano.validar(8, 8), [])

        plano = compose_local_LR(5, make_region_grid(12, 12, 2, 3, 13, gerador(1)), K=3)
        self.assertEqual(len(plano.positivos), 13 * 5)

    def test_lr_com_uma_regiao_nao_tem_negativos(self) -> None:
        plano = compose_local_LR(1, [(0, 0)], K=1)
        self.assertEqual(plano.negativos_de, ((),))

    def test_lr_negativos_estritos(self) -> None:
        grade = make_region_grid(2, 2, 1, 1, 4, gerador())
        plano = compose_local_LR(1, grade, K=1, estrito=True)
        self.assertTrue(all(len(neg) == 2 for neg in plano.negativos_de))

    def test_ld_pares_entre_volumes(self) -> None:
        grade = make_region_grid(8, 8, 2, 2, 4, gerador())
        plano = compose_local_LD([(0, 1), (1, 1)], grade, K=2)

        cruzados = [
            (par, neg)
            for par, neg in zip(plano.positivos, plano.negativos_de)
            if plano.mapas[par[0][0]].volume != plano.mapas[par[1][0]].volume
        ]
        self.assertEqual(len(cruzados), 2 * 4)
        self.assertTrue(all(len(neg) == 12 for _par, neg in cruzados))
        self.assertEqual(len(plano.positivos), 2 * 4 + 2 * 4)
        self.assertEqual(plano.validar(8, 8), [])

    def test_ld_sem_volumes_compartilhando_particao_e_erro(self) -> None:
        grade = make_region_grid(4, 4, 2, 2, 4, gerador())
        with self.assertRaises(ErroConfiguracao):
            compose_local_LD([(0, 0), (0, 1)], grade, K=2)
        with self.assertRaises(ErroConfiguracao):
            compose_local_LD([(0, 0), (1, 1)], grade, K=2)

    def test_cardinalidades_locais_exaustivas(self) -> None:
        for A in range(2, 17):
            grade = make_region_grid(4, 4, 2, 1, A, gerador(A))
            lr = compose_local_LR(2, grade)
            ld = compose_local_LD([(0, 0), (1, 0), (0, 1), (1, 1)], grade)
            with self.subTest(A=A):
                self.assertTrue(all(len(neg) == 2 * (A - 1) for neg in lr.negativos_de))
                self.assertEqual(len(ld.positivos), 4 * A + 2 * 2 * A)
                self.assertEqual(lr.validar(4, 4), [])
                self.assertEqual(ld.validar(4, 4), [])

    def test_formatar_plano_e_estavel(self) -> None:
        plano = compose_global_GD(2, 2, gerador(3), num_fatias=[6, 6])
        texto = formatar_plano(plano)
        self.assertEqual(texto, formatar_plano(compose_global_GD(2, 2, gerador(3), num_fatias=[6, 6])))
        self.assertTrue(texto.startswith("BatchPlan itens=12 positivos=16"))
        local = formatar_plano(compose_local_LR(1, [(0, 0), (0, 1)]))
        self.assertIn("RegionPlan A=2", local)


if __name__ == "__main__":
    unittest.main()

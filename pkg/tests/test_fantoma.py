import tempfile
import unittest
from pathlib import Path

import numpy as np

from src.erros import ErroConfiguracao
from src.sintetico.fantoma import (
    PISO_CONTRASTE,
    PhantomSpec,
    contraste_rotulos,
    escrever_dataset,
    generate_dataset,
    medir_alinhamento,
)
from src.volumes.conjunto import ler_manifesto
from src.volumes.formato_vol import read_volume


SEMENTES_ALINHAMENTO = (0, 1, 2, 3, 7)


def spec_bancada(seed: int, num_volumes: int = 20) -> PhantomSpec:
    return PhantomSpec(
        num_volumes=num_volumes,
        shape=(12, 32, 32),
        num_classes=3,
        seed=seed,
        inter_subject_jitter=0.1,
        intensity_jitter=0.2,
    )


class TestFantoma(unittest.TestCase):
    def test_mesma_spec_gera_volumes_identicos(self) -> None:
        a = generate_dataset(spec_bancada(7, num_volumes=4))
        b = generate_dataset(spec_bancada(7, num_volumes=4))
        for va, vb in zip(a, b):
            self.assertTrue(va.igual(vb))

    def test_sementes_diferentes_mudam_os_volumes(self) -> None:
        a = generate_dataset(spec_bancada(1, num_volumes=2))
        b = generate_dataset(spec_bancada(2, num_volumes=2))
        self.assertFalse(np.array_equal(a[0].voxels, b[0].voxels))

    def test_sem_jitter_todos_os_volumes_sao_iguais(self) -> None:
        spec = PhantomSpec(num_volumes=3, shape=(6, 16, 16), seed=5, inter_subject_jitter=0.0, intensity_jitter=0.0)
        volumes = generate_dataset(spec)
        for outro in volumes[1:]:
            self.assertEqual(outro.voxels.tobytes(), volumes[0].voxels.tobytes())
            self.assertTrue(np.array_equal(outro.labels, volumes[0].labels))

    def test_rotulos_e_intensidades_validos(self) -> None:
        for volume in generate_dataset(spec_bancada(3, num_volumes=3)):
            self.assertEqual(volume.forma, (12, 32, 32))
            self.assertEqual(set(np.unique(volume.labels)), {0, 1, 2})
            self.assertGreaterEqual(float(volume.voxels.min()), 0.0)
            self.assertLessEqual(float(volume.voxels.max()), 1.0)

    def test_primeiro_plano_acima_do_piso_de_contraste(self) -> None:
        for volume in generate_dataset(spec_bancada(4, num_volumes=5)):
            self.assertGreaterEqual(contraste_rotulos(volume), PISO_CONTRASTE, volume.id)

    def test_fatias_correspondentes_sao_mais_parecidas(self) -> None:
        for seed in SEMENTES_ALINHAMENTO:
            with self.subTest(seed=seed):
                correspondente, deslocada = medir_alinhamento(generate_dataset(spec_bancada(seed)))
                self.assertGreater(correspondente, deslocada)

    def test_forma_pequena_demais_e_rejeitada(self) -> None:
        with self.assertRaises(ErroConfiguracao):
            PhantomSpec(num_volumes=1, shape=(3, 32, 32))
        with self.assertRaises(ErroConfiguracao):
            PhantomSpec(num_volumes=1, shape=(8, 16, 16), num_classes=8)
        with self.assertRaises(ErroConfiguracao):
            PhantomSpec(num_volumes=1, inter_subject_jitter=0.5)

    def test_escrever_dataset_gera_vol_e_manifesto(self) -> None:
        volumes = generate_dataset(spec_bancada(0, num_volumes=3))
        with tempfile.TemporaryDirectory() as tmp:
            raiz = Path(tmp)
            mensagens = []
            escrever_dataset(volumes, raiz, n_pretrain=2, callback_log=mensagens.append)

            entradas = ler_manifesto(raiz)
            self.assertEqual([e.divisao for e in entradas], ["pretrain", "pretrain", "test"])
            relido = read_volume(raiz / entradas[0].arquivo, entradas[0].id)
            self.assertTrue(relido.igual(volumes[0]))
            self.assertTrue(mensagens[0].startswith("[SUCESSO]"))


if __name__ == "__main__":
    unittest.main()

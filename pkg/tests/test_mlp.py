#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests de la Red y el Optimizador
================================
Inicialización, propagación, gradiente exacto contra diferencias finitas,
pasos de Adam/SGD y persistencia de checkpoints.
"""

import numpy as np
import pytest

from gvf_predictor.config.settings import NetworkConfig
from gvf_predictor.core.mlp import (
    Gradient,
    Network,
    OptimizerHyper,
    adam_step,
    backward_grad,
    batch_value_gradient,
    build_network,
    forward,
    forward_batch,
    init_network,
    init_optimizer,
    weighted_gradient,
)
from gvf_predictor.storage.checkpoints import checkpoint_metadata, load_checkpoint, save_checkpoint
from gvf_predictor.utils.errors import CheckpointError, DataError, NumericError


def red_afin(w: float, b: float) -> Network:
    return Network([np.array([[w]])], [np.array([b])])


class TestInicializacion:
    """Tests de init_network"""

    def test_conteo_de_parametros(self):
        assert init_network([384, 512, 512, 1], seed=0).parameter_count == 460_289
        assert init_network([1, 1], seed=0).parameter_count == 2

    def test_determinismo_por_semilla(self):
        a = init_network([5, 7, 1], seed=3)
        b = init_network([5, 7, 1], seed=3)
        c = init_network([5, 7, 1], seed=4)

        assert all(np.array_equal(p, q) for p, q in zip(a.parameters(), b.parameters()))
        assert not np.array_equal(a.weights[0], c.weights[0])

    def test_rango_por_fan_in(self):
        net = init_network([16, 4, 1], seed=1)
        assert np.abs(net.weights[0]).max() <= 0.25, "U(-1/√16, 1/√16)"
        assert np.abs(net.weights[1]).max() <= 0.5

    def test_dimensiones_invalidas(self):
        with pytest.raises(DataError):
            init_network([3, 2], seed=0)
        with pytest.raises(DataError):
            init_network([3], seed=0)

    def test_precision_de_la_configuracion(self):
        net, opt = build_network(6, NetworkConfig(hidden_sizes=[4], precision="float32"), seed=0)

        assert net.dims == [6, 4, 1]
        assert net.dtype == np.float32
        assert opt.step_count == 0
        assert opt.first_moment[0].dtype == np.float32


class TestForward:
    """Tests de la propagación hacia adelante"""

    def test_pesos_cero(self):
        net = Network([np.zeros((3, 2)), np.zeros((1, 3))], [np.zeros(3), np.zeros(1)])
        assert forward(net, np.array([4.0, -2.0])) == 0.0

    def test_red_afin(self):
        assert forward(red_afin(2.0, 1.0), np.array([3.0])) == pytest.approx(7.0)

    def test_pureza(self):
        net = init_network([4, 8, 1], seed=2)
        x = np.array([0.1, 0.2, 0.3, 0.4])
        assert forward(net, x) == forward(net, x)

    def test_lote_igual_a_muestras(self):
        net = init_network([3, 5, 1], seed=5)
        X = np.random.default_rng(0).normal(size=(10, 3))
        assert np.allclose(forward_batch(net, X), [forward(net, x) for x in X])

    def test_ancho_incorrecto(self):
        with pytest.raises(DataError):
            forward(init_network([3, 1], seed=0), np.ones(2))


class TestGradiente:
    """Tests del gradiente analítico"""

    def test_red_afin(self):
        grad = backward_grad(red_afin(2.0, 1.0), np.array([3.0]))
        assert grad.weights[0].tolist() == [[3.0]]
        assert grad.biases[0].tolist() == [1.0]

    def test_subgradiente_cero_en_relu(self):
        net = Network([np.array([[1.0]]), np.array([[1.0]])], [np.array([0.0]), np.array([0.0])])
        grad = backward_grad(net, np.array([0.0]))

        assert grad.weights[0][0, 0] == 0.0, "Pre-activación exactamente 0 usa subgradiente 0"
        assert grad.biases[0][0] == 0.0

    def test_diferencias_finitas(self):
        """Test de 120 pares (red, entrada) aleatorios contra diferencias centrales en cada parámetro"""
        rng = np.random.default_rng(11)
        h = 1e-6
        for caso in range(120):
            dims = [int(rng.integers(1, 6)), *rng.integers(1, 7, size=int(rng.integers(0, 3))).tolist(), 1]
            net = init_network(dims, seed=int(rng.integers(2 ** 31)))
            x = rng.normal(size=dims[0])
            grad = backward_grad(net, x).arrays()
            for p, g in zip(net.parameters(), grad):
                for i in range(p.size):
                    original = p.flat[i]
                    p.flat[i] = original + h
                    arriba = forward(net, x)
                    p.flat[i] = original - h
                    abajo = forward(net, x)
                    p.flat[i] = original
                    numerico = (arriba - abajo) / (2 * h)
                    analitico = g.flat[i]
                    escala = max(abs(numerico), abs(analitico), 1e-6)
                    assert abs(numerico - analitico) / escala < 1e-4 or abs(numerico - analitico) < 1e-9, \
                        f"Caso {caso}, red {dims}: gradiente {analitico} vs {numerico} en el parámetro {i}"

    def test_gradiente_ponderado(self):
        net = init_network([3, 4, 1], seed=1)
        X = np.random.default_rng(2).normal(size=(5, 3))
        a = np.array([0.5, -1.0, 2.0, 0.0, 1.5])
        combinado = weighted_gradient(net, X, a).arrays()
        suma = [sum(ai * g for ai, g in zip(a, garr)) for garr in zip(*[backward_grad(net, x).arrays() for x in X])]

        for c, s in zip(combinado, suma):
            assert np.allclose(c, s)

    def test_valores_y_gradiente_en_una_pasada(self):
        net = init_network([3, 4, 1], seed=1)
        X = np.random.default_rng(3).normal(size=(6, 3))
        valores, _ = batch_value_gradient(net, X, lambda v: np.ones_like(v))
        assert np.allclose(valores, forward_batch(net, X))


class TestOptimizador:
    """Tests de adam_step"""

    def test_direccion_cero(self):
        net = init_network([3, 2, 1], seed=0)
        antes = [p.copy() for p in net.parameters()]
        opt = init_optimizer(net)
        cero = Gradient([np.zeros_like(w) for w in net.weights], [np.zeros_like(b) for b in net.biases])

        adam_step(net, opt, cero, lr=0.1)

        assert all(np.array_equal(a, p) for a, p in zip(antes, net.parameters())), "Los pesos no cambian"
        assert opt.step_count == 1

    def test_primer_paso_normalizado(self):
        net = red_afin(1.0, 0.0)
        opt = init_optimizer(net)
        direccion = Gradient([np.array([[1.0]])], [np.array([0.0])])

        adam_step(net, opt, direccion, lr=0.1)

        assert net.weights[0][0, 0] == pytest.approx(1.0 - 0.1 / (1.0 + 1e-4))
        assert net.biases[0][0] == 0.0

    def test_decaimiento_encoge_pesos(self):
        net = Network([np.full((1, 3), 0.5)], [np.array([0.5])])
        opt = init_optimizer(net, OptimizerHyper(weight_decay=0.003))
        cero = Gradient([np.zeros((1, 3))], [np.zeros(1)])

        for _ in range(10):
            adam_step(net, opt, cero, lr=1e-3)

        assert np.all(net.weights[0] < 0.5) and np.all(net.weights[0] > 0), "Los pesos se acercan a 0"
        assert net.biases[0][0] < 0.5

    def test_sgd(self):
        net = red_afin(1.0, 0.0)
        opt = init_optimizer(net, OptimizerHyper(kind="sgd"))
        adam_step(net, opt, Gradient([np.array([[2.0]])], [np.array([1.0])]), lr=0.1)

        assert net.weights[0][0, 0] == pytest.approx(0.8)
        assert net.biases[0][0] == pytest.approx(-0.1)

    def test_direccion_no_finita(self):
        net = red_afin(1.0, 0.0)
        with pytest.raises(NumericError):
            adam_step(net, init_optimizer(net), Gradient([np.array([[np.inf]])], [np.array([0.0])]), lr=0.1)

    def test_optimizador_desconocido(self):
        with pytest.raises(DataError):
            init_optimizer(red_afin(1.0, 0.0), OptimizerHyper(kind="rmsprop"))


def _entrenar(net, opt, X, y, pasos):
    for _ in range(pasos):
        _, direccion = batch_value_gradient(net, X, lambda v: (v - y) / len(y))
        adam_step(net, opt, direccion, lr=1e-2)


class TestCheckpoints:
    """Tests de save_checkpoint / load_checkpoint"""

    def setup_method(self):
        """Configurar cada test"""
        rng = np.random.default_rng(4)
        self.X = rng.normal(size=(32, 5))
        self.y = np.sin(self.X[:, 0]) + 0.5 * self.X[:, 1]
        self.hyper = OptimizerHyper(weight_decay=0.003)

    def test_ida_y_vuelta_bit_a_bit(self, tmp_path):
        net = init_network([5, 8, 1], seed=0)
        opt = init_optimizer(net, self.hyper)
        _entrenar(net, opt, self.X, self.y, 5)
        ruta = save_checkpoint(net, opt, str(tmp_path / "red.npz"), kind="nstep", layout_hash="abc")

        cargada, opt_cargado = load_checkpoint(ruta)

        assert np.array_equal(forward_batch(net, self.X), forward_batch(cargada, self.X))
        assert opt_cargado.step_count == 5
        assert opt_cargado.hyper == self.hyper
        assert checkpoint_metadata(ruta)['kind'] == "nstep"
        assert (tmp_path / "red.npz.json").exists(), "Debe escribirse el manifiesto legible"

    def test_reanudar_igual_a_continuo(self, tmp_path):
        """Test de 100 pasos seguidos contra 50 + guardar/cargar + 50"""
        continua = init_network([5, 8, 1], seed=0)
        opt_continuo = init_optimizer(continua, self.hyper)
        _entrenar(continua, opt_continuo, self.X, self.y, 100)

        partida = init_network([5, 8, 1], seed=0)
        opt_partido = init_optimizer(partida, self.hyper)
        _entrenar(partida, opt_partido, self.X, self.y, 50)
        ruta = save_checkpoint(partida, opt_partido, str(tmp_path / "mitad.npz"))
        partida, opt_partido = load_checkpoint(ruta)
        _entrenar(partida, opt_partido, self.X, self.y, 50)

        for a, b in zip(continua.parameters(), partida.parameters()):
            assert np.array_equal(a, b), "Los pesos deben coincidir exactamente"
        assert opt_continuo.step_count == opt_partido.step_count == 100

    def test_dimensiones_esperadas(self, tmp_path):
        net = init_network([5, 8, 1], seed=0)
        ruta = save_checkpoint(net, init_optimizer(net), str(tmp_path / "red.npz"))
        with pytest.raises(CheckpointError):
            load_checkpoint(ruta, expected_dims=[5, 16, 1])

    def test_layout_distinto(self, tmp_path):
        net = init_network([5, 1], seed=0)
        ruta = save_checkpoint(net, init_optimizer(net), str(tmp_path / "red.npz"), layout_hash="uno")
        with pytest.raises(CheckpointError):
            load_checkpoint(ruta, expected_layout_hash="otro")

    def test_archivo_truncado(self, tmp_path):
        net = init_network([5, 8, 1], seed=0)
        ruta = save_checkpoint(net, init_optimizer(net), str(tmp_path / "red.npz"))
        contenido = (tmp_path / "red.npz").read_bytes()
        (tmp_path / "red.npz").write_bytes(contenido[: len(contenido) // 2])

        with pytest.raises(CheckpointError):
            load_checkpoint(ruta)

    def test_archivo_inexistente(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(str(tmp_path / "nada.npz"))

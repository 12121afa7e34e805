#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests de los Aprendices GVF
===========================
Error TD, pasos individuales y por lote, oráculo tabular, repetición de
experiencia y despliegue congelado.
"""

import numpy as np
import pytest

from gvf_predictor.config.settings import EncoderConfig, NetworkConfig, TDConfig
from gvf_predictor.core.encoder import StateEncoder, cumulant_series
from gvf_predictor.core.evaluation import evaluate_log
from gvf_predictor.core.gvf import (
    ReplayBuffer,
    TransitionBatch,
    build_transitions,
    derive_seeds,
    frozen_deploy,
    offline_td,
    online_td_deploy,
    online_td_with_pretrain,
    td_batch_update,
    td_error,
    td_update,
    td_with_replay,
)
from gvf_predictor.core.mlp import Network, build_network, forward_batch, init_optimizer
from gvf_predictor.utils.errors import ConfigError, DataError

RED_LINEAL = NetworkConfig(hidden_sizes=[], optimizer="sgd", weight_decay=0.0)
RED_CHICA = NetworkConfig(hidden_sizes=[8], weight_decay=0.0)


def codificar_cadena(d):
    """Estados one-hot (sensores y trazas con β=0) sin codificaciones de tiempo"""
    cfg = EncoderConfig(beta=0.0, use_time_of_day=False, use_mode_thermometer=False, exclude_sensors=["c"])
    return StateEncoder(cfg, d.meta).encode_dataset(d)


def parametros_iguales(a: Network, b: Network) -> bool:
    return all(np.array_equal(p, q) for p, q in zip(a.parameters(), b.parameters()))


class TestErrorTD:
    """Tests de td_error y td_update"""

    def test_valores(self):
        assert td_error(1.0, 0.0, 0.0, 0.9) == pytest.approx(1.0)
        assert td_error(0.5, 1.0, 1.0, 0.5) == pytest.approx(0.0)
        assert td_error(1.0, 1.0, 0.7, 1.0) == pytest.approx(1.3)

    def test_red_cero_da_cumulante(self):
        net = Network([np.zeros((1, 3))], [np.zeros(1)])
        opt = init_optimizer(net)
        v, delta = td_update(net, opt, np.ones(3), 0.8, np.ones(3), 0.9, lr=0.1)

        assert v == 0.0
        assert delta == pytest.approx(0.8), "Con la red en cero, δ = c"

    def test_alpha_cero_no_modifica(self):
        net, opt = build_network(4, RED_CHICA, seed=0)
        antes = net.copy()
        td_update(net, opt, np.ones(4), 1.0, np.zeros(4), 0.9, lr=0.0)

        assert parametros_iguales(antes, net), "α = 0 no debe modificar los pesos"
        assert opt.step_count == 0

    def test_paso_reduce_el_error(self):
        net, opt = build_network(3, RED_CHICA, seed=1)
        s, s_next = np.array([1.0, 0.0, 0.5]), np.array([0.0, 1.0, 0.5])
        _, antes = td_update(net, opt, s, 1.0, s_next, 0.0, lr=1e-2)
        _, despues = td_update(net, opt, s, 1.0, s_next, 0.0, lr=0.0)

        assert abs(despues) < abs(antes), "Con γ=0 un paso debe acercar f(ŝ) a c"

    def test_paso_simple(self):
        """Test del paso w += lr·δ∇f sin mover el optimizador"""
        net = Network([np.zeros((1, 3))], [np.zeros(1)])
        opt = init_optimizer(net)
        td_update(net, opt, np.ones(3), 0.8, np.ones(3), 0.9, lr=0.1, plain=True)

        assert np.allclose(net.weights[0], 0.08) and np.allclose(net.biases[0], 0.08)
        assert opt.step_count == 0
        assert all(not m.any() for m in opt.first_moment), "Los momentos no cambian"

    def test_lote_con_red_objetivo(self):
        """Test que el arranque del lote usa la red objetivo indicada"""
        net = Network([np.zeros((1, 2))], [np.zeros(1)])
        objetivo = Network([np.zeros((1, 2))], [np.ones(1)])
        lote = TransitionBatch(np.ones((3, 2)), np.zeros(3), np.ones((3, 2)))

        assert np.allclose(td_batch_update(net, init_optimizer(net), lote, 0.5, lr=0.0, target_net=objetivo), 0.5)
        assert np.allclose(td_batch_update(net, init_optimizer(net), lote, 0.5, lr=0.0), 0.0)


class TestTransiciones:
    """Tests de build_transitions y ReplayBuffer"""

    def test_alineacion_del_cumulante(self):
        estados = np.arange(5, dtype=float)[:, None]
        lote = build_transitions(estados, np.array([10.0, 11.0, 12.0, 13.0, 14.0]))

        assert len(lote) == 4
        assert lote.cumulants.tolist() == [11.0, 12.0, 13.0, 14.0], "La transición t lleva c_{t+1}"
        assert lote.next_states[:, 0].tolist() == [1.0, 2.0, 3.0, 4.0]

    def test_huecos_descartan_transiciones(self):
        estados = np.arange(6, dtype=float)[:, None]
        lote = build_transitions(estados, np.zeros(6), breaks=[3])

        assert lote.indices.tolist() == [0, 1, 3, 4], "No hay transición 2 -> 3 a través del hueco"

    def test_secuencia_corta(self):
        with pytest.raises(DataError):
            build_transitions(np.zeros((1, 2)), np.zeros(1))

    def test_buffer_fifo(self):
        buffer = ReplayBuffer(3, 1)
        for t in range(5):
            buffer.add(np.array([t]), float(t), np.array([t + 1]), t)

        assert len(buffer) == 3
        assert buffer.max_index == 4
        muestra = buffer.sample(10, np.random.default_rng(0))
        assert sorted(muestra.indices.tolist()) == [2, 3, 4], "Se descartan las más viejas y no hay repetidas"

    def test_buffer_vacio(self):
        with pytest.raises(DataError):
            ReplayBuffer(2, 1).sample(1, np.random.default_rng(0))
        with pytest.raises(ConfigError):
            ReplayBuffer(0, 1)


class TestTDFueraDeLinea:
    """Tests de offline_td"""

    def test_oraculo_tabular(self, cadena):
        """Test de una cadena cíclica de 5 estados contra (I - γP)^-1 P c con γ = 0.5"""
        cumulantes = np.array([1.0, 0.0, 0.0, 2.0, 0.0])
        d = cadena(5, 200, cumulantes)
        estados = codificar_cadena(d)
        lote = build_transitions(estados, cumulant_series(d, "c", normalize_values=False))
        cfg = TDConfig(gamma=0.5, eta=0.2, batch_size=len(lote), epochs=1000)

        net, _ = offline_td(lote, cfg, seed=0, net_cfg=RED_LINEAL)

        P = np.roll(np.eye(5), 1, axis=1)
        oraculo = np.linalg.solve(np.eye(5) - 0.5 * P, P @ cumulantes)
        assert np.allclose(forward_batch(net, estados[:5]), oraculo, atol=1e-6), \
            "TD debe converger al valor tabular"

    def test_cero_epocas(self, cadena):
        d = cadena(4, 40, np.arange(4.0))
        lote = build_transitions(codificar_cadena(d), cumulant_series(d, "c", normalize_values=False))
        inicial, opt = build_network(lote.width, RED_CHICA, seed=3)

        net, _ = offline_td(lote, TDConfig(epochs=0), seed=0, network=inicial.copy(), optimizer=opt)

        assert parametros_iguales(net, inicial), "Con 0 épocas la red no cambia"

    def test_determinismo(self, cadena):
        d = cadena(4, 60, np.arange(4.0))
        lote = build_transitions(codificar_cadena(d), cumulant_series(d, "c", normalize_values=False))
        cfg = TDConfig(gamma=0.9, eta=1e-2, batch_size=8, epochs=3)

        a, opt_a = offline_td(lote, cfg, seed=5, net_cfg=RED_CHICA)
        b, opt_b = offline_td(lote, cfg, seed=5, net_cfg=RED_CHICA)

        assert parametros_iguales(a, b), "Misma semilla, mismos pesos"
        assert opt_a.step_count == opt_b.step_count == 3 * 8

    def test_red_de_ancho_incorrecto(self, cadena):
        d = cadena(3, 20, np.arange(3.0))
        lote = build_transitions(codificar_cadena(d), np.zeros(20))
        net, opt = build_network(lote.width + 1, RED_CHICA, seed=0)

        with pytest.raises(DataError):
            offline_td(lote, TDConfig(epochs=1), seed=0, network=net, optimizer=opt)

    def test_semillas_derivadas(self):
        assert derive_seeds(1) == derive_seeds(1)
        assert len(set(derive_seeds(1))) == 3


class TestDespliegue:
    """Tests del despliegue en línea, con repetición y congelado"""

    def setup_method(self):
        """Configurar cada test"""
        self.cfg = TDConfig(gamma=0.9, eta=1e-3, alpha=1e-3, batch_size=8, epochs=1, replay_capacity=32)

    def preparar(self, dataset_senoidal, n=60):
        d = dataset_senoidal(n)
        encoder = StateEncoder(EncoderConfig(), d.meta)
        return d, encoder, cumulant_series(d, "presion")

    def test_log_y_actualizaciones(self, dataset_senoidal):
        d, encoder, cumulantes = self.preparar(dataset_senoidal)
        net, opt = build_network(encoder.width, RED_CHICA, seed=0)

        log = online_td_deploy(net, opt, d, cumulantes, self.cfg, encoder)

        assert len(log) == len(d) - 1
        assert log.steps[0] == 0
        assert log.cumulants[0] == pytest.approx(cumulantes[1]), "La fila t registra c_{t+1}"
        assert log.updates[0] == (1, 0), "La primera actualización usa ŝ_0 al llegar c_1"
        assert all(llegada == indice + 1 for llegada, indice in log.updates)

    def test_hueco_sin_actualizacion(self, dataset_senoidal):
        d, encoder, cumulantes = self.preparar(dataset_senoidal)
        net, opt = build_network(encoder.width, RED_CHICA, seed=0)

        log = online_td_deploy(net, opt, d, cumulantes, self.cfg, encoder, breaks=[10])

        assert np.isnan(log.deltas[9]), "δ a través del hueco queda sin definir"
        assert (10, 9) not in log.updates
        assert len(log.updates) == len(d) - 2

    def test_congelado_igual_a_alpha_cero(self, dataset_senoidal):
        d, encoder, cumulantes = self.preparar(dataset_senoidal)
        net, _ = build_network(encoder.width, RED_CHICA, seed=2)
        original = net.copy()

        congelado = frozen_deploy(net, d, cumulantes, self.cfg, encoder)
        alpha_cero = online_td_deploy(net.copy(), init_optimizer(net), d, cumulantes, self.cfg,
                                      StateEncoder(EncoderConfig(), d.meta), alpha=0.0)

        assert congelado.to_frame().equals(alpha_cero.to_frame()), "Ambos logs deben ser idénticos"
        assert parametros_iguales(net, original), "El despliegue congelado no modifica la red"
        assert congelado.updates == []

    def test_repeticion_causal(self, dataset_senoidal):
        """Test que el búfer nunca contiene transiciones posteriores al paso actual"""
        d, encoder, cumulantes = self.preparar(dataset_senoidal)
        net, opt = build_network(encoder.width, RED_CHICA, seed=0)
        observaciones = []

        class BufferEspia(ReplayBuffer):
            def add(self, s, c, s_next, index):
                super().add(s, c, s_next, index)
                self.ultimo = index

            def sample(self, k, rng):
                lote = super().sample(k, rng)
                observaciones.append((self.ultimo, int(lote.indices.max())))
                return lote

        buffer = BufferEspia(32, encoder.width)
        online_td_deploy(net, opt, d, cumulantes, self.cfg, encoder,
                         replay=buffer, rng=np.random.default_rng(0))

        assert len(observaciones) == len(d) - 1
        assert all(maximo <= ultimo for ultimo, maximo in observaciones), \
            "Solo se repiten transiciones cuyo cumulante ya llegó"

    def test_repeticion_cero_igual_a_en_linea(self, dataset_senoidal):
        d, encoder, cumulantes = self.preparar(dataset_senoidal, n=80)
        entrenamiento = build_transitions(StateEncoder(EncoderConfig(), d.meta).encode_dataset(d), cumulantes)
        net, opt = offline_td(entrenamiento, self.cfg, seed=1, net_cfg=RED_CHICA)
        cfg_sin_repeticion = TDConfig(**{**vars(self.cfg), 'replay_steps': 0})

        en_linea, red_a, _ = online_td_with_pretrain(entrenamiento, d, cumulantes, cfg_sin_repeticion, encoder, 1,
                                                     pretrained=(net.copy(), opt.copy()))
        repeticion, red_b, _ = td_with_replay(entrenamiento, d, cumulantes, cfg_sin_repeticion,
                                              StateEncoder(EncoderConfig(), d.meta), 1,
                                              pretrained=(net.copy(), opt.copy()))

        assert en_linea.predictions == repeticion.predictions
        assert parametros_iguales(red_a, red_b), "Sin pasos de repetición ambos deben coincidir"

    def test_repeticion_siembra_con_entrenamiento(self, dataset_senoidal):
        d, encoder, cumulantes = self.preparar(dataset_senoidal, n=80)
        entrenamiento = build_transitions(StateEncoder(EncoderConfig(), d.meta).encode_dataset(d), cumulantes)

        log, net, opt = td_with_replay(entrenamiento, d, cumulantes, self.cfg, encoder, 2, net_cfg=RED_CHICA)

        assert len(log) == len(d) - 1
        assert opt.step_count == 10 + (len(d) - 1), \
            "Preentrenamiento más un paso del optimizador por transición (el de repetición)"
        assert net.all_finite()

    def test_repeticion_no_toca_el_optimizador_en_linea(self, dataset_senoidal):
        """Test que con repetición solo los mini-lotes avanzan el optimizador"""
        d, encoder, cumulantes = self.preparar(dataset_senoidal)
        net, opt = build_network(encoder.width, RED_CHICA, seed=0)
        cfg = TDConfig(**{**vars(self.cfg), 'replay_steps': 3})

        log = online_td_deploy(net, opt, d, cumulantes, cfg, encoder,
                               replay=ReplayBuffer(32, encoder.width), rng=np.random.default_rng(0))

        assert opt.step_count == 3 * len(log)
        assert len(log.updates) == len(log), "El paso en línea se sigue registrando"

    def test_preentrenamiento_respeta_huecos(self, dataset_senoidal):
        d, encoder, cumulantes = self.preparar(dataset_senoidal)
        entrenamiento = build_transitions(StateEncoder(EncoderConfig(), d.meta).encode_dataset(d), cumulantes)

        log, _, _ = online_td_with_pretrain(entrenamiento, d, cumulantes, self.cfg, encoder, 0,
                                            net_cfg=RED_CHICA, breaks=[10])

        assert (10, 9) not in log.updates
        assert np.isnan(log.deltas[9])

    def test_flujo_estacionario_no_empeora(self, dataset_senoidal):
        """Test que en un flujo estacionario TD en línea no queda peor que la red congelada"""
        d = dataset_senoidal(1200)
        entrenamiento, flujo = d.slice(0, 600), d.slice(600)
        cumulantes = cumulant_series(d, "presion")
        estados = StateEncoder(EncoderConfig(), d.meta).encode_dataset(entrenamiento)
        lote = build_transitions(estados, cumulantes[:600])
        cfg = TDConfig(gamma=0.9, eta=1e-3, alpha=1e-4, batch_size=16, epochs=20)
        net, opt = offline_td(lote, cfg, seed=3, net_cfg=RED_CHICA)

        congelado = frozen_deploy(net, flujo, cumulantes[600:], cfg, StateEncoder(EncoderConfig(), d.meta))
        en_linea, _, _ = online_td_with_pretrain(lote, flujo, cumulantes[600:], cfg,
                                                 StateEncoder(EncoderConfig(), d.meta), 3, pretrained=(net, opt))

        nmse = [evaluate_log(log, 0.9, decay=0.05, tol=1e-3, burn_in=5)[1].final_nmse
                for log in (congelado, en_linea)]
        assert nmse[1] <= nmse[0] + 0.05, f"En línea {nmse[1]:.4g} vs congelado {nmse[0]:.4g}"

    def test_capacidad_menor_al_lote(self, dataset_senoidal):
        d, encoder, cumulantes = self.preparar(dataset_senoidal)
        entrenamiento = build_transitions(StateEncoder(EncoderConfig(), d.meta).encode_dataset(d), cumulantes)
        cfg = TDConfig(batch_size=32, replay_capacity=16)

        with pytest.raises(ConfigError):
            td_with_replay(entrenamiento, d, cumulantes, cfg, encoder, 0, net_cfg=RED_CHICA)

    def test_flujo_vacio(self, dataset_senoidal):
        d, encoder, _ = self.preparar(dataset_senoidal)
        net, opt = build_network(encoder.width, RED_CHICA, seed=0)
        vacio = d.slice(0, 0)

        assert len(online_td_deploy(net, opt, vacio, np.zeros(0), self.cfg, encoder)) == 0

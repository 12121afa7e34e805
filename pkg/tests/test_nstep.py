#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tests del Aprendiz N-Step
=========================
Alineación de pares, regresión fuera de línea y emparejamiento retrasado en línea.
"""

import numpy as np
import pytest

from gvf_predictor.config.settings import EncoderConfig, NetworkConfig, NStepConfig
from gvf_predictor.core.encoder import StateEncoder, cumulant_series
from gvf_predictor.core.logs import NSTEP_COLUMN, DeploymentLog
from gvf_predictor.core.mlp import build_network, forward_batch
from gvf_predictor.core.nstep import (
    PastStates,
    build_nstep_dataset,
    nstep_batch_update,
    offline_nstep,
    online_nstep_deploy,
    online_nstep_stream,
)
from gvf_predictor.data.ingest import Dataset
from gvf_predictor.utils.errors import DataError

RED_LINEAL = NetworkConfig(hidden_sizes=[], optimizer="sgd", weight_decay=0.0)
RED_CHICA = NetworkConfig(hidden_sizes=[8], weight_decay=0.0)


class TestPares:
    """Tests de build_nstep_dataset"""

    def test_alineacion_en_rampa(self):
        """Test de c_t = t con n = 3: el par de ŝ_0 tiene objetivo 3"""
        estados = np.arange(10, dtype=float)[:, None]
        pares = build_nstep_dataset(estados, np.arange(10.0), 3)

        assert len(pares) == 7
        assert pares.targets[0] == 3.0
        assert np.array_equal(pares.targets, pares.states[:, 0] + 3), "Cada objetivo es c_{i+n}"
        assert pares[0].target_index == 3

    def test_un_solo_par(self):
        pares = build_nstep_dataset(np.zeros((101, 2)), np.arange(101.0), 100)

        assert len(pares) == 1
        assert pares.targets[0] == 100.0

    def test_secuencia_demasiado_corta(self):
        with pytest.raises(DataError):
            build_nstep_dataset(np.zeros((5, 2)), np.zeros(5), 5)
        with pytest.raises(DataError):
            build_nstep_dataset(np.zeros((5, 2)), np.zeros(5), 0)

    def test_huecos(self):
        pares = build_nstep_dataset(np.zeros((10, 1)), np.arange(10.0), 3, breaks=[5])

        assert pares.indices.tolist() == [0, 1, 5, 6], "Se descartan las ventanas que cruzan el hueco"


class TestRegresion:
    """Tests de la regresión fuera de línea"""

    def setup_method(self):
        """Configurar cada test"""
        self.estados = np.random.default_rng(0).uniform(size=(200, 4))

    def test_objetivo_constante(self):
        pares = build_nstep_dataset(self.estados, np.full(200, 0.7), 5)
        cfg = NStepConfig(n=5, eta=0.3, batch_size=len(pares), epochs=1000)

        net, _ = offline_nstep(pares, cfg, seed=0, net_cfg=RED_LINEAL)

        ecm = float(np.mean((forward_batch(net, pares.states) - 0.7) ** 2))
        assert ecm < 1e-4, f"ECM demasiado alto: {ecm}"

    def test_cero_epocas(self):
        pares = build_nstep_dataset(self.estados, np.zeros(200), 5)
        inicial, opt = build_network(4, RED_CHICA, seed=1)

        net, _ = offline_nstep(pares, NStepConfig(n=5, epochs=0), seed=0, network=inicial.copy(), optimizer=opt)

        assert all(np.array_equal(p, q) for p, q in zip(net.parameters(), inicial.parameters()))

    def test_residuos_sin_paso(self):
        pares = build_nstep_dataset(self.estados, np.ones(200), 1)
        net, opt = build_network(4, RED_CHICA, seed=2)

        residuos = nstep_batch_update(net, opt, pares, lr=0.0)

        assert np.allclose(residuos, 1.0 - forward_batch(net, pares.states))
        assert opt.step_count == 0


class TestAnillo:
    """Tests de PastStates"""

    def test_ventana_de_n(self):
        anillo = PastStates(3, 1)
        for t in range(5):
            anillo.push(np.array([float(t)]))

        assert anillo.warm
        assert anillo.get(2)[0] == 2.0
        assert anillo.get(4)[0] == 4.0
        with pytest.raises(DataError):
            anillo.get(1)
        with pytest.raises(DataError):
            anillo.get(5)

    def test_horizonte_invalido(self):
        with pytest.raises(DataError):
            PastStates(0, 1)


class TestEnLinea:
    """Tests del aprendiz n-step en línea"""

    def setup_method(self):
        """Configurar cada test"""
        self.cfg = NStepConfig(n=3, eta=1e-3, alpha=1e-3, batch_size=8, epochs=1)

    def preparar(self, dataset_senoidal, n=30):
        d = dataset_senoidal(n)
        encoder = StateEncoder(EncoderConfig(), d.meta)
        return d, encoder, cumulant_series(d, "presion")

    def test_primera_actualizacion_y_objetivos(self, dataset_senoidal):
        d, encoder, cumulantes = self.preparar(dataset_senoidal)
        net, opt = build_network(encoder.width, RED_CHICA, seed=0)

        log = online_nstep_stream(net, opt, d, cumulantes, self.cfg, encoder)

        assert len(log) == len(d) - 1
        assert log.updates[0] == (3, 0), "La primera actualización llega en el paso n con el estado 0"
        assert all(llegada - indice == 3 for llegada, indice in log.updates), \
            "El objetivo de ŝ_j es exactamente c_{j+n}"
        assert len(log.updates) == len(d) - 3
        assert np.isnan(log.deltas[:2]).all(), "Sin objetivo disponible antes del paso n"
        assert log.to_frame()[NSTEP_COLUMN].tolist()[:2] == [3, 4]

    def test_hueco_sin_emparejar(self, dataset_senoidal):
        d, encoder, cumulantes = self.preparar(dataset_senoidal)
        net, opt = build_network(encoder.width, RED_CHICA, seed=0)

        log = online_nstep_stream(net, opt, d, cumulantes, self.cfg, encoder, breaks=[10])

        llegadas = [llegada for llegada, _ in log.updates]
        assert not {10, 11, 12} & set(llegadas), "Ningún par cruza el hueco"
        assert 13 in llegadas

    def test_alpha_cero(self, dataset_senoidal):
        d, encoder, cumulantes = self.preparar(dataset_senoidal)
        net, opt = build_network(encoder.width, RED_CHICA, seed=0)
        original = net.copy()

        log = online_nstep_stream(net, opt, d, cumulantes, self.cfg, encoder, alpha=0.0)

        assert log.updates == []
        assert all(np.array_equal(p, q) for p, q in zip(net.parameters(), original.parameters()))

    def test_preentrenamiento_y_despliegue(self, dataset_senoidal):
        d, encoder, cumulantes = self.preparar(dataset_senoidal, n=60)
        estados = StateEncoder(EncoderConfig(), d.meta).encode_dataset(d)
        pares = build_nstep_dataset(estados, cumulantes, 3)

        log, net, opt = online_nstep_deploy(pares, d, cumulantes, self.cfg, encoder, seed=4, net_cfg=RED_CHICA)

        assert log.kind == "nstep" and log.horizon == 3
        assert opt.step_count == int(np.ceil(len(pares) / 8)) + len(d) - 3, \
            "Pasos fuera de línea más una actualización por objetivo llegado"
        assert net.all_finite()


def rampa(pasos: int) -> Dataset:
    """Un único sensor ``c`` con c_t = t"""
    t = np.arange(pasos, dtype=np.float64)
    return Dataset.from_arrays(t.astype(np.int64), t[:, None], ["PROD"] * pasos, ["c"])


def circulo(pasos: int, periodo: float) -> Dataset:
    """Sensores seno y coseno de una misma fase"""
    fase = 2 * np.pi * np.arange(pasos) / periodo
    valores = np.column_stack([np.sin(fase), np.cos(fase)])
    return Dataset.from_arrays(np.arange(pasos), valores, ["PROD"] * pasos, ["seno", "coseno"])


class TestOraculos:
    """Tests de n-step contra objetivos conocidos en forma cerrada"""

    def setup_method(self):
        """Configurar cada test"""
        self.codificador = EncoderConfig(beta=0.0, use_time_of_day=False, use_mode_thermometer=False)

    def test_rampa_con_horizonte_cien(self):
        """Test de c_t = t con n = 100: la predicción sobre ŝ_t es c_{t+100}"""
        d = rampa(400)
        cumulantes = cumulant_series(d, "c")
        estados = StateEncoder(self.codificador, d.meta).encode_dataset(d)
        pares = build_nstep_dataset(estados, cumulantes, 100)
        cfg = NStepConfig(n=100, eta=1.0, alpha=0.01, batch_size=len(pares), epochs=500)
        net, opt = offline_nstep(pares, cfg, seed=0, net_cfg=RED_LINEAL)

        log = online_nstep_stream(net, opt, d, cumulantes, cfg, StateEncoder(self.codificador, d.meta))

        assert log.updates[0] == (100, 0), "La primera actualización llega exactamente en el paso 100"
        assert all(llegada - indice == 100 for llegada, indice in log.updates)
        assert len(log.updates) == len(d) - 100
        assert np.isnan(log.deltas[:99]).all()
        esperado = (np.arange(len(log)) + 100) / 399.0
        assert np.allclose(log.prediction_array, esperado, atol=1e-6), "f(ŝ_t) ≈ c_{t+n} normalizado"

    def test_cumulante_periodico(self):
        d = circulo(500, 50.0)
        estados = StateEncoder(self.codificador, d.meta).encode_dataset(d)
        pares = build_nstep_dataset(estados, cumulant_series(d, "seno"), 5)
        cfg = NStepConfig(n=5, eta=0.5, batch_size=len(pares), epochs=500)

        net, _ = offline_nstep(pares, cfg, seed=1, net_cfg=RED_LINEAL)

        ecm = float(np.mean((forward_batch(net, pares.states) - pares.targets) ** 2))
        assert ecm < 1e-3, f"ECM de entrenamiento demasiado alto: {ecm}"


class TestLogNStep:
    """Tests de lectura y escritura del log n-step"""

    def test_log_vacio(self, tmp_path):
        """Test de un despliegue de un solo registro: el log no tiene filas"""
        ruta = DeploymentLog("nstep", horizon=4).to_csv(str(tmp_path / "deploy_nstep.csv"))

        recargado = DeploymentLog.from_csv(ruta, horizon=4)

        assert len(recargado) == 0
        assert recargado.kind == "nstep" and recargado.horizon == 4
        with pytest.raises(DataError):
            DeploymentLog.from_csv(ruta)

    def test_horizonte_desde_las_filas(self, tmp_path):
        log = DeploymentLog("nstep", horizon=3)
        for t in range(5):
            log.append(t, 0.1 * t, 1.0 / 3.0)
        ruta = log.to_csv(str(tmp_path / "deploy_nstep.csv"))

        recargado = DeploymentLog.from_csv(ruta, horizon=7)

        assert recargado.horizon == 3, "El horizonte de las filas prevalece"
        assert recargado.predictions == log.predictions
        assert recargado.cumulants == log.cumulants

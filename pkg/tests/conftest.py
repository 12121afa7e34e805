#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Fixtures compartidas de la suite de tests
=========================================
Datasets sintéticos pequeños y configuraciones de corrida rápidas.
"""

import numpy as np
import pytest

from gvf_predictor.config.settings import Config, NetworkConfig
from gvf_predictor.data.ingest import Dataset


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: reproducciones cualitativas largas")


@pytest.fixture
def dataset_senoidal():
    """Fábrica de Datasets con dos senos, una rampa por modo y modos PROD/BW"""
    def crear(n: int = 400, inicio: int = 1_700_000_000, periodo: float = 50.0) -> Dataset:
        t = np.arange(n, dtype=np.float64)
        modos = np.where((np.arange(n) % 40) < 30, "PROD", "BW")
        valores = np.column_stack([
            np.sin(2 * np.pi * t / periodo),
            np.cos(2 * np.pi * t / (2 * periodo)),
            (np.arange(n) % 40) / 40.0,
        ])
        return Dataset.from_arrays(inicio + np.arange(n), valores, modos, ["a", "b", "presion"])
    return crear


@pytest.fixture
def config_rapida(tmp_path):
    """Configuración chica para recorrer la tubería en segundos"""
    config = Config(seed=7)
    config.cumulant.sensor = "presion"
    config.network = NetworkConfig(hidden_sizes=[8], weight_decay=0.0)
    config.td.batch_size = 16
    config.td.epochs = 2
    config.td.eta = 1e-3
    config.td.alpha = 1e-4
    config.td.replay_capacity = 64
    config.td.gamma = 0.9
    config.nstep.n = 5
    config.nstep.batch_size = 16
    config.nstep.epochs = 2
    config.nstep.eta = 1e-3
    config.nstep.alpha = 1e-4
    config.evaluation.burn_in = 5
    config.evaluation.decay = 0.05
    config.evaluation.tol = 1e-2
    config.paths.output_dir = str(tmp_path / "salidas")
    config.logging.file_handler = False
    config.logging.console_handler = False
    return config


def cadena_uno_caliente(n_estados: int, pasos: int, cumulantes, inicio: int = 0) -> Dataset:
    """
    Recorrido cíclico 0, 1, ..., n-1, 0, ... con sensores one-hot s0..s{n-1}
    y una columna ``c`` con el cumulante del estado visitado.
    """
    visitados = np.arange(pasos) % n_estados
    valores = np.zeros((pasos, n_estados + 1))
    valores[np.arange(pasos), visitados] = 1.0
    valores[:, -1] = np.asarray(cumulantes, dtype=np.float64)[visitados]
    nombres = [f"s{i}" for i in range(n_estados)] + ["c"]
    return Dataset.from_arrays(inicio + np.arange(pasos), valores, ["PROD"] * pasos, nombres)


@pytest.fixture
def cadena():
    """Fábrica de cadenas cíclicas one-hot"""
    return cadena_uno_caliente

#!/usr/bin/env python3
"""
GVF Predictor - Paquete Principal
=================================
Predicción multi-paso en flujo (GVF y n-step) sobre telemetría de sensores,
con preentrenamiento fuera de línea, ajuste en línea en despliegue, selección
de hiperparámetros tipo despliegue y simulador de planta no estacionaria.

Licencia: MIT
"""

__version__ = "1.0.0"
__description__ = "Predicción GVF y n-step en flujo sobre telemetría de sensores"

from .config.settings import Config
from .core.encoder import StateEncoder
from .core.logs import DeploymentLog
from .data.ingest import Dataset, load_records
from .simulator.plant import PlantScenario, generate, packaged_scenario

__all__ = [
    'Config',
    'StateEncoder',
    'DeploymentLog',
    'Dataset',
    'load_records',
    'PlantScenario',
    'generate',
    'packaged_scenario',
]

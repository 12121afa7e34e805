"""
Módulo de utilidades para GVF Predictor.

Proporciona funciones auxiliares de logging, hashing y manejo de
archivos, además de la jerarquía de errores del sistema.
"""

from .helpers import (
    obtener_hash_archivo,
    obtener_hash_contenido,
    guardar_json,
    cargar_json,
    setup_logging,
)
from .errors import (
    GVFPredictorError,
    ConfigError,
    DataError,
    CheckpointError,
    NumericError,
)

__all__ = [
    'obtener_hash_archivo',
    'obtener_hash_contenido',
    'guardar_json',
    'cargar_json',
    'setup_logging',
    'GVFPredictorError',
    'ConfigError',
    'DataError',
    'CheckpointError',
    'NumericError',
]

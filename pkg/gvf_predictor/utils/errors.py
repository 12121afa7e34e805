"""
Jerarquía de errores del GVF Predictor
======================================
Cada error lleva un ``error_type`` que la CLI convierte en respuesta de
error estandarizada y en código de salida.
"""

from datetime import datetime
from typing import Any, Dict


class GVFPredictorError(Exception):
    """Error base del sistema"""

    error_type = "unknown_error"
    exit_code = 1

    def to_response(self) -> Dict[str, Any]:
        """
        Crear respuesta de error estandarizada

        Returns:
            Diccionario con el tipo de error, mensaje y fecha
        """
        return {
            'status': 'ERROR',
            'error_type': self.error_type,
            'error_message': str(self),
            'fecha_error': datetime.now().isoformat(),
        }


class ConfigError(GVFPredictorError, ValueError):
    """Configuración ausente, mal formada o que no cumple el esquema"""

    error_type = "config_error"
    exit_code = 1


class DataError(GVFPredictorError, ValueError):
    """Datos de telemetría inválidos (archivo, ancho, orden temporal, índices)"""

    error_type = "data_error"
    exit_code = 2


class CheckpointError(DataError):
    """Checkpoint truncado, de otra versión o incompatible con la red esperada"""

    error_type = "checkpoint_error"
    exit_code = 2


class NumericError(GVFPredictorError, ArithmeticError):
    """Parámetros o direcciones de actualización no finitos"""

    error_type = "numeric_error"
    exit_code = 3

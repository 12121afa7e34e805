#!/usr/bin/env python3
"""
Configuración Centralizada del Sistema GVF Predictor
====================================================
Todas las configuraciones del sistema unificadas. El documento JSON de la
corrida se valida con un esquema (jsonschema) antes de construir las
dataclasses de cada sección.
"""

import copy
import os
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, Optional

import jsonschema

from ..utils.errors import ConfigError
from ..utils.helpers import cargar_json


@dataclass
class DataConfig:
    """Configuración de ingesta de telemetría"""
    path: Optional[str] = None            # None -> <output_dir>/telemetria.csv
    reference_path: Optional[str] = None  # log de referencia para min/max
    subsample_every: int = 1
    max_gap: Optional[int] = None         # segundos; huecos mayores cortan transiciones

    def __post_init__(self):
        if self.subsample_every < 1:
            raise ConfigError("data.subsample_every debe ser >= 1")


@dataclass
class SplitConfig:
    """Partición entrenamiento / validación / despliegue"""
    train_fraction: float = 0.6
    validation_fraction: float = 0.2
    validation_steps: Optional[int] = None
    deployment_steps: Optional[int] = None


@dataclass
class CumulantConfig:
    """Señal a predecir"""
    sensor: str = "membrane_pressure"
    normalize: bool = True


@dataclass
class EncoderConfig:
    """Construcción del estado aumentado"""
    beta: float = 0.99
    thermometer_size: int = 7
    seconds_per_day: int = 86400
    mode_vocabulary: List[str] = None
    mode_lengths: Dict[str, float] = None
    default_mode_length: float = 3600.0
    use_time_of_day: bool = True
    use_mode_thermometer: bool = True
    use_mode_one_hot: bool = False
    timezone: str = "UTC"
    exclude_sensors: List[str] = None

    def __post_init__(self):
        if self.mode_vocabulary is None:
            self.mode_vocabulary = ["PROD", "BW", "MIT"]
        if self.mode_lengths is None:
            self.mode_lengths = {"PROD": 3600.0, "BW": 300.0, "MIT": 1800.0}
        if self.exclude_sensors is None:
            self.exclude_sensors = []

        if not 0.0 <= self.beta < 1.0:
            raise ConfigError(f"encoder.beta debe estar en [0, 1): {self.beta}")
        if self.thermometer_size < 1:
            raise ConfigError("encoder.thermometer_size debe ser >= 1")
        if not self.mode_vocabulary:
            raise ConfigError("encoder.mode_vocabulary no puede estar vacío")
        if self.default_mode_length <= 0:
            raise ConfigError("encoder.default_mode_length debe ser positivo")


@dataclass
class NetworkConfig:
    """Arquitectura y optimizador de la red"""
    hidden_sizes: List[int] = None
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.99
    epsilon: float = 1e-4
    weight_decay: float = 0.003
    precision: str = "float64"

    def __post_init__(self):
        if self.hidden_sizes is None:
            self.hidden_sizes = [512, 512]
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"network.optimizer desconocido: {self.optimizer}")
        if self.precision not in ("float32", "float64"):
            raise ConfigError(f"network.precision desconocida: {self.precision}")


@dataclass
class TDConfig:
    """Hiperparámetros de los aprendices GVF (TD)"""
    gamma: float = 0.99
    eta: float = 1e-4
    alpha: float = 1e-6
    batch_size: int = 512
    epochs: int = 10
    replay_capacity: int = 10000
    replay_steps: int = 1
    log_every: int = 10000

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"td.gamma debe estar en [0, 1): {self.gamma}")
        if self.eta < 0 or self.alpha < 0:
            raise ConfigError("td.eta y td.alpha no pueden ser negativos")
        if self.batch_size < 1:
            raise ConfigError("td.batch_size debe ser >= 1")
        if self.epochs < 0 or self.replay_steps < 0:
            raise ConfigError("td.epochs y td.replay_steps no pueden ser negativos")


@dataclass
class NStepConfig:
    """Hiperparámetros del aprendiz n-step directo"""
    n: int = 100
    eta: float = 1e-4
    alpha: float = 1e-6
    batch_size: int = 512
    epochs: int = 10
    log_every: int = 10000

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("nstep.n debe ser >= 1")
        if self.eta < 0 or self.alpha < 0:
            raise ConfigError("nstep.eta y nstep.alpha no pueden ser negativos")
        if self.batch_size < 1:
            raise ConfigError("nstep.batch_size debe ser >= 1")


@dataclass
class EvaluationConfig:
    """Métricas y barrido de validación"""
    decay: float = 0.001
    tol: float = 1e-4
    burn_in: int = 100
    summary_fraction: float = 0.25
    sweep_etas: List[float] = None
    sweep_alphas: List[float] = None
    max_workers: int = 1

    def __post_init__(self):
        if self.sweep_etas is None:
            self.sweep_etas = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7]
        if self.sweep_alphas is None:
            self.sweep_alphas = [1e-4, 1e-5, 1e-6, 1e-7, 1e-8]
        if not 0.0 < self.decay <= 1.0:
            raise ConfigError(f"evaluation.decay debe estar en (0, 1]: {self.decay}")
        if not 0.0 < self.tol < 1.0:
            raise ConfigError(f"evaluation.tol debe estar en (0, 1): {self.tol}")


@dataclass
class SimulatorConfig:
    """Simulador de planta"""
    steps: int = 20000
    scenario: Optional[Dict[str, Any]] = None  # None -> escenario empaquetado
    shift: Optional[Dict[str, Any]] = None


@dataclass
class PathsConfig:
    """Configuración de rutas y directorios"""
    output_dir: str = "salidas"
    logs_dir: str = "logs"

    @property
    def logs_path(self) -> str:
        """Directorio de logs (relativo al de salida salvo que sea absoluto)"""
        if os.path.isabs(self.logs_dir):
            return self.logs_dir
        return os.path.join(self.output_dir, self.logs_dir)

    def ensure(self) -> None:
        """Crear directorios si no existen"""
        for directory in (self.output_dir, self.logs_path):
            os.makedirs(directory, exist_ok=True)

    def artifact(self, filename: str) -> str:
        """Obtener ruta de un artefacto dentro del directorio de salida"""
        return os.path.join(self.output_dir, filename)


@dataclass
class LoggingConfig:
    """Configuración de logging"""
    level: str = "INFO"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    file_handler: bool = True
    console_handler: bool = True


_NUMERO = {"type": "number"}
_ENTERO = {"type": "integer"}
_LISTA_NUMEROS = {"type": "array", "items": _NUMERO, "minItems": 1}

CONFIG_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "data": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "path": {"type": ["string", "null"]},
                "reference_path": {"type": ["string", "null"]},
                "subsample_every": {"type": "integer", "minimum": 1},
                "max_gap": {"type": ["integer", "null"], "minimum": 1},
            },
        },
        "split": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "train_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "validation_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "validation_steps": {"type": ["integer", "null"], "minimum": 1},
                "deployment_steps": {"type": ["integer", "null"], "minimum": 0},
            },
        },
        "cumulant": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sensor": {"type": "string", "minLength": 1},
                "normalize": {"type": "boolean"},
            },
        },
        "encoder": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "beta": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "thermometer_size": {"type": "integer", "minimum": 1},
                "seconds_per_day": {"type": "integer", "minimum": 1},
                "mode_vocabulary": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "mode_lengths": {"type": "object", "additionalProperties": {"type": "number", "exclusiveMinimum": 0}},
                "default_mode_length": {"type": "number", "exclusiveMinimum": 0},
                "use_time_of_day": {"type": "boolean"},
                "use_mode_thermometer": {"type": "boolean"},
                "use_mode_one_hot": {"type": "boolean"},
                "timezone": {"type": "string"},
                "exclude_sensors": {"type": "array", "items": {"type": "string"}},
            },
        },
        "network": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "hidden_sizes": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "optimizer": {"enum": ["adam", "sgd"]},
                "beta1": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "beta2": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "weight_decay": {"type": "number", "minimum": 0},
                "precision": {"enum": ["float32", "float64"]},
            },
        },
        "td": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gamma": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "eta": _NUMERO,
                "alpha": _NUMERO,
                "batch_size": {"type": "integer", "minimum": 1},
                "epochs": {"type": "integer", "minimum": 0},
                "replay_capacity": {"type": "integer", "minimum": 1},
                "replay_steps": {"type": "integer", "minimum": 0},
                "log_every": {"type": "integer", "minimum": 1},
            },
        },
        "nstep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "eta": _NUMERO,
                "alpha": _NUMERO,
                "batch_size": {"type": "integer", "minimum": 1},
                "epochs": {"type": "integer", "minimum": 0},
                "log_every": {"type": "integer", "minimum": 1},
            },
        },
        "evaluation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "decay": _NUMERO,
                "tol": _NUMERO,
                "burn_in": {"type": "integer", "minimum": 0},
                "summary_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "sweep_etas": _LISTA_NUMEROS,
                "sweep_alphas": _LISTA_NUMEROS,
                "max_workers": {"type": "integer", "minimum": 1},
            },
        },
        "simulator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "steps": {"type": "integer", "minimum": 1},
                "scenario": {"type": ["object", "null"]},
                "shift": {"type": ["object", "null"]},
            },
        },
        "paths": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "output_dir": {"type": "string"},
                "logs_dir": {"type": "string"},
            },
        },
        "logging": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "level": {"enum": ["DEBUG", "INFO", "WARNING", "ERROR"]},
                "format": {"type": "string"},
                "file_handler": {"type": "boolean"},
                "console_handler": {"type": "boolean"},
            },
        },
    },
}

_SECCIONES = {
    'data': DataConfig,
    'split': SplitConfig,
    'cumulant': CumulantConfig,
    'encoder': EncoderConfig,
    'network': NetworkConfig,
    'td': TDConfig,
    'nstep': NStepConfig,
    'evaluation': EvaluationConfig,
    'simulator': SimulatorConfig,
    'paths': PathsConfig,
    'logging': LoggingConfig,
}


class Config:
    """Clase principal de configuración del sistema"""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.data = DataConfig()
        self.split = SplitConfig()
        self.cumulant = CumulantConfig()
        self.encoder = EncoderConfig()
        self.network = NetworkConfig()
        self.td = TDConfig()
        self.nstep = NStepConfig()
        self.evaluation = EvaluationConfig()
        self.simulator = SimulatorConfig()
        self.paths = PathsConfig()
        self.logging = LoggingConfig()

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> 'Config':
        """
        Construir configuración desde un diccionario validado

        Args:
            raw: Documento de configuración

        Returns:
            Instancia de configuración
        """
        try:
            jsonschema.validate(instance=raw, schema=CONFIG_SCHEMA)
        except jsonschema.ValidationError as e:
            ruta = "/".join(str(p) for p in e.absolute_path) or "<raíz>"
            raise ConfigError(f"Configuración inválida en '{ruta}': {e.message}") from e

        config = cls(seed=raw.get('seed', 0))
        for nombre, clase in _SECCIONES.items():
            seccion = raw.get(nombre)
            if seccion is not None:
                setattr(config, nombre, clase(**copy.deepcopy(seccion)))
        return config

    @classmethod
    def from_file(cls, path: str) -> 'Config':
        """
        Cargar configuración desde un archivo JSON

        Args:
            path: Ruta del archivo de configuración

        Returns:
            Instancia de configuración
        """
        if not os.path.exists(path):
            raise ConfigError(f"Archivo de configuración no encontrado: {path}")
        try:
            raw = cargar_json(path)
        except ValueError as e:
            raise ConfigError(f"JSON inválido en {path}: {e}") from e
        return cls.from_dict(raw)

    def to_dict(self) -> Dict[str, Any]:
        """Instantánea serializable de la configuración"""
        snapshot: Dict[str, Any] = {'seed': self.seed}
        for nombre in _SECCIONES:
            snapshot[nombre] = asdict(getattr(self, nombre))
        return snapshot

    def validate(self) -> bool:
        """Validar la configuración completa contra el esquema"""
        Config.from_dict(self.to_dict())
        return True

    def override(self, seed: Optional[int] = None, gamma: Optional[float] = None,
                 n: Optional[int] = None, alpha: Optional[float] = None,
                 eta: Optional[float] = None, out: Optional[str] = None) -> 'Config':
        """
        Aplicar los valores de la línea de comandos sobre la configuración

        Args:
            seed: Semilla raíz
            gamma: Descuento de la GVF
            n: Horizonte n-step
            alpha: Tamaño de paso en línea (TD y n-step)
            eta: Tamaño de paso fuera de línea (TD y n-step)
            out: Directorio de salida

        Returns:
            La misma instancia (para encadenar)
        """
        if seed is not None:
            self.seed = seed
        if gamma is not None:
            self.td.gamma = gamma
        if n is not None:
            self.nstep.n = n
        if alpha is not None:
            self.td.alpha = alpha
            self.nstep.alpha = alpha
        if eta is not None:
            self.td.eta = eta
            self.nstep.eta = eta
        if out is not None:
            self.paths.output_dir = out
        # Revalidar invariantes de las secciones modificadas
        for nombre in ('td', 'nstep'):
            seccion = getattr(self, nombre)
            setattr(self, nombre, type(seccion)(**{f.name: getattr(seccion, f.name) for f in fields(seccion)}))
        return self

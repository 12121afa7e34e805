#!/usr/bin/env python3
"""
Simulador de Planta
===================
Generador determinista de telemetría multivariada no estacionaria con forma de
planta de tratamiento: modos de operación en calendario, dinámica por modo,
deriva lenta, ruido, reinicios por limpieza y cambios de distribución
inyectables. Produce Datasets en el formato de ingesta (1 Hz).

Familias de señal: constante, seno, rampa y autorregresiva de primer orden.
"""

import copy
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import jsonschema
import numpy as np
from dateutil import parser as date_parser
from dateutil import tz

from ..data.ingest import Dataset
from ..utils.errors import ConfigError, DataError

logger = logging.getLogger(__name__)

FAMILIES = ("constant", "sine", "ramp", "ar1")
SHIFT_KINDS = ("offset", "scale", "regime_swap")
SECONDS_PER_DAY = 86400


@dataclass
class SensorSpec:
    """Un sensor: familia base, ruido y desplazamientos por modo"""
    name: str
    family: str = "sine"
    base: float = 0.0
    amplitude: float = 1.0
    period: float = float(SECONDS_PER_DAY)  # segundos (seno)
    phase: float = 0.0                      # radianes (seno)
    rate: float = 0.0                       # unidades por segundo (rampa)
    ar_coef: float = 0.99                   # coeficiente AR(1)
    noise: float = 0.0
    mode_offsets: Dict[str, float] = field(default_factory=dict)


@dataclass
class DailyMode:
    """Modo que ocurre cada día a una hora fija"""
    mode: str
    second_of_day: int
    duration: int


@dataclass
class ModeSchedule:
    """Ciclo ordenado (modo, duración) más modos diarios que lo interrumpen"""
    cycle: List[Tuple[str, int]]
    daily: List[DailyMode] = field(default_factory=list)

    @property
    def cycle_length(self) -> int:
        return sum(d for _, d in self.cycle)


@dataclass
class DriftSpec:
    """Tendencia lineal y saltos en pasos fijos"""
    slope: float = 0.0                   # unidades por segundo
    sensors: List[str] = field(default_factory=list)
    changepoints: List[Tuple[int, float]] = field(default_factory=list)


@dataclass
class EventSpec:
    """Reinicios de rampas al entrar en el modo de limpieza y valores atípicos"""
    cleaning_mode: Optional[str] = "BW"
    outlier_rate: float = 0.0
    outlier_scale: float = 0.0
    outlier_sensors: List[str] = field(default_factory=list)


@dataclass
class PlantScenario:
    """Escenario completo del simulador"""
    sensors: List[SensorSpec]
    schedule: ModeSchedule
    drift: DriftSpec = field(default_factory=DriftSpec)
    events: EventSpec = field(default_factory=EventSpec)
    seed: int = 0
    start: str = "2024-01-01T00:00:00+00:00"

    def validate(self) -> None:
        """Verificar invariantes del escenario"""
        if not self.sensors:
            raise ConfigError("El escenario necesita al menos un sensor")
        nombres = [s.name for s in self.sensors]
        if len(set(nombres)) != len(nombres):
            raise ConfigError("Nombres de sensores repetidos en el escenario")
        for s in self.sensors:
            if s.family not in FAMILIES:
                raise ConfigError(f"Familia de señal desconocida para {s.name}: {s.family}")
            if s.family == "sine" and s.period <= 0:
                raise ConfigError(f"Periodo no positivo para {s.name}")
            if s.family == "ar1" and not -1.0 < s.ar_coef < 1.0:
                raise ConfigError(f"Coeficiente AR(1) fuera de (-1, 1) para {s.name}")
            if s.noise < 0:
                raise ConfigError(f"Ruido negativo para {s.name}")
        if not self.schedule.cycle:
            raise ConfigError("El ciclo de modos no puede estar vacío")
        if any(d <= 0 for _, d in self.schedule.cycle) or any(m.duration <= 0 for m in self.schedule.daily):
            raise ConfigError("Las duraciones de los modos deben ser positivas")
        for m in self.schedule.daily:
            if not 0 <= m.second_of_day < SECONDS_PER_DAY:
                raise ConfigError(f"Hora del modo diario {m.mode} fuera del día")
        desconocidos = (set(self.drift.sensors) | set(self.events.outlier_sensors)) - set(nombres)
        if desconocidos:
            raise ConfigError(f"Sensores desconocidos en deriva o eventos: {sorted(desconocidos)}")
        self.start_timestamp()

    def start_timestamp(self) -> int:
        """Inicio como segundos Unix (sin zona se asume UTC)"""
        try:
            inicio = date_parser.isoparse(self.start)
        except ValueError as e:
            raise ConfigError(f"Fecha de inicio inválida: {self.start}") from e
        if inicio.tzinfo is None:
            inicio = inicio.replace(tzinfo=tz.UTC)
        return int(inicio.timestamp())


@dataclass
class ShiftSpec:
    """Cambio de distribución a partir de ``onset``"""
    onset: int
    sensors: List[str] = field(default_factory=list)
    kind: str = "offset"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in SHIFT_KINDS:
            raise ConfigError(f"Tipo de cambio desconocido: {self.kind}")
        if self.onset < 0:
            raise ConfigError(f"Inicio del cambio negativo: {self.onset}")


def mode_sequence(schedule: ModeSchedule, timestamps: np.ndarray, start: int) -> np.ndarray:
    """
    Modo activo en cada timestamp

    Args:
        schedule: Calendario
        timestamps: Segundos Unix
        start: Inicio del ciclo

    Returns:
        Arreglo de nombres de modo
    """
    nombres = np.array([m for m, _ in schedule.cycle], dtype=object)
    limites = np.cumsum([d for _, d in schedule.cycle])
    posicion = (timestamps - start) % schedule.cycle_length
    modos = nombres[np.searchsorted(limites, posicion, side='right')]
    segundo = timestamps % SECONDS_PER_DAY
    for diario in schedule.daily:
        dentro = (segundo - diario.second_of_day) % SECONDS_PER_DAY < diario.duration
        modos = np.where(dentro, diario.mode, modos)
    return modos


def _senal_base(spec: SensorSpec, t: np.ndarray, resets: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if spec.family == "constant":
        return np.full(len(t), spec.base)
    if spec.family == "sine":
        return spec.base + spec.amplitude * np.sin(2.0 * np.pi * t / spec.period + spec.phase)
    if spec.family == "ramp":
        # Tiempo desde el último reinicio (o desde el inicio)
        ultimo = np.maximum.accumulate(np.where(resets, np.arange(len(t)), 0))
        return spec.base + spec.rate * (t - t[ultimo])
    innovaciones = rng.standard_normal(len(t)) * np.sqrt(1.0 - spec.ar_coef ** 2)
    x = np.empty(len(t))
    previo = 0.0
    for i, e in enumerate(innovaciones):
        previo = spec.ar_coef * previo + e
        x[i] = previo
    return spec.base + spec.amplitude * x


def generate(scenario: PlantScenario, steps: int, seed: Optional[int] = None) -> Dataset:
    """
    Generar telemetría a 1 Hz

    Args:
        scenario: Escenario validable
        steps: Número de registros (>= 1)
        seed: Semilla (por defecto la del escenario)

    Returns:
        Dataset determinista dada la semilla
    """
    if steps < 1:
        raise ConfigError(f"El número de pasos debe ser >= 1: {steps}")
    scenario.validate()
    seed = scenario.seed if seed is None else seed
    hijos = np.random.SeedSequence(seed).spawn(len(scenario.sensors) + 1)

    inicio = scenario.start_timestamp()
    timestamps = inicio + np.arange(steps, dtype=np.int64)
    t = np.arange(steps, dtype=np.float64)
    modos = mode_sequence(scenario.schedule, timestamps, inicio)

    limpieza = scenario.events.cleaning_mode
    if limpieza is None:
        resets = np.zeros(steps, dtype=bool)
    else:
        en_limpieza = modos == limpieza
        resets = en_limpieza & ~np.concatenate([[False], en_limpieza[:-1]])

    columnas = []
    for spec, hijo in zip(scenario.sensors, hijos[:-1]):
        rng = np.random.default_rng(hijo)
        valores = _senal_base(spec, t, resets, rng)
        for modo, desplazamiento in spec.mode_offsets.items():
            valores = valores + np.where(modos == modo, desplazamiento, 0.0)
        if spec.name in scenario.drift.sensors:
            valores = valores + scenario.drift.slope * t
            for paso, salto in scenario.drift.changepoints:
                if 0 <= paso < steps:
                    valores[paso:] += salto
        if spec.noise > 0:
            valores = valores + spec.noise * rng.standard_normal(steps)
        columnas.append(valores)
    values = np.column_stack(columnas)

    eventos = scenario.events
    if eventos.outlier_rate > 0 and eventos.outlier_sensors:
        rng = np.random.default_rng(hijos[-1])
        nombres = [s.name for s in scenario.sensors]
        for nombre in eventos.outlier_sensors:
            j = nombres.index(nombre)
            mascara = rng.random(steps) < eventos.outlier_rate
            values[mascara, j] += eventos.outlier_scale * rng.standard_normal(int(mascara.sum()))

    logger.info(f"Simulación: {steps:,} registros, {len(scenario.sensors)} sensores, semilla {seed}")
    return Dataset.from_arrays(timestamps, values, modos.astype(str), [s.name for s in scenario.sensors])


def inject_shift(d: Dataset, shift: ShiftSpec) -> Dataset:
    """
    Aplicar un cambio de distribución desde ``shift.onset``

    Args:
        d: Dataset original
        shift: Especificación del cambio

    Returns:
        Dataset nuevo; los registros anteriores al inicio no cambian
    """
    if shift.onset >= len(d):
        raise DataError(f"Inicio del cambio {shift.onset} fuera del rango ({len(d)} registros)")
    desconocidos = set(shift.sensors) - set(d.sensor_names)
    if desconocidos:
        raise DataError(f"Sensores desconocidos en el cambio: {sorted(desconocidos)}")
    if not shift.sensors:
        return d

    columnas = [d.sensor_names.index(s) for s in shift.sensors]
    values = np.array(d.values, dtype=np.float64)
    tramo = values[shift.onset:]
    if shift.kind == "offset":
        tramo[:, columnas] += shift.value
    elif shift.kind == "scale":
        tramo[:, columnas] *= shift.value
    else:
        # Permutación cíclica de las columnas afectadas
        tramo[:, columnas] = tramo[:, np.roll(columnas, 1)]
    logger.info(f"Cambio '{shift.kind}' inyectado en {len(columnas)} sensores desde el paso {shift.onset:,}")
    return Dataset(d.timestamps, values, d.modes, d.meta)


_SENSOR_SCHEMA = {
    "type": "object",
    "required": ["name"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "family": {"enum": list(FAMILIES)},
        "base": {"type": "number"},
        "amplitude": {"type": "number"},
        "period": {"type": "number", "exclusiveMinimum": 0},
        "phase": {"type": "number"},
        "rate": {"type": "number"},
        "ar_coef": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1},
        "noise": {"type": "number", "minimum": 0},
        "mode_offsets": {"type": "object", "additionalProperties": {"type": "number"}},
    },
}

SCENARIO_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["sensors", "schedule"],
    "additionalProperties": False,
    "properties": {
        "sensors": {"type": "array", "items": _SENSOR_SCHEMA, "minItems": 1},
        "schedule": {
            "type": "object",
            "required": ["cycle"],
            "additionalProperties": False,
            "properties": {
                "cycle": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "array", "minItems": 2, "maxItems": 2},
                },
                "daily": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["mode", "second_of_day", "duration"],
                        "additionalProperties": False,
                        "properties": {
                            "mode": {"type": "string"},
                            "second_of_day": {"type": "integer", "minimum": 0, "maximum": SECONDS_PER_DAY - 1},
                            "duration": {"type": "integer", "minimum": 1},
                        },
                    },
                },
            },
        },
        "drift": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "slope": {"type": "number"},
                "sensors": {"type": "array", "items": {"type": "string"}},
                "changepoints": {"type": "array", "items": {"type": "array", "minItems": 2, "maxItems": 2}},
            },
        },
        "events": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "cleaning_mode": {"type": ["string", "null"]},
                "outlier_rate": {"type": "number", "minimum": 0, "maximum": 1},
                "outlier_scale": {"type": "number", "minimum": 0},
                "outlier_sensors": {"type": "array", "items": {"type": "string"}},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "start": {"type": "string"},
    },
}

SHIFT_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["onset"],
    "additionalProperties": False,
    "properties": {
        "onset": {"type": "integer", "minimum": 0},
        "sensors": {"type": "array", "items": {"type": "string"}},
        "kind": {"enum": list(SHIFT_KINDS)},
        "value": {"type": "number"},
    },
}


def _validar(raw: Dict[str, Any], schema: Dict[str, Any], que: str) -> None:
    try:
        jsonschema.validate(instance=raw, schema=schema)
    except jsonschema.ValidationError as e:
        ruta = "/".join(str(p) for p in e.absolute_path) or "<raíz>"
        raise ConfigError(f"{que} inválido en '{ruta}': {e.message}") from e


def scenario_from_dict(raw: Dict[str, Any]) -> PlantScenario:
    """Construir y validar un escenario desde su descripción estructurada"""
    _validar(raw, SCENARIO_SCHEMA, "Escenario")
    raw = copy.deepcopy(raw)
    schedule = raw['schedule']
    scenario = PlantScenario(
        sensors=[SensorSpec(**s) for s in raw['sensors']],
        schedule=ModeSchedule([(str(m), int(d)) for m, d in schedule['cycle']],
                              [DailyMode(**m) for m in schedule.get('daily', [])]),
        drift=DriftSpec(**{**raw.get('drift', {}),
                           'changepoints': [(int(p), float(s)) for p, s in raw.get('drift', {}).get('changepoints', [])]}),
        events=EventSpec(**raw.get('events', {})),
        seed=raw.get('seed', 0),
        start=raw.get('start', PlantScenario.start),
    )
    scenario.validate()
    return scenario


def scenario_to_dict(scenario: PlantScenario) -> Dict[str, Any]:
    """Descripción estructurada (JSON) de un escenario"""
    raw = asdict(scenario)
    raw['schedule']['cycle'] = [[m, d] for m, d in scenario.schedule.cycle]
    raw['drift']['changepoints'] = [[p, s] for p, s in scenario.drift.changepoints]
    return raw


def shift_from_dict(raw: Dict[str, Any]) -> ShiftSpec:
    _validar(raw, SHIFT_SCHEMA, "Cambio de distribución")
    return ShiftSpec(**raw)


def packaged_scenario(seed: int = 0) -> PlantScenario:
    """
    Escenario empaquetado: 12 sensores (uno constante), ciclo PROD 3600 s /
    BW 300 s, MIT diario de 30 minutos, componentes de periodo diario, deriva
    lenta y presión de membrana en rampa que se reinicia en cada retrolavado.
    """
    dia = float(SECONDS_PER_DAY)
    sensores = [
        SensorSpec("membrane_pressure", "ramp", base=0.4, rate=1.0 / 3600, noise=0.01,
                   mode_offsets={"BW": -0.2, "MIT": -0.1}),
        SensorSpec("feed_flow", "sine", base=10.0, amplitude=1.0, period=dia, noise=0.05,
                   mode_offsets={"BW": -5.0, "MIT": -2.0}),
        SensorSpec("permeate_flow", "ar1", base=8.0, amplitude=0.5, ar_coef=0.995, noise=0.02,
                   mode_offsets={"BW": -8.0, "MIT": -3.0}),
        SensorSpec("feed_temperature", "sine", base=12.0, amplitude=2.0, period=dia, phase=-np.pi / 2,
                   noise=0.05),
        SensorSpec("feed_turbidity", "ar1", base=3.0, amplitude=1.0, ar_coef=0.999, noise=0.05),
        SensorSpec("feed_conductivity", "sine", base=250.0, amplitude=15.0, period=dia / 4, noise=1.0),
        SensorSpec("tank_level", "sine", base=2.5, amplitude=0.4, period=7200.0, noise=0.02,
                   mode_offsets={"BW": -0.3}),
        SensorSpec("backwash_pressure", "constant", base=0.0, noise=0.02, mode_offsets={"BW": 2.0}),
        SensorSpec("air_scour_flow", "constant", base=0.0, noise=0.05, mode_offsets={"BW": 5.0, "MIT": 1.0}),
        SensorSpec("chlorine_residual", "ar1", base=1.2, amplitude=0.1, ar_coef=0.99, noise=0.01,
                   mode_offsets={"MIT": 0.8}),
        SensorSpec("ph", "sine", base=7.0, amplitude=0.1, period=dia, phase=np.pi / 3, noise=0.01),
        SensorSpec("pump_speed_setpoint", "constant", base=1450.0),
    ]
    return PlantScenario(
        sensors=sensores,
        schedule=ModeSchedule([("PROD", 3600), ("BW", 300)], [DailyMode("MIT", 7200, 1800)]),
        drift=DriftSpec(slope=2e-6, sensors=["membrane_pressure", "feed_temperature"]),
        events=EventSpec(cleaning_mode="BW", outlier_rate=1e-4, outlier_scale=3.0,
                         outlier_sensors=["feed_turbidity"]),
        seed=seed,
    )

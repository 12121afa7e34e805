#!/usr/bin/env python3
"""
Codificador de Estado Aumentado
===============================
Convierte observaciones crudas en el estado del agente ŝ_t:

    [sensores normalizados (d) | trazas de memoria (d) | codificaciones (k)]

Las codificaciones son, en este orden y según la configuración: hora del día
(seno/coseno), termómetro cíclico del modo actual (senos | cosenos) y one-hot
del modo.
"""

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from dateutil import tz

from ..config.settings import EncoderConfig
from ..data.ingest import Dataset, RawRecord, SensorMeta
from ..utils.errors import ConfigError, DataError
from ..utils.helpers import obtener_hash_contenido

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AugmentedState:
    """Estado aumentado ŝ_t"""
    s_hat: np.ndarray
    step: int


@dataclass
class ModeClock:
    """Reloj del modo: modo activo, inicio y duración media de modos completados"""
    mode: Optional[str] = None
    start: int = 0
    durations: Dict[str, Tuple[float, int]] = field(default_factory=dict)

    def copy(self) -> 'ModeClock':
        return ModeClock(self.mode, self.start, dict(self.durations))

    def advance(self, mode: str, timestamp: int) -> float:
        """
        Registrar la observación y devolver los segundos transcurridos en el modo.

        Al cambiar de modo, la duración del modo que termina entra en su promedio.
        """
        if mode != self.mode:
            if self.mode is not None:
                media, cuenta = self.durations.get(self.mode, (0.0, 0))
                duracion = float(timestamp - self.start)
                self.durations[self.mode] = (media + (duracion - media) / (cuenta + 1), cuenta + 1)
            self.mode = mode
            self.start = timestamp
        return float(timestamp - self.start)

    def mode_length(self, mode: str, cfg: EncoderConfig) -> float:
        """m_l: duración programada, si no el promedio observado, si no la de respaldo"""
        if mode in cfg.mode_lengths:
            return float(cfg.mode_lengths[mode])
        if mode in self.durations and self.durations[mode][0] > 0:
            return self.durations[mode][0]
        return float(cfg.default_mode_length)


@dataclass
class TraceState:
    """Trazas z_t (una por sensor normalizado) y reloj de modo"""
    z: np.ndarray
    clock: ModeClock = field(default_factory=ModeClock)

    @classmethod
    def zeros(cls, width: int) -> 'TraceState':
        return cls(np.zeros(width))


def normalize(o: float, meta: SensorMeta) -> float:
    """
    Normalizar una lectura al rango [min, max] de referencia (sin recortar).

    Args:
        o: Lectura cruda
        meta: Metadatos del sensor

    Returns:
        (o - min) / (max - min)
    """
    if meta.max == meta.min:
        raise DataError(f"Sensor constante, no se puede normalizar: {meta.name}")
    return (o - meta.min) / (meta.max - meta.min)


def encode_one_hot(value: int, k: int) -> np.ndarray:
    """Vector one-hot de longitud k con un 1 en ``value``"""
    if not 0 <= value < k:
        raise DataError(f"Índice {value} fuera del vocabulario de tamaño {k}")
    vector = np.zeros(k)
    vector[value] = 1.0
    return vector


def encode_time_of_day(s: float, seconds_per_day: int = 86400) -> Tuple[float, float]:
    """(sin, cos) de la fase del día; s se toma módulo seconds_per_day"""
    angulo = 2.0 * np.pi * (s % seconds_per_day) / seconds_per_day
    return float(np.sin(angulo)), float(np.cos(angulo))


def encode_mode_thermometer(elapsed: float, m_l: float, thermometer_size: int = 7) -> np.ndarray:
    """
    Termómetro cíclico del modo: [sin(2^j π e/m_l) | cos(2^j π e/m_l)], j = 0..size-1.

    Args:
        elapsed: Segundos desde que comenzó el modo actual
        m_l: Duración esperada del modo
        thermometer_size: Número de frecuencias

    Returns:
        Vector de longitud 2 * thermometer_size
    """
    if m_l <= 0:
        raise DataError(f"La duración del modo debe ser positiva: {m_l}")
    argumentos = (2.0 ** np.arange(thermometer_size)) * np.pi * (elapsed / m_l)
    return np.concatenate([np.sin(argumentos), np.cos(argumentos)])


def update_trace(z: TraceState, o_norm: np.ndarray, beta: float) -> TraceState:
    """z' = β z + (1 - β) o_norm, componente a componente"""
    o_norm = np.asarray(o_norm, dtype=np.float64)
    if o_norm.shape != z.z.shape:
        raise DataError(f"Ancho de traza {z.z.shape} no coincide con observación {o_norm.shape}")
    return TraceState(beta * z.z + (1.0 - beta) * o_norm, z.clock)


class StateEncoder:
    """
    Tubería secuencial de codificación (una por flujo).

    Mantiene las trazas y el reloj de modo entre llamadas; no se comparte
    entre flujos.
    """

    def __init__(self, cfg: EncoderConfig, meta: Sequence[SensorMeta]):
        """
        Inicializar codificador

        Args:
            cfg: Configuración del codificador
            meta: Metadatos de todas las columnas del archivo (sin constantes
                entre las incluidas en el estado)
        """
        self.cfg = cfg
        self.meta = tuple(meta)
        nombres = [m.name for m in self.meta]
        desconocidos = set(cfg.exclude_sensors) - set(nombres)
        if desconocidos:
            raise ConfigError(f"Sensores excluidos desconocidos: {sorted(desconocidos)}")

        self._indices = np.array([j for j, m in enumerate(self.meta)
                                  if m.name not in cfg.exclude_sensors], dtype=np.int64)
        incluidos = [self.meta[j] for j in self._indices]
        constantes = [m.name for m in incluidos if m.constant]
        if constantes:
            raise DataError(f"Sensores constantes en el estado: {constantes}")
        self.sensor_names = [m.name for m in incluidos]
        self._mins = np.array([m.min for m in incluidos], dtype=np.float64)
        self._ranges = np.array([m.max - m.min for m in incluidos], dtype=np.float64)

        if cfg.timezone.upper() == "UTC":
            self._tz = None
        else:
            self._tz = tz.gettz(cfg.timezone)
            if self._tz is None:
                raise ConfigError(f"Zona horaria desconocida: {cfg.timezone}")

        self.trace = TraceState.zeros(self.d)
        self.step = 0

    @property
    def d(self) -> int:
        return len(self._indices)

    @property
    def k(self) -> int:
        k = 0
        if self.cfg.use_time_of_day:
            k += 2
        if self.cfg.use_mode_thermometer:
            k += 2 * self.cfg.thermometer_size
        if self.cfg.use_mode_one_hot:
            k += len(self.cfg.mode_vocabulary)
        return k

    @property
    def width(self) -> int:
        return 2 * self.d + self.k

    def reset(self) -> None:
        """Volver a trazas en cero y reloj vacío"""
        self.trace = TraceState.zeros(self.d)
        self.step = 0

    def restore(self, trace: TraceState, step: int) -> None:
        """Continuar desde un estado de trazas previo"""
        if trace.z.shape != (self.d,):
            raise DataError(f"Traza de ancho {trace.z.shape[0]} para {self.d} sensores")
        self.trace = TraceState(np.array(trace.z, dtype=np.float64), trace.clock.copy())
        self.step = step

    def _seconds_within_day(self, timestamp: int) -> float:
        if self._tz is None:
            return float(timestamp % self.cfg.seconds_per_day)
        local = datetime.fromtimestamp(timestamp, tz=self._tz)
        return float(local.hour * 3600 + local.minute * 60 + local.second)

    def _encodings(self, record: RawRecord, clock: ModeClock) -> List[np.ndarray]:
        bloques = []
        if self.cfg.use_time_of_day:
            bloques.append(np.array(encode_time_of_day(self._seconds_within_day(record.timestamp),
                                                       self.cfg.seconds_per_day)))
        elapsed = clock.advance(record.mode, record.timestamp)
        if self.cfg.use_mode_thermometer:
            m_l = clock.mode_length(record.mode, self.cfg)
            bloques.append(encode_mode_thermometer(elapsed, m_l, self.cfg.thermometer_size))
        if self.cfg.use_mode_one_hot:
            try:
                indice = self.cfg.mode_vocabulary.index(record.mode)
            except ValueError:
                raise DataError(f"Modo fuera del vocabulario: {record.mode}") from None
            bloques.append(encode_one_hot(indice, len(self.cfg.mode_vocabulary)))
        return bloques

    def encode(self, record: RawRecord) -> AugmentedState:
        """
        Construir ŝ_t para el siguiente registro del flujo

        Args:
            record: Observación imputada

        Returns:
            Estado aumentado (las trazas internas avanzan un paso)
        """
        values = np.asarray(record.values, dtype=np.float64)
        if values.shape != (len(self.meta),):
            raise DataError(f"Ancho del registro {values.shape[0]} distinto de {len(self.meta)}")
        o_norm = (values[self._indices] - self._mins) / self._ranges
        if np.isnan(o_norm).any():
            raise DataError(f"Registro con valores faltantes en t={record.timestamp}; imputar antes")

        clock = self.trace.clock.copy()
        trace = update_trace(TraceState(self.trace.z, clock), o_norm, self.cfg.beta)
        s_hat = np.concatenate([o_norm, trace.z, *self._encodings(record, clock)])

        state = AugmentedState(s_hat, self.step)
        self.trace = trace
        self.step += 1
        return state

    def encode_dataset(self, d: Dataset) -> np.ndarray:
        """
        Codificar un Dataset completo desde trazas en cero

        Returns:
            Matriz N x width con ŝ_0..ŝ_{N-1}
        """
        if d.sensor_names != [m.name for m in self.meta]:
            raise DataError("El Dataset no tiene las columnas del codificador")
        self.reset()
        estados = np.empty((len(d), self.width))
        for i in range(len(d)):
            estados[i] = self.encode(d.record(i)).s_hat
        return estados

    def layout(self) -> Dict[str, Any]:
        """Orden y ancho de los bloques del estado (para el manifiesto)"""
        bloques: List[Dict[str, Any]] = [
            {'block': 'sensors', 'width': self.d, 'names': list(self.sensor_names)},
            {'block': 'traces', 'width': self.d, 'beta': self.cfg.beta},
        ]
        if self.cfg.use_time_of_day:
            bloques.append({'block': 'time_of_day', 'width': 2})
        if self.cfg.use_mode_thermometer:
            bloques.append({'block': 'mode_thermometer', 'width': 2 * self.cfg.thermometer_size})
        if self.cfg.use_mode_one_hot:
            bloques.append({'block': 'mode_one_hot', 'width': len(self.cfg.mode_vocabulary),
                            'vocabulary': list(self.cfg.mode_vocabulary)})
        return {'width': self.width, 'blocks': bloques}

    def layout_hash(self) -> str:
        """Hash estable del layout"""
        return obtener_hash_contenido(json.dumps(self.layout(), sort_keys=True))


def cumulant_series(d: Dataset, sensor: str, normalize_values: bool = True) -> np.ndarray:
    """
    Serie c_0..c_{N-1} del sensor elegido como cumulante

    Args:
        d: Dataset imputado con metadatos de referencia
        sensor: Nombre de la columna
        normalize_values: Normalizar con el rango de referencia del sensor

    Returns:
        Vector float64 de longitud len(d)
    """
    if sensor not in d.sensor_names:
        raise DataError(f"Sensor de cumulante desconocido: {sensor}")
    serie = np.array(d.column(sensor), dtype=np.float64)
    if np.isnan(serie).any():
        raise DataError(f"Cumulante con valores faltantes: {sensor}")
    if not normalize_values:
        return serie
    meta = d.meta[d.sensor_names.index(sensor)]
    if meta.constant:
        raise DataError(f"Sensor constante, no se puede normalizar: {sensor}")
    return (serie - meta.min) / (meta.max - meta.min)


def build_state(o_t: RawRecord, prev: Optional[Tuple[TraceState, AugmentedState]],
                cfg: EncoderConfig, meta: Sequence[SensorMeta]) -> Tuple[AugmentedState, TraceState]:
    """
    Mapa de actualización U(o_{t+1}, ŝ_t) en forma funcional.

    Args:
        o_t: Observación imputada
        prev: (trazas, estado) del paso anterior o None en el primer paso
        cfg: Configuración del codificador
        meta: Metadatos de las columnas

    Returns:
        (estado aumentado, trazas actualizadas)
    """
    encoder = StateEncoder(cfg, meta)
    if prev is not None:
        trace, anterior = prev
        encoder.restore(trace, anterior.step + 1)
    state = encoder.encode(o_t)
    return state, encoder.trace

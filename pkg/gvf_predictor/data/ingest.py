#!/usr/bin/env python3
"""
Ingesta de Telemetría
=====================
Carga, limpieza, submuestreo y partición de logs de sensores preservando el
orden temporal.

Formato de archivo: CSV con encabezado obligatorio; primera columna
``timestamp`` (segundos enteros), última columna ``mode`` y en medio las
lecturas numéricas. Celdas vacías o no numéricas se marcan como faltantes.
"""

import csv
import logging
import os
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..utils.errors import DataError

logger = logging.getLogger(__name__)

TIMESTAMP_COLUMN = "timestamp"
MODE_COLUMN = "mode"


@dataclass(frozen=True)
class RawRecord:
    """Observación cruda o_t: lecturas (NaN = faltante) y etiqueta de modo"""
    timestamp: int
    values: np.ndarray
    mode: str


@dataclass(frozen=True)
class SensorMeta:
    """Rango de referencia de un sensor"""
    name: str
    min: float
    max: float

    @property
    def constant(self) -> bool:
        return self.min == self.max


@dataclass(frozen=True)
class SplitSpec:
    """Índices de corte: train=[0, train_end), validación=[train_end, validation_end), despliegue=resto"""
    train_end: int
    validation_end: int

    def validate(self, n: int) -> None:
        """Verificar 0 < train_end < validation_end <= n"""
        if not 0 < self.train_end < self.validation_end <= n:
            raise DataError(
                f"Partición inválida (train_end={self.train_end}, "
                f"validation_end={self.validation_end}) para {n} registros"
            )


def compute_sensor_meta(values: np.ndarray, names: Sequence[str]) -> List[SensorMeta]:
    """
    Calcular min/max por sensor ignorando faltantes.

    Un sensor sin ninguna lectura presente se considera constante en 0.

    Args:
        values: Matriz N x d de lecturas
        names: Nombres de los d sensores

    Returns:
        Lista de SensorMeta en el orden de columnas
    """
    meta = []
    for j, name in enumerate(names):
        columna = values[:, j] if values.size else np.empty(0)
        presentes = columna[~np.isnan(columna)]
        if presentes.size == 0:
            meta.append(SensorMeta(name, 0.0, 0.0))
        else:
            meta.append(SensorMeta(name, float(presentes.min()), float(presentes.max())))
    return meta


class Dataset:
    """
    Secuencia ordenada e inmutable de registros con metadatos por sensor.

    Se almacena por columnas (timestamps, matriz de valores, modos); los
    registros individuales se materializan bajo demanda.
    """

    def __init__(self, timestamps: np.ndarray, values: np.ndarray, modes: np.ndarray,
                 meta: Sequence[SensorMeta]):
        timestamps = np.asarray(timestamps, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        modes = np.asarray(modes, dtype=object)
        if values.ndim != 2:
            values = values.reshape(len(timestamps), -1)

        if not (len(timestamps) == values.shape[0] == len(modes)):
            raise DataError("timestamps, valores y modos deben tener la misma longitud")
        if values.shape[1] != len(meta):
            raise DataError(f"Ancho {values.shape[1]} no coincide con {len(meta)} metadatos")
        if len(timestamps) > 1 and np.any(np.diff(timestamps) <= 0):
            fila = int(np.argmax(np.diff(timestamps) <= 0)) + 1
            raise DataError(f"Timestamps no estrictamente crecientes en la fila {fila}")

        # Copia solo si el arreglo del llamador sigue siendo escribible
        if timestamps.flags.writeable:
            timestamps = timestamps.copy()
        if values.flags.writeable:
            values = values.copy()
        if modes.flags.writeable:
            modes = modes.copy()
        for arreglo in (timestamps, values, modes):
            arreglo.flags.writeable = False
        self.timestamps = timestamps
        self.values = values
        self.modes = modes
        self.meta: Tuple[SensorMeta, ...] = tuple(meta)

    @classmethod
    def from_arrays(cls, timestamps, values, modes, names: Sequence[str]) -> 'Dataset':
        """Construir un Dataset calculando los metadatos sobre los propios datos"""
        values = np.asarray(values, dtype=np.float64).reshape(len(timestamps), len(names))
        return cls(timestamps, values, modes, compute_sensor_meta(values, names))

    @classmethod
    def concatenate(cls, parts: Sequence['Dataset']) -> 'Dataset':
        """Concatenar segmentos que comparten metadatos"""
        if not parts:
            raise DataError("No hay segmentos para concatenar")
        meta = parts[0].meta
        return cls(
            np.concatenate([p.timestamps for p in parts]),
            np.concatenate([p.values for p in parts], axis=0),
            np.concatenate([p.modes for p in parts]),
            meta,
        )

    def __len__(self) -> int:
        return len(self.timestamps)

    def __iter__(self) -> Iterator[RawRecord]:
        for i in range(len(self)):
            yield self.record(i)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.meta == other.meta
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.values, other.values, equal_nan=True)
            and list(self.modes) == list(other.modes)
        )

    @property
    def width(self) -> int:
        return len(self.meta)

    @property
    def sensor_names(self) -> List[str]:
        return [m.name for m in self.meta]

    @property
    def records(self) -> List[RawRecord]:
        return list(self)

    def record(self, i: int) -> RawRecord:
        """Registro i-ésimo"""
        return RawRecord(int(self.timestamps[i]), self.values[i], str(self.modes[i]))

    def column(self, name: str) -> np.ndarray:
        """Serie de un sensor por nombre"""
        try:
            j = self.sensor_names.index(name)
        except ValueError:
            raise DataError(f"Sensor desconocido: {name}") from None
        return self.values[:, j]

    def slice(self, start: int, stop: Optional[int] = None, step: int = 1) -> 'Dataset':
        """Sub-secuencia con los mismos metadatos"""
        sl = slice(start, stop, step)
        return Dataset(self.timestamps[sl], self.values[sl], self.modes[sl], self.meta)

    def with_meta(self, meta: Sequence[SensorMeta]) -> 'Dataset':
        """Mismos registros con otros metadatos"""
        return Dataset(self.timestamps, self.values, self.modes, meta)


def _validar_anchos(path: str) -> List[str]:
    """Verificar que todas las filas tengan el ancho del encabezado"""
    with open(path, 'r', encoding='utf-8', newline='') as f:
        lector = csv.reader(f)
        try:
            encabezado = next(lector)
        except StopIteration:
            raise DataError(f"Archivo vacío: {path}") from None
        for numero, fila in enumerate(lector, start=2):
            if not fila:
                continue
            if len(fila) != len(encabezado):
                raise DataError(
                    f"Ancho de fila inconsistente en {path}:{numero} "
                    f"({len(fila)} campos, se esperaban {len(encabezado)})"
                )
    return [c.strip() for c in encabezado]


def load_records(path: str, schema: Optional[Sequence[str]] = None) -> Dataset:
    """
    Cargar un log de telemetría.

    Args:
        path: Ruta del archivo CSV
        schema: Nombres esperados de las columnas de sensores (opcional)

    Returns:
        Dataset con los registros en el orden del archivo
    """
    if not os.path.exists(path):
        raise DataError(f"Archivo no encontrado: {path}")

    try:
        encabezado = _validar_anchos(path)
    except (OSError, UnicodeDecodeError, csv.Error) as e:
        raise DataError(f"No se pudo leer {path}: {e}") from e

    if len(encabezado) < 2 or encabezado[0] != TIMESTAMP_COLUMN or encabezado[-1] != MODE_COLUMN:
        raise DataError(
            f"Encabezado inválido en {path}: se espera '{TIMESTAMP_COLUMN}' primero y "
            f"'{MODE_COLUMN}' al final"
        )
    sensores = encabezado[1:-1]
    if schema is not None and list(schema) != sensores:
        raise DataError(f"El encabezado de {path} no coincide con el esquema esperado")

    frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    frame.columns = encabezado

    try:
        timestamps = pd.to_numeric(frame[TIMESTAMP_COLUMN], errors='raise').to_numpy()
    except (ValueError, TypeError) as e:
        raise DataError(f"Timestamp no numérico en {path}: {e}") from e
    if timestamps.size and not np.all(np.equal(np.mod(timestamps, 1), 0)):
        raise DataError(f"Los timestamps de {path} deben ser enteros")

    if sensores:
        values = frame[sensores].apply(lambda columna: columna.map(_celda_a_float)).to_numpy(dtype=np.float64)
    else:
        values = np.empty((len(frame), 0))
    modes = frame[MODE_COLUMN].str.strip().to_numpy(dtype=object)

    faltantes = int(np.isnan(values).sum())
    dataset = Dataset.from_arrays(timestamps.astype(np.int64), values, modes, sensores)
    logger.info(f"Cargados {len(dataset)} registros de {path} ({dataset.width} sensores, "
                f"{faltantes} celdas faltantes)")
    return dataset


def _celda_a_float(celda: str) -> float:
    """Valor exacto de una celda; vacía o no numérica queda como NaN"""
    try:
        return float(celda)
    except ValueError:
        return float('nan')


def save_records(d: Dataset, path: str) -> str:
    """
    Guardar un Dataset en el formato de ingesta.

    Args:
        d: Dataset a guardar
        path: Ruta de destino

    Returns:
        Ruta del archivo guardado
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    frame = pd.DataFrame(d.values, columns=d.sensor_names)
    frame.insert(0, TIMESTAMP_COLUMN, d.timestamps)
    frame[MODE_COLUMN] = d.modes
    frame.to_csv(path, index=False, lineterminator='\n')
    logger.info(f"Dataset guardado en: {path} ({len(d)} registros)")
    return path


def remove_constant_sensors(d: Dataset) -> Tuple[Dataset, List[str]]:
    """
    Eliminar sensores constantes (max == min sobre los metadatos).

    Args:
        d: Dataset con metadatos calculados

    Returns:
        (Dataset sin constantes, nombres eliminados)
    """
    conservar = [j for j, m in enumerate(d.meta) if not m.constant]
    eliminados = [m.name for m in d.meta if m.constant]
    if not eliminados:
        return d, []

    resultado = Dataset(d.timestamps, d.values[:, conservar], d.modes,
                        [d.meta[j] for j in conservar])
    logger.info(f"Sensores constantes eliminados: {len(eliminados)} de {d.width}")
    return resultado, eliminados


def impute_missing(r: RawRecord) -> RawRecord:
    """Reemplazar cada valor faltante por 0.0"""
    faltantes = np.isnan(r.values)
    if not faltantes.any():
        return r
    return RawRecord(r.timestamp, np.where(faltantes, 0.0, r.values), r.mode)


def impute_dataset(d: Dataset) -> Dataset:
    """Imputación con cero sobre todo el Dataset (metadatos sin cambios)"""
    if not np.isnan(d.values).any():
        return d
    return Dataset(d.timestamps, np.nan_to_num(d.values, nan=0.0), d.modes, d.meta)


def subsample(d: Dataset, k: int) -> Dataset:
    """
    Conservar los registros 0, k, 2k, ...

    Args:
        d: Dataset original
        k: Factor de submuestreo (>= 1)

    Returns:
        Dataset submuestreado con los mismos metadatos
    """
    if k < 1:
        raise DataError(f"El factor de submuestreo debe ser >= 1: {k}")
    if k == 1:
        return d
    return d.slice(0, None, k)


def split_dataset(d: Dataset, s: SplitSpec) -> Tuple[Dataset, Dataset, Dataset]:
    """
    Partir en entrenamiento, validación y despliegue.

    Returns:
        (train, validation, deployment) compartiendo metadatos
    """
    s.validate(len(d))
    return d.slice(0, s.train_end), d.slice(s.train_end, s.validation_end), d.slice(s.validation_end)


def split_from_tail(n: int, validation_steps: int, deployment_steps: int = 0) -> SplitSpec:
    """Partición desde el final: los últimos pasos son despliegue, los anteriores validación"""
    validation_end = n - deployment_steps
    spec = SplitSpec(validation_end - validation_steps, validation_end)
    spec.validate(n)
    return spec


def split_from_fractions(n: int, train_fraction: float, validation_fraction: float) -> SplitSpec:
    """Partición por fracciones de la longitud total"""
    if train_fraction + validation_fraction > 1.0:
        raise DataError("La suma de fracciones de entrenamiento y validación excede 1")
    train_end = int(round(n * train_fraction))
    spec = SplitSpec(train_end, train_end + int(round(n * validation_fraction)))
    spec.validate(n)
    return spec


def with_reference_meta(d: Dataset, reference: Dataset) -> Dataset:
    """
    Reemplazar min/max por los de un log de referencia.

    El despliegue nunca debe filtrarse en la normalización: los rangos vienen del
    log de referencia (por defecto el segmento de entrenamiento).
    """
    if reference.sensor_names != d.sensor_names:
        raise DataError("El log de referencia tiene otros sensores")
    return d.with_meta(compute_sensor_meta(np.asarray(reference.values), reference.sensor_names))


def find_gaps(timestamps: np.ndarray, max_gap: int) -> np.ndarray:
    """
    Índices donde comienza un nuevo segmento por una caída de planta.

    Args:
        timestamps: Timestamps ordenados
        max_gap: Separación máxima (segundos) entre registros consecutivos

    Returns:
        Índices i tales que timestamps[i] - timestamps[i-1] > max_gap
    """
    saltos = np.diff(np.asarray(timestamps, dtype=np.int64))
    return np.flatnonzero(saltos > max_gap) + 1


def prepare_dataset(d: Dataset, subsample_every: int = 1,
                    reference_end: Optional[int] = None,
                    reference: Optional[Dataset] = None) -> Tuple[Dataset, List[str]]:
    """
    Preprocesamiento estándar: submuestreo, imputación, rangos de referencia y
    eliminación de constantes.

    Args:
        d: Dataset crudo
        subsample_every: Factor de submuestreo
        reference_end: Los primeros ``reference_end`` registros (ya submuestreados)
            definen min/max cuando no hay log de referencia externo
        reference: Log de referencia externo (crudo, mismo esquema)

    Returns:
        (Dataset listo, sensores eliminados)
    """
    d = impute_dataset(subsample(d, subsample_every))
    if reference is not None:
        ref = impute_dataset(subsample(reference, subsample_every))
    elif reference_end is not None:
        ref = d.slice(0, reference_end)
    else:
        ref = d
    # Los metadatos se recalculan tras imputar para que los ceros cuenten en el rango
    d = with_reference_meta(d, ref)
    return remove_constant_sensors(d)

#!/usr/bin/env python3
"""
Métricas Retroactivas
=====================
Objetivos calculados después del hecho (retornos truncados y c_{t+n}),
estadísticas de Welford con ponderación exponencial y NMSE en flujo.

NMSE_t = media-EW de (v̂_t - G_t)² / varianza-EW de G_t. Un valor < 1 indica
que el predictor supera a la media móvil de los objetivos.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..utils.errors import ConfigError, DataError
from .logs import DeploymentLog

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricState:
    """Media y varianza con ponderación exponencial"""
    ew_mean: float = 0.0
    ew_var: float = 0.0
    decay: float = 0.001
    count: int = 0

    def __post_init__(self):
        if not 0.0 < self.decay <= 1.0:
            raise ConfigError(f"La tasa de decaimiento debe estar en (0, 1]: {self.decay}")


def ew_welford_update(m: MetricState, x: float) -> MetricState:
    """
    Actualizar media y varianza EW con una muestra.

    La primera muestra inicializa la media (d = 0, varianza 0); luego
    d = x - media; media += a·d; var = (1 - a)(var + a·d²).
    """
    if m.count == 0:
        return MetricState(float(x), 0.0, m.decay, 1)
    a = m.decay
    d = x - m.ew_mean
    return MetricState(m.ew_mean + a * d, (1.0 - a) * (m.ew_var + a * d * d), a, m.count + 1)


def ew_welford_series(x: Sequence[float], decay: float) -> Tuple[np.ndarray, np.ndarray]:
    """Medias y varianzas EW tras cada muestra (mismo recurrente que ew_welford_update)"""
    if not 0.0 < decay <= 1.0:
        raise ConfigError(f"La tasa de decaimiento debe estar en (0, 1]: {decay}")
    x = np.asarray(x, dtype=np.float64)
    medias = np.empty(len(x))
    varianzas = np.empty(len(x))
    media, var = 0.0, 0.0
    for t, valor in enumerate(x):
        if t == 0:
            media = float(valor)
        else:
            d = valor - media
            media += decay * d
            var = (1.0 - decay) * (var + decay * d * d)
        medias[t] = media
        varianzas[t] = var
    return medias, varianzas


def return_horizon(gamma: float, tol: float) -> int:
    """K = ceil(ln tol / ln γ): primer K con γ^K < tol (1 para γ = 0)"""
    if not 0.0 <= gamma < 1.0:
        raise ConfigError(f"gamma debe estar en [0, 1): {gamma}")
    if not 0.0 < tol < 1.0:
        raise ConfigError(f"tol debe estar en (0, 1): {tol}")
    if gamma == 0.0:
        return 1
    return max(1, math.ceil(math.log(tol) / math.log(gamma)))


@dataclass(frozen=True)
class TruncatedReturn:
    """Retorno truncado con su metadato de sesgo"""
    value: float
    partial: bool
    horizon: int
    bound: float  # |G - G_truncado| <= tol·sup|c|/(1-γ) cuando no es parcial


def truncated_return(cumulants: Sequence[float], gamma: float, tol: float) -> TruncatedReturn:
    """
    G_t = Σ_{j<K} γ^j c_{t+1+j}

    Args:
        cumulants: c_{t+1}, c_{t+2}, ...
        gamma: Descuento
        tol: Tolerancia de truncamiento

    Returns:
        Valor, bandera de retorno parcial (menos de K muestras), K y cota
    """
    c = np.asarray(cumulants, dtype=np.float64)
    k = return_horizon(gamma, tol)
    usados = c[:k]
    valor = float(np.sum(gamma ** np.arange(len(usados)) * usados))
    cota = tol * float(np.max(np.abs(c))) / (1.0 - gamma) if len(c) else 0.0
    return TruncatedReturn(valor, len(c) < k, k, cota)


def compute_returns(series: Sequence[float], gamma: float, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Retornos truncados para cada fila de un log

    Args:
        series: Columna ``cumulant`` del log (la fila t contiene c_{t+1})
        gamma: Descuento
        tol: Tolerancia de truncamiento

    Returns:
        (retornos, máscara de parciales) con G[t] = Σ_{j<K} γ^j series[t+j]
    """
    series = np.asarray(series, dtype=np.float64)
    k = return_horizon(gamma, tol)
    if len(series) == 0:
        return np.zeros(0), np.zeros(0, dtype=bool)
    pesos = gamma ** np.arange(k)
    relleno = np.concatenate([series, np.zeros(k - 1)])
    retornos = np.correlate(relleno, pesos, mode='valid')
    parcial = np.arange(len(series)) + k > len(series)
    return retornos, parcial


def nstep_targets(series: Sequence[float], n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Objetivos c_{t+n} para cada fila de un log n-step

    Returns:
        (objetivos con NaN donde faltan, máscara de parciales)
    """
    if n < 1:
        raise ConfigError(f"El horizonte debe ser >= 1: {n}")
    series = np.asarray(series, dtype=np.float64)
    objetivos = np.full(len(series), np.nan)
    if len(series) >= n:
        objetivos[:len(series) - n + 1] = series[n - 1:]
    return objetivos, np.isnan(objetivos)


def nmse_stream(predictions: Sequence[float], targets: Sequence[float], decay: float,
                burn_in: int = 0, valid: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Serie de NMSE en flujo

    Args:
        predictions: v̂_t
        targets: G_t o c_{t+n}
        decay: Tasa de decaimiento EW
        burn_in: Muestras válidas a procesar antes de emitir valores
        valid: Máscara de filas a considerar (por defecto las de objetivo finito)

    Returns:
        NMSE por fila; NaN durante el burn-in, en filas excluidas y cuando la
        varianza de los objetivos es cero
    """
    p = np.asarray(predictions, dtype=np.float64)
    g = np.asarray(targets, dtype=np.float64)
    if p.shape != g.shape:
        raise DataError("Predicciones y objetivos desalineados")
    if valid is None:
        valid = np.isfinite(g)
    if not 0.0 < decay <= 1.0:
        raise ConfigError(f"La tasa de decaimiento debe estar en (0, 1]: {decay}")

    salida = np.full(len(p), np.nan)
    error_medio = 0.0
    media, var = 0.0, 0.0
    vistos = 0
    for t in np.flatnonzero(valid):
        err = (p[t] - g[t]) ** 2
        if vistos == 0:
            error_medio = err
            media = g[t]
        else:
            error_medio += decay * (err - error_medio)
            d = g[t] - media
            media += decay * d
            var = (1.0 - decay) * (var + decay * d * d)
        vistos += 1
        if vistos > burn_in and var > 0.0:
            salida[t] = error_medio / var
    return salida


@dataclass
class EvalSummary:
    """Resumen de una serie de NMSE (incluye cuartiles para diagramas de caja)"""
    steps: int
    evaluated: int
    excluded_partial: int
    final_nmse: float
    mean_nmse: float
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    mse: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def summarize_nmse(nmse: np.ndarray, valid: np.ndarray, squared_error: np.ndarray,
                   summary_fraction: float = 0.25) -> EvalSummary:
    """
    Resumir una serie de NMSE

    Args:
        nmse: Serie de NMSE (NaN = sin valor)
        valid: Filas con objetivo completo
        squared_error: Errores cuadráticos por fila
        summary_fraction: Fracción final de las filas válidas para ``final_nmse``

    Returns:
        Resumen; los NaN (burn-in, varianza cero) se excluyen
    """
    indices = np.flatnonzero(valid)
    cola = indices[int(len(indices) * (1.0 - summary_fraction)):]
    finales = nmse[cola][np.isfinite(nmse[cola])]
    finitos = nmse[np.isfinite(nmse)]
    nan = float('nan')

    if len(finitos):
        q1, mediana, q3 = (float(x) for x in np.percentile(finitos, [25, 50, 75]))
        rango = q3 - q1
        dentro = finitos[(finitos >= q1 - 1.5 * rango) & (finitos <= q3 + 1.5 * rango)]
        bigote_bajo, bigote_alto = float(dentro.min()), float(dentro.max())
    else:
        q1 = mediana = q3 = bigote_bajo = bigote_alto = nan

    return EvalSummary(
        steps=len(nmse),
        evaluated=int(len(finitos)),
        excluded_partial=int(len(nmse) - len(indices)),
        final_nmse=float(finales.mean()) if len(finales) else nan,
        mean_nmse=float(finitos.mean()) if len(finitos) else nan,
        median=mediana, q1=q1, q3=q3,
        whisker_low=bigote_bajo, whisker_high=bigote_alto,
        mse=float(squared_error[indices].mean()) if len(indices) else nan,
    )


def log_targets(log: DeploymentLog, gamma: float, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """Objetivos retroactivos de un log: retornos (td) o c_{t+n} (nstep)"""
    if log.kind == "nstep":
        return nstep_targets(log.cumulant_array, log.horizon)
    return compute_returns(log.cumulant_array, gamma, tol)


def evaluate_log(log: DeploymentLog, gamma: float, decay: float = 0.001, tol: float = 1e-4,
                 burn_in: int = 100, summary_fraction: float = 0.25) -> Tuple[pd.DataFrame, EvalSummary]:
    """
    Evaluar un log de despliegue contra sus objetivos retroactivos

    Args:
        log: Log de despliegue (td o nstep)
        gamma: Descuento de la GVF (ignorado para n-step)
        decay: Tasa de decaimiento EW
        tol: Tolerancia de truncamiento de los retornos
        burn_in: Muestras antes de emitir NMSE
        summary_fraction: Fracción final usada en ``final_nmse``

    Returns:
        (tabla step, prediction, cumulant, target, partial, squared_error, nmse; resumen)
    """
    objetivos, parcial = log_targets(log, gamma, tol)
    predicciones = log.prediction_array
    valid = ~parcial
    cuadrados = np.where(valid, (predicciones - objetivos) ** 2, np.nan)
    nmse = nmse_stream(predicciones, objetivos, decay, burn_in, valid)

    frame = pd.DataFrame({
        'step': np.asarray(log.steps, dtype=np.int64),
        'prediction': predicciones,
        'cumulant': log.cumulant_array,
        'target': np.where(valid, objetivos, np.nan),
        'partial': parcial,
        'squared_error': cuadrados,
        'nmse': nmse,
    })
    resumen = summarize_nmse(nmse, valid, cuadrados, summary_fraction)
    logger.info(f"Evaluación ({log.kind}): {resumen.evaluated:,} valores de NMSE, "
                f"{resumen.excluded_partial:,} filas con objetivo parcial excluidas, "
                f"NMSE final {resumen.final_nmse:.4g}")
    return frame, resumen

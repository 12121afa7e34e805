#!/usr/bin/env python3
"""
Log de Despliegue
=================
Registro de solo-agregado de cada paso de un flujo de despliegue. La fila t
contiene la predicción hecha sobre ŝ_t con los pesos w_t (antes de actualizar),
el cumulante c_{t+1} que llega a continuación y el error de la actualización.
Para n-step se agrega ``target_step`` = t + n.
"""

import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from ..utils.errors import DataError

logger = logging.getLogger(__name__)

COLUMNS = ['step', 'prediction', 'cumulant', 'delta']
NSTEP_COLUMN = 'target_step'

# Suficiente para ida y vuelta exacta de float64 en texto
FLOAT_FORMAT = '%.17g'


@dataclass
class DeploymentLog:
    """
    Serie de predicciones de un aprendiz en despliegue

    Attributes:
        kind: "td" (GVF) o "nstep"
        horizon: n para logs n-step
        updates: Instrumentación (paso de llegada del cumulante, índice del
            estado usado) de cada actualización aplicada
    """
    kind: str = "td"
    horizon: Optional[int] = None
    steps: List[int] = field(default_factory=list)
    predictions: List[float] = field(default_factory=list)
    cumulants: List[float] = field(default_factory=list)
    deltas: List[float] = field(default_factory=list)
    updates: List[Tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("td", "nstep"):
            raise DataError(f"Tipo de log desconocido: {self.kind}")
        if self.kind == "nstep" and (self.horizon is None or self.horizon < 1):
            raise DataError("Un log n-step necesita horizonte n >= 1")

    def __len__(self) -> int:
        return len(self.steps)

    def append(self, step: int, prediction: float, cumulant: float, delta: float = float('nan')) -> None:
        if self.steps and step != self.steps[-1] + 1:
            raise DataError(f"Paso {step} fuera de orden (último {self.steps[-1]})")
        self.steps.append(step)
        self.predictions.append(prediction)
        self.cumulants.append(cumulant)
        self.deltas.append(delta)

    def record_update(self, arrival_step: int, state_index: int) -> None:
        self.updates.append((arrival_step, state_index))

    @property
    def prediction_array(self) -> np.ndarray:
        return np.asarray(self.predictions, dtype=np.float64)

    @property
    def cumulant_array(self) -> np.ndarray:
        return np.asarray(self.cumulants, dtype=np.float64)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({
            'step': np.asarray(self.steps, dtype=np.int64),
            'prediction': self.prediction_array,
            'cumulant': self.cumulant_array,
            'delta': np.asarray(self.deltas, dtype=np.float64),
        })
        if self.kind == "nstep":
            frame[NSTEP_COLUMN] = frame['step'] + self.horizon
        return frame

    def to_csv(self, path: str) -> str:
        """Escribir el log como archivo separado por comas"""
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        logger.info(f"Log de despliegue guardado en: {path} ({len(self)} pasos)")
        return path

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, horizon: Optional[int] = None) -> 'DeploymentLog':
        """
        Reconstruir un log desde su tabla

        Args:
            frame: Tabla con las columnas de ``to_frame``
            horizon: n para un log n-step sin filas (la tabla no lo contiene)
        """
        faltantes = [c for c in COLUMNS if c not in frame.columns]
        if faltantes:
            raise DataError(f"Columnas faltantes en el log: {faltantes}")
        kind = "td"
        if NSTEP_COLUMN in frame.columns:
            kind = "nstep"
            if len(frame):
                horizontes = (frame[NSTEP_COLUMN] - frame['step']).unique()
                if len(horizontes) != 1:
                    raise DataError("target_step inconsistente en el log n-step")
                horizon = int(horizontes[0])
            elif horizon is None:
                raise DataError("Log n-step vacío: indique el horizonte n")
        else:
            horizon = None
        return cls(kind=kind, horizon=horizon,
                   steps=[int(s) for s in frame['step']],
                   predictions=frame['prediction'].astype(float).tolist(),
                   cumulants=frame['cumulant'].astype(float).tolist(),
                   deltas=frame['delta'].astype(float).tolist())

    @classmethod
    def from_csv(cls, path: str, horizon: Optional[int] = None) -> 'DeploymentLog':
        if not os.path.exists(path):
            raise DataError(f"Log de despliegue no encontrado: {path}")
        try:
            frame = pd.read_csv(path, float_precision='round_trip')
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise DataError(f"Log de despliegue ilegible: {path} ({e})") from e
        return cls.from_frame(frame, horizon=horizon)

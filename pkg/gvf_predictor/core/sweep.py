#!/usr/bin/env python3
"""
Barrido de Validación
=====================
Selección conjunta de tamaños de paso (η fuera de línea, α en línea) tratando
la validación como un despliegue: se preentrena con η sobre entrenamiento y se
recorre la validación una vez, en orden, actualizando con α. Cada error se
mide con los pesos anteriores a la actualización de ese paso.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
import pandas as pd

from ..config.settings import Config
from ..data.ingest import Dataset
from ..utils.errors import ConfigError, DataError, NumericError
from .evaluation import evaluate_log, log_targets
from .logs import DeploymentLog
from .mlp import Network, OptimizerState
from .pipeline import TrainingSet, build_training_set, deploy_learner, pretrain_learner

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')

Pretrained = Optional[Tuple[Network, OptimizerState]]


@dataclass
class SweepGrid:
    """Grilla de tamaños de paso fuera de línea (η) y en línea (α)"""
    etas: List[float]
    alphas: List[float]

    def __post_init__(self):
        self.etas = [float(e) for e in self.etas]
        self.alphas = [float(a) for a in self.alphas]
        if not self.etas or not self.alphas:
            raise ConfigError("La grilla del barrido no puede estar vacía")
        if any(v <= 0 for v in self.etas + self.alphas):
            raise ConfigError("Los tamaños de paso del barrido deben ser positivos")

    @property
    def size(self) -> int:
        return len(self.etas) * len(self.alphas)

    def candidates(self) -> Iterator[Tuple[int, int]]:
        """Celdas (i, j) en orden de grilla"""
        return itertools.product(range(len(self.etas)), range(len(self.alphas)))


@dataclass
class SweepResult:
    """Matriz de errores medios de validación y par seleccionado"""
    etas: List[float]
    alphas: List[float]
    errors: np.ndarray
    learner_kind: str
    eta_scores: Optional[List[float]] = None

    @property
    def best_index(self) -> Tuple[int, int]:
        finitos = np.where(np.isfinite(self.errors), self.errors, np.inf)
        i, j = np.unravel_index(int(np.argmin(finitos)), finitos.shape)
        return int(i), int(j)

    @property
    def best_eta(self) -> float:
        return self.etas[self.best_index[0]]

    @property
    def best_alpha(self) -> float:
        return self.alphas[self.best_index[1]]

    @property
    def best_error(self) -> float:
        i, j = self.best_index
        return float(self.errors[i, j])

    def to_frame(self) -> pd.DataFrame:
        """Filas η, columnas α, celdas con el error medio"""
        frame = pd.DataFrame(self.errors, index=pd.Index(self.etas, name='eta'), columns=self.alphas)
        frame.columns.name = 'alpha'
        return frame

    def to_dict(self) -> Dict[str, Any]:
        return {
            'learner': self.learner_kind,
            'best': {'eta': self.best_eta, 'alpha': self.best_alpha, 'error': self.best_error},
            'etas': list(self.etas),
            'alphas': list(self.alphas),
            'errors': [[float(x) for x in fila] for fila in self.errors],
            'eta_scores': self.eta_scores,
        }


def geometric_grid(start: float, ratio: float, count: int) -> List[float]:
    """[start, start·ratio, ..., start·ratio^(count-1)]"""
    if start <= 0 or ratio <= 0 or count < 1:
        raise ConfigError("Grilla geométrica inválida")
    return [start * ratio ** i for i in range(count)]


def cell_seed(seed: int, i: int) -> int:
    """Semilla del preentrenamiento de la fila i de la grilla"""
    return int(np.random.SeedSequence([seed, i]).generate_state(1)[0])


def validation_error(log: DeploymentLog, gamma: float, tol: float) -> float:
    """Error cuadrático medio previo a la actualización sobre filas con objetivo completo"""
    objetivos, parcial = log_targets(log, gamma, tol)
    validos = ~parcial
    if not validos.any():
        raise DataError("La validación es demasiado corta para tener objetivos completos")
    return float(np.mean((log.prediction_array[validos] - objetivos[validos]) ** 2))


def _mapear(fn: Callable[[T], R], items: Sequence[T], max_workers: int) -> List[R]:
    # Resultados en el orden de entrada, con o sin hilos
    if max_workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(fn, items))


class ValidationSweep:
    """Barrido sobre un par entrenamiento / validación fijo"""

    def __init__(self, train: Dataset, validation: Dataset, config: Config, learner_kind: str,
                 seed: Optional[int] = None, max_workers: Optional[int] = None):
        """
        Inicializar barrido

        Args:
            train: Segmento de entrenamiento preparado
            validation: Segmento de validación (posterior al de entrenamiento)
            config: Configuración base
            learner_kind: "td" o "nstep"
            seed: Semilla raíz (por defecto la de la configuración)
            max_workers: Hilos para las celdas (por defecto evaluation.max_workers)
        """
        if len(train) and len(validation) and validation.timestamps[0] <= train.timestamps[-1]:
            raise DataError("La validación debe ser posterior al entrenamiento")
        self.train = train
        self.validation = validation
        self.config = config
        self.learner_kind = learner_kind
        self.seed = config.seed if seed is None else seed
        self.max_workers = config.evaluation.max_workers if max_workers is None else max_workers
        self.training_set: TrainingSet = build_training_set(train, config, learner_kind)
        self.algo = "nstep" if learner_kind == "nstep" else "onlinetd"

    def pretrain(self, i: int, eta: float) -> Pretrained:
        try:
            return pretrain_learner(self.training_set, self.config, self.learner_kind, cell_seed(self.seed, i), eta)
        except NumericError as e:
            logger.warning(f"Preentrenamiento con η={eta:g} divergió: {e}")
            return None

    def run_cell(self, pretrained: Pretrained, alpha: float) -> float:
        """Recorrer la validación con copia de la red preentrenada y tamaño de paso α"""
        if pretrained is None:
            return float('inf')
        net, opt = pretrained
        try:
            log = deploy_learner(self.algo, net.copy(), opt.copy(), self.validation, self.config,
                                 self.learner_kind, alpha=alpha)
        except NumericError as e:
            logger.warning(f"Celda con α={alpha:g} divergió: {e}")
            return float('inf')
        error = validation_error(log, self.config.td.gamma, self.config.evaluation.tol)
        return error if np.isfinite(error) else float('inf')

    def training_score(self, pretrained: Pretrained) -> float:
        """NMSE medio de la red congelada sobre el propio segmento de entrenamiento"""
        if pretrained is None:
            return float('inf')
        net, opt = pretrained
        log = deploy_learner("frozen", net, opt, self.train, self.config, self.learner_kind)
        _, resumen = evaluate_log(log, self.config.td.gamma, self.config.evaluation.decay,
                                  self.config.evaluation.tol, self.config.evaluation.burn_in)
        return resumen.mean_nmse if np.isfinite(resumen.mean_nmse) else float('inf')

    def run(self, grid: SweepGrid, pretrained: Optional[List[Pretrained]] = None) -> SweepResult:
        """
        Ejecutar todas las celdas de la grilla

        Args:
            grid: Grilla η x α
            pretrained: Redes ya preentrenadas, una por η (opcional)

        Returns:
            Resultado con la matriz completa y el par ganador
        """
        logger.info(f"Barrido {self.learner_kind}: {len(grid.etas)} η x {len(grid.alphas)} α = {grid.size} celdas")
        if pretrained is None:
            pretrained = _mapear(lambda ie: self.pretrain(*ie), list(enumerate(grid.etas)), self.max_workers)
        celdas = list(grid.candidates())
        errores = _mapear(lambda ij: self.run_cell(pretrained[ij[0]], grid.alphas[ij[1]]), celdas, self.max_workers)

        matriz = np.array(errores, dtype=np.float64).reshape(len(grid.etas), len(grid.alphas))
        resultado = SweepResult(grid.etas, grid.alphas, matriz, self.learner_kind)
        logger.info(f"Par seleccionado: η={resultado.best_eta:g}, α={resultado.best_alpha:g} "
                    f"(error {resultado.best_error:.6g})")
        return resultado


def validation_sweep(train: Dataset, validation: Dataset, grid: SweepGrid, learner_kind: str,
                     cfg_base: Config, seed: Optional[int] = None,
                     max_workers: Optional[int] = None) -> SweepResult:
    """
    Barrido conjunto η x α tratando la validación como despliegue

    Args:
        train: Segmento de entrenamiento
        validation: Segmento de validación (posterior)
        grid: Grilla de tamaños de paso
        learner_kind: "td" o "nstep"
        cfg_base: Configuración base
        seed: Semilla raíz
        max_workers: Hilos para las celdas

    Returns:
        SweepResult con el par de menor error medio
    """
    return ValidationSweep(train, validation, cfg_base, learner_kind, seed, max_workers).run(grid)


def two_stage_sweep(train: Dataset, validation: Dataset, etas: Sequence[float], alphas: Sequence[float],
                    learner_kind: str, cfg_base: Config, seed: Optional[int] = None,
                    max_workers: Optional[int] = None) -> SweepResult:
    """
    Barrido en dos etapas: η por menor NMSE de entrenamiento de la red congelada,
    luego α sobre la validación con ese η fijo

    Returns:
        SweepResult de la segunda etapa (una fila) con ``eta_scores`` de la primera
    """
    barrido = ValidationSweep(train, validation, cfg_base, learner_kind, seed, max_workers)
    etas = SweepGrid(list(etas), list(alphas)).etas
    redes = _mapear(lambda ie: barrido.pretrain(*ie), list(enumerate(etas)), barrido.max_workers)
    puntajes = [barrido.training_score(p) for p in redes]
    elegido = int(np.argmin(puntajes))
    logger.info(f"Etapa 1: η={etas[elegido]:g} (NMSE de entrenamiento {puntajes[elegido]:.4g})")

    resultado = barrido.run(SweepGrid([etas[elegido]], list(alphas)), pretrained=[redes[elegido]])
    resultado.eta_scores = [float(p) for p in puntajes]
    return resultado

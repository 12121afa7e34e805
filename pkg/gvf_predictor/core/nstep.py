#!/usr/bin/env python3
"""
Aprendiz N-Step Directo
=======================
Regresión del cumulante exactamente n pasos adelante, c_{t+n}, desde ŝ_t.

Fuera de línea es un problema supervisado sobre pares (ŝ_t, c_{t+n}). En línea
el objetivo llega n pasos tarde: un anillo con los últimos n estados empareja
cada c_{t+1} que llega con el estado de n pasos atrás.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..config.settings import NetworkConfig, NStepConfig
from ..data.ingest import Dataset
from ..utils.errors import DataError
from .encoder import AugmentedState, StateEncoder
from .gvf import derive_seeds, minibatch_indices, prepare_network
from .logs import DeploymentLog
from .mlp import Network, OptimizerState, adam_step, batch_value_gradient, forward, value_and_gradient

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NStepPair:
    """(ŝ_t, c_{t+n})"""
    s_hat: AugmentedState
    target: float
    target_index: int

    def __post_init__(self):
        if self.target_index <= self.s_hat.step:
            raise DataError("El objetivo debe estar después del estado")


class NStepDataset:
    """Pares n-step en forma columnar"""

    def __init__(self, states: np.ndarray, targets: np.ndarray, indices: np.ndarray, n: int):
        self.states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        self.targets = np.asarray(targets, dtype=np.float64).reshape(-1)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.n = n
        if not len(self.states) == len(self.targets) == len(self.indices):
            raise DataError("Largo inconsistente entre estados, objetivos e índices")

    def __len__(self) -> int:
        return len(self.targets)

    def __getitem__(self, i: int) -> NStepPair:
        indice = int(self.indices[i])
        return NStepPair(AugmentedState(self.states[i], indice), float(self.targets[i]), indice + self.n)

    @property
    def width(self) -> int:
        return self.states.shape[1]

    def take(self, idx: np.ndarray) -> 'NStepDataset':
        return NStepDataset(self.states[idx], self.targets[idx], self.indices[idx], self.n)


def build_nstep_dataset(states: np.ndarray, cumulants: np.ndarray, n: int,
                        breaks: Optional[Sequence[int]] = None) -> NStepDataset:
    """
    Pares (ŝ_i, c_{i+n}) de una secuencia codificada

    Args:
        states: Matriz N x ancho
        cumulants: c_0..c_{N-1}
        n: Horizonte
        breaks: Índices de inicio de segmento; se descartan pares cuya
            ventana (i, i+n] cruza un hueco

    Returns:
        N - n pares (menos los descartados)
    """
    states = np.asarray(states, dtype=np.float64)
    cumulants = np.asarray(cumulants, dtype=np.float64)
    if n < 1:
        raise DataError(f"El horizonte debe ser >= 1: {n}")
    if len(states) != len(cumulants):
        raise DataError("Estados y cumulantes con largos distintos")
    if len(states) <= n:
        raise DataError(f"Secuencia de {len(states)} pasos demasiado corta para n={n}")

    conservar = np.ones(len(states) - n, dtype=bool)
    if breaks is not None:
        for b in breaks:
            # Un corte en b invalida los pares i con i < b <= i + n
            conservar[max(int(b) - n, 0):min(int(b), len(conservar))] = False
    indices = np.flatnonzero(conservar)
    return NStepDataset(states[indices], cumulants[indices + n], indices, n)


def nstep_batch_update(net: Network, opt: OptimizerState, batch: NStepDataset, lr: float) -> np.ndarray:
    """
    Paso de regresión por mini-lote: dirección (1/k) Σ_i (f(ŝ_i) - y_i) ∇f(ŝ_i)

    Returns:
        Residuos y_i - f(ŝ_i) antes del paso
    """
    k = len(batch)
    v, direction = batch_value_gradient(net, batch.states, lambda v: (v - batch.targets) / k)
    if lr > 0:
        adam_step(net, opt, direction, lr)
    return batch.targets - v


def offline_nstep(pairs: NStepDataset, cfg: NStepConfig, seed: int,
                  network: Optional[Network] = None, optimizer: Optional[OptimizerState] = None,
                  net_cfg: Optional[NetworkConfig] = None) -> Tuple[Network, OptimizerState]:
    """
    Regresión por mini-lotes con el mismo optimizador y decaimiento que TD

    Args:
        pairs: Pares de entrenamiento
        cfg: Hiperparámetros n-step
        seed: Semilla raíz
        network: Red de partida (por defecto una nueva)
        optimizer: Estado del optimizador de partida
        net_cfg: Arquitectura para la red nueva

    Returns:
        (red, estado del optimizador)
    """
    if len(pairs) == 0:
        raise DataError("Conjunto de pares n-step vacío")
    semilla_red, semilla_barajado, _ = derive_seeds(seed)
    net, opt = prepare_network(pairs.width, semilla_red, network, optimizer, net_cfg)
    rng = np.random.default_rng(semilla_barajado)

    logger.info(f"N-step fuera de línea: {len(pairs):,} pares (n={pairs.n}), {cfg.epochs} épocas, η={cfg.eta}")
    for epoca in range(cfg.epochs):
        cuadrados = 0.0
        for idx in minibatch_indices(len(pairs), cfg.batch_size, rng):
            residuos = nstep_batch_update(net, opt, pairs.take(idx), cfg.eta)
            cuadrados += float(np.sum(residuos ** 2))
        logger.debug(f"Época {epoca + 1}/{cfg.epochs}: ECM {cuadrados / len(pairs):.6g}")
    return net, opt


class PastStates:
    """Anillo de los últimos n estados con un cursor de escritura monótono"""

    def __init__(self, n: int, width: int):
        if n < 1:
            raise DataError(f"El horizonte debe ser >= 1: {n}")
        self.n = n
        self.buffer = np.zeros((n, width))
        self.cursor = 0

    def push(self, s_hat: np.ndarray) -> None:
        self.buffer[self.cursor % self.n] = s_hat
        self.cursor += 1

    @property
    def warm(self) -> bool:
        return self.cursor >= self.n

    def get(self, index: int) -> np.ndarray:
        """Estado escrito con el índice de flujo ``index`` (debe estar entre los últimos n)"""
        if not self.cursor - self.n <= index < self.cursor:
            raise DataError(f"El estado {index} ya no está en el anillo (cursor {self.cursor})")
        return self.buffer[index % self.n]


def online_nstep_stream(net: Network, opt: OptimizerState, stream: Dataset, cumulants: np.ndarray,
                        cfg: NStepConfig, encoder: StateEncoder, alpha: Optional[float] = None,
                        breaks: Optional[Sequence[int]] = None) -> DeploymentLog:
    """
    Recorrer un flujo con el aprendiz n-step en línea

    La fila t registra la predicción sobre ŝ_t (objetivo c_{t+n} aún pendiente);
    al llegar c_{t+1} se actualiza con el estado de índice t+1-n.

    Args:
        net: Red preentrenada (se actualiza en sitio)
        opt: Estado del optimizador continuado
        stream: Registros del despliegue
        cumulants: c_0..c_{N-1} del flujo
        cfg: Hiperparámetros n-step
        encoder: Codificador (se reinicia al comenzar)
        alpha: Tamaño de paso (por defecto cfg.alpha; 0 = congelado)
        breaks: Índices de inicio de segmento; no se empareja a través de un hueco

    Returns:
        Log n-step con ``target_step`` = t + n
    """
    alpha = cfg.alpha if alpha is None else alpha
    n = cfg.n
    cumulants = np.asarray(cumulants, dtype=np.float64)
    if len(cumulants) != len(stream):
        raise DataError("El flujo y sus cumulantes tienen largos distintos")
    cortes = sorted(int(b) for b in breaks) if breaks is not None else []

    log = DeploymentLog("nstep", horizon=n)
    encoder.reset()
    if len(stream) == 0:
        return log
    past = PastStates(n, encoder.width)
    state = encoder.encode(stream.record(0))
    for t in range(len(stream) - 1):
        past.push(state.s_hat)
        prediccion = forward(net, state)
        c = float(cumulants[t + 1])
        j = t + 1 - n
        residuo = float('nan')
        if j >= 0 and not any(j < b <= t + 1 for b in cortes):
            v_viejo, grad = value_and_gradient(net, past.get(j))
            residuo = c - v_viejo
            if alpha > 0:
                adam_step(net, opt, grad.scale(-residuo), alpha)
                log.record_update(t + 1, j)
        log.append(t, prediccion, c, residuo)

        state = encoder.encode(stream.record(t + 1))
        if (t + 1) % cfg.log_every == 0:
            logger.info(f"Despliegue n-step: paso {t + 1:,}/{len(stream) - 1:,}")
    return log


def online_nstep_deploy(train_pairs: NStepDataset, stream: Dataset, cumulants: np.ndarray,
                        cfg: NStepConfig, encoder: StateEncoder, seed: int,
                        net_cfg: Optional[NetworkConfig] = None,
                        pretrained: Optional[Tuple[Network, OptimizerState]] = None
                        ) -> Tuple[DeploymentLog, Network, OptimizerState]:
    """
    Preentrenar fuera de línea y continuar en línea con objetivos retrasados n pasos

    Returns:
        (log de despliegue, red final, optimizador final)
    """
    if pretrained is None:
        net, opt = offline_nstep(train_pairs, cfg, seed, net_cfg=net_cfg)
    else:
        net, opt = pretrained
    log = online_nstep_stream(net, opt, stream, cumulants, cfg, encoder)
    return log, net, opt

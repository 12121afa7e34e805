#!/usr/bin/env python3
"""
Aprendices GVF por Diferencias Temporales
=========================================
TD(0) semi-gradiente sobre la red f_w:

    δ_t = c_{t+1} + γ f_w(ŝ_{t+1}) - f_w(ŝ_t)
    dirección = -δ_t ∇f_w(ŝ_t)

Variantes: TD en línea puro, TD fuera de línea por mini-lotes sobre
transiciones barajadas, preentrenamiento fuera de línea seguido de ajuste en
línea (con estado del optimizador continuo), TD con repetición de experiencia
y despliegue congelado.
"""

import logging
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from ..config.settings import NetworkConfig, TDConfig
from ..data.ingest import Dataset, RawRecord
from ..utils.errors import ConfigError, DataError
from .encoder import AugmentedState, StateEncoder
from .logs import DeploymentLog
from .mlp import (
    Network,
    OptimizerState,
    adam_step,
    batch_value_gradient,
    build_network,
    forward,
    forward_batch,
    gradient_step,
    hyper_from_config,
    init_optimizer,
    value_and_gradient,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Transition:
    """(ŝ_t, c_{t+1}, ŝ_{t+1})"""
    s_hat: AugmentedState
    cumulant: float
    s_hat_next: AugmentedState

    def __post_init__(self):
        if self.s_hat.s_hat.shape != self.s_hat_next.s_hat.shape:
            raise DataError("Los estados de una transición deben tener el mismo ancho")


class TransitionBatch:
    """Conjunto de transiciones en forma columnar"""

    def __init__(self, states: np.ndarray, cumulants: np.ndarray, next_states: np.ndarray,
                 indices: Optional[np.ndarray] = None):
        self.states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        self.cumulants = np.asarray(cumulants, dtype=np.float64).reshape(-1)
        self.next_states = np.atleast_2d(np.asarray(next_states, dtype=np.float64))
        n = len(self.cumulants)
        self.indices = np.arange(n, dtype=np.int64) if indices is None else np.asarray(indices, dtype=np.int64)
        if self.states.shape != self.next_states.shape:
            raise DataError("Estados y estados siguientes con anchos distintos")
        if len(self.states) != n or len(self.indices) != n:
            raise DataError("Largo inconsistente entre estados, cumulantes e índices")

    @classmethod
    def from_transitions(cls, transitions: Sequence[Transition]) -> 'TransitionBatch':
        if not transitions:
            raise DataError("No hay transiciones")
        return cls(np.stack([t.s_hat.s_hat for t in transitions]),
                   np.array([t.cumulant for t in transitions]),
                   np.stack([t.s_hat_next.s_hat for t in transitions]),
                   np.array([t.s_hat.step for t in transitions]))

    def __len__(self) -> int:
        return len(self.cumulants)

    def __getitem__(self, i: int) -> Transition:
        indice = int(self.indices[i])
        return Transition(AugmentedState(self.states[i], indice), float(self.cumulants[i]),
                          AugmentedState(self.next_states[i], indice + 1))

    @property
    def width(self) -> int:
        return self.states.shape[1]

    def take(self, idx: np.ndarray) -> 'TransitionBatch':
        return TransitionBatch(self.states[idx], self.cumulants[idx], self.next_states[idx], self.indices[idx])

    def tail(self, m: int) -> 'TransitionBatch':
        """Las últimas m transiciones (todas si m >= len)"""
        inicio = max(len(self) - m, 0)
        return self.take(np.arange(inicio, len(self)))


def build_transitions(states: np.ndarray, cumulants: np.ndarray,
                      breaks: Optional[Sequence[int]] = None) -> TransitionBatch:
    """
    Transiciones (ŝ_t, c_{t+1}, ŝ_{t+1}) de una secuencia codificada

    Args:
        states: Matriz N x ancho de estados ŝ_0..ŝ_{N-1}
        cumulants: c_0..c_{N-1} (c_t leído con el registro t)
        breaks: Índices donde comienza un nuevo segmento; la transición que
            llega a ese índice se descarta

    Returns:
        Hasta N-1 transiciones con su índice t
    """
    states = np.asarray(states, dtype=np.float64)
    cumulants = np.asarray(cumulants, dtype=np.float64)
    if len(states) != len(cumulants):
        raise DataError("Estados y cumulantes con largos distintos")
    if len(states) < 2:
        raise DataError("Se necesitan al menos dos estados para formar una transición")

    conservar = np.ones(len(states) - 1, dtype=bool)
    if breaks is not None and len(breaks):
        cortes = np.asarray(breaks, dtype=np.int64)
        cortes = cortes[(cortes >= 1) & (cortes < len(states))]
        conservar[cortes - 1] = False
    indices = np.flatnonzero(conservar)
    if len(indices) < len(conservar):
        logger.info(f"Transiciones descartadas por huecos: {len(conservar) - len(indices)}")
    return TransitionBatch(states[indices], cumulants[indices + 1], states[indices + 1], indices)


def td_error(c: float, v_next: float, v_cur: float, gamma: float) -> float:
    """δ = c + γ v_next - v_cur"""
    return c + gamma * v_next - v_cur


def td_update(net: Network, opt: OptimizerState, s: np.ndarray, c: float, s_next: np.ndarray,
              gamma: float, lr: float, plain: bool = False) -> Tuple[float, float]:
    """
    Un paso TD sobre una sola transición (actualiza red y optimizador en sitio).

    Con ``plain=True`` el paso es w += lr·δ∇f y el estado del optimizador no cambia.

    Returns:
        (predicción f_w(ŝ_t) antes del paso, δ)
    """
    v, grad = value_and_gradient(net, s)
    delta = td_error(c, forward(net, s_next), v, gamma)
    if lr > 0:
        if plain:
            gradient_step(net, grad.scale(-delta), lr)
        else:
            adam_step(net, opt, grad.scale(-delta), lr)
    return v, delta


def td_batch_update(net: Network, opt: OptimizerState, batch: TransitionBatch,
                    gamma: float, lr: float, target_net: Optional[Network] = None) -> np.ndarray:
    """
    Paso TD por mini-lote: dirección -(1/k) Σ_i δ_i ∇f(ŝ_i)

    Args:
        target_net: Red para los valores de arranque γ f(ŝ_{i+1}) (por defecto ``net``)

    Returns:
        Errores TD del lote evaluados antes del paso
    """
    k = len(batch)
    v_next = forward_batch(net if target_net is None else target_net, batch.next_states)
    objetivo = batch.cumulants + gamma * v_next
    v, direction = batch_value_gradient(net, batch.states, lambda v: -(objetivo - v) / k)
    if lr > 0:
        adam_step(net, opt, direction, lr)
    return objetivo - v


def minibatch_indices(n: int, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    """Índices de una época barajada; el último lote puede ser más chico"""
    permutacion = rng.permutation(n)
    for inicio in range(0, n, batch_size):
        yield permutacion[inicio:inicio + batch_size]


def derive_seeds(seed: int) -> Tuple[int, int, int]:
    """Semillas independientes (inicialización, barajado, repetición) desde la raíz"""
    a, b, c = np.random.SeedSequence(seed).generate_state(3)
    return int(a), int(b), int(c)


def prepare_network(width: int, seed: int, network: Optional[Network], optimizer: Optional[OptimizerState],
                    net_cfg: Optional[NetworkConfig]) -> Tuple[Network, OptimizerState]:
    net_cfg = net_cfg or NetworkConfig()
    if network is None:
        return build_network(width, net_cfg, seed)
    if network.dims[0] != width:
        raise DataError(f"Red de entrada {network.dims[0]} para estados de ancho {width}")
    return network, optimizer if optimizer is not None else init_optimizer(network, hyper_from_config(net_cfg))


def offline_td(dataset: TransitionBatch, cfg: TDConfig, seed: int,
               network: Optional[Network] = None, optimizer: Optional[OptimizerState] = None,
               net_cfg: Optional[NetworkConfig] = None) -> Tuple[Network, OptimizerState]:
    """
    TD fuera de línea: épocas de mini-lotes sobre transiciones barajadas

    Args:
        dataset: Transiciones de entrenamiento
        cfg: Hiperparámetros TD (usa eta, batch_size, epochs, gamma)
        seed: Semilla raíz (inicialización y barajado)
        network: Red de partida (por defecto una nueva)
        optimizer: Estado del optimizador de partida
        net_cfg: Arquitectura y optimizador para una red nueva

    Returns:
        (red, estado del optimizador) para continuar en línea
    """
    if len(dataset) == 0:
        raise DataError("Conjunto de transiciones vacío")
    semilla_red, semilla_barajado, _ = derive_seeds(seed)
    net, opt = prepare_network(dataset.width, semilla_red, network, optimizer, net_cfg)
    rng = np.random.default_rng(semilla_barajado)

    logger.info(f"TD fuera de línea: {len(dataset):,} transiciones, {cfg.epochs} épocas, "
                f"lote {min(cfg.batch_size, len(dataset))}, η={cfg.eta}")
    for epoca in range(cfg.epochs):
        cuadrados = 0.0
        for idx in minibatch_indices(len(dataset), cfg.batch_size, rng):
            deltas = td_batch_update(net, opt, dataset.take(idx), cfg.gamma, cfg.eta)
            cuadrados += float(np.sum(deltas ** 2))
        logger.debug(f"Época {epoca + 1}/{cfg.epochs}: δ² medio {cuadrados / len(dataset):.6g}")
    return net, opt


class ReplayBuffer:
    """Búfer FIFO acotado de transiciones con muestreo uniforme sin reemplazo"""

    def __init__(self, capacity: int, width: int):
        if capacity < 1:
            raise ConfigError(f"Capacidad de repetición inválida: {capacity}")
        self.capacity = capacity
        self.states = np.zeros((capacity, width))
        self.cumulants = np.zeros(capacity)
        self.next_states = np.zeros((capacity, width))
        self.indices = np.zeros(capacity, dtype=np.int64)
        self.ptr = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, s: np.ndarray, c: float, s_next: np.ndarray, index: int) -> None:
        self.states[self.ptr] = s
        self.cumulants[self.ptr] = c
        self.next_states[self.ptr] = s_next
        self.indices[self.ptr] = index
        self.ptr = (self.ptr + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def extend(self, batch: TransitionBatch, index_offset: int = 0) -> None:
        for i in range(len(batch)):
            self.add(batch.states[i], batch.cumulants[i], batch.next_states[i],
                     int(batch.indices[i]) + index_offset)

    @property
    def max_index(self) -> Optional[int]:
        """Mayor índice de flujo almacenado (None si está vacío)"""
        return int(self.indices[:self.size].max()) if self.size else None

    def sample(self, k: int, rng: np.random.Generator) -> TransitionBatch:
        if self.size == 0:
            raise DataError("No se puede muestrear un búfer vacío")
        idx = rng.choice(self.size, size=min(k, self.size), replace=False)
        return TransitionBatch(self.states[idx], self.cumulants[idx], self.next_states[idx], self.indices[idx])


def online_td_step(net: Network, opt: OptimizerState, prev_state: AugmentedState, obs_next: RawRecord,
                   cumulant: float, cfg: TDConfig, encoder: StateEncoder, alpha: Optional[float] = None,
                   plain: bool = False) -> Tuple[Network, OptimizerState, AugmentedState, float, float]:
    """
    Un paso de TD en línea

    Args:
        net: Red (se actualiza en sitio)
        opt: Estado del optimizador
        prev_state: ŝ_t
        obs_next: o_{t+1}
        cumulant: c_{t+1}
        cfg: Hiperparámetros TD
        encoder: Codificador del flujo
        alpha: Tamaño de paso (por defecto cfg.alpha)
        plain: Paso de gradiente simple en lugar del optimizador

    Returns:
        (red, optimizador, ŝ_{t+1}, predicción sobre ŝ_t antes del paso, δ)
    """
    alpha = cfg.alpha if alpha is None else alpha
    state_next = encoder.encode(obs_next)
    if state_next.s_hat.shape != prev_state.s_hat.shape:
        raise DataError("Ancho de estado distinto entre pasos consecutivos")
    prediction, delta = td_update(net, opt, prev_state.s_hat, cumulant, state_next.s_hat, cfg.gamma, alpha,
                                  plain=plain)
    return net, opt, state_next, prediction, delta


def online_td_deploy(net: Network, opt: OptimizerState, stream: Dataset, cumulants: np.ndarray,
                     cfg: TDConfig, encoder: StateEncoder, alpha: Optional[float] = None,
                     replay: Optional[ReplayBuffer] = None, rng: Optional[np.random.Generator] = None,
                     breaks: Optional[Sequence[int]] = None) -> DeploymentLog:
    """
    Recorrer un flujo de despliegue con TD en línea (opcionalmente con repetición)

    Args:
        net: Red preentrenada (se actualiza en sitio)
        opt: Estado del optimizador continuado
        stream: Registros del despliegue
        cumulants: c_0..c_{N-1} del flujo
        cfg: Hiperparámetros TD
        encoder: Codificador (se reinicia al comenzar)
        alpha: Tamaño de paso en línea (por defecto cfg.alpha; 0 = congelado)
        replay: Búfer de repetición; si se da, cada paso agrega la transición y
            aplica ``cfg.replay_steps`` actualizaciones por mini-lote
        rng: Generador para el muestreo del búfer
        breaks: Índices de inicio de segmento; no se actualiza a través de un hueco

    Con ``cfg.replay_steps > 0`` el paso en línea es un paso de gradiente
    simple y el optimizador avanza solo con los mini-lotes, que arrancan de
    los valores de la red anterior al paso: una actualización del optimizador
    por transición, igual que TD en línea.

    Returns:
        Log con una fila por transición del flujo
    """
    alpha = cfg.alpha if alpha is None else alpha
    cumulants = np.asarray(cumulants, dtype=np.float64)
    if len(cumulants) != len(stream):
        raise DataError("El flujo y sus cumulantes tienen largos distintos")
    if replay is not None and rng is None:
        raise ConfigError("La repetición necesita un generador aleatorio")
    cortes = set(int(b) for b in breaks) if breaks is not None else set()
    repite = replay is not None and cfg.replay_steps > 0

    log = DeploymentLog("td")
    encoder.reset()
    if len(stream) == 0:
        return log
    state = encoder.encode(stream.record(0))
    for t in range(len(stream) - 1):
        c = float(cumulants[t + 1])
        corte = (t + 1) in cortes
        paso = 0.0 if corte else alpha
        objetivo = net.copy() if repite and paso > 0 else None
        net, opt, siguiente, prediccion, delta = online_td_step(
            net, opt, state, stream.record(t + 1), c, cfg, encoder, alpha=paso, plain=repite)
        log.append(t, prediccion, c, float('nan') if corte else delta)
        if paso > 0:
            log.record_update(t + 1, t)

        if replay is not None and not corte:
            replay.add(state.s_hat, c, siguiente.s_hat, t)
            for _ in range(cfg.replay_steps):
                td_batch_update(net, opt, replay.sample(cfg.batch_size, rng), cfg.gamma, alpha,
                                target_net=objetivo)

        state = siguiente
        if (t + 1) % cfg.log_every == 0:
            logger.info(f"Despliegue TD: paso {t + 1:,}/{len(stream) - 1:,}, δ={delta:.4g}")
    return log


def online_td_with_pretrain(train: TransitionBatch, stream: Dataset, cumulants: np.ndarray,
                            cfg: TDConfig, encoder: StateEncoder, seed: int,
                            net_cfg: Optional[NetworkConfig] = None,
                            pretrained: Optional[Tuple[Network, OptimizerState]] = None,
                            breaks: Optional[Sequence[int]] = None
                            ) -> Tuple[DeploymentLog, Network, OptimizerState]:
    """
    Preentrenar con TD fuera de línea y continuar en línea con α

    Args:
        train: Transiciones de entrenamiento
        stream: Flujo de despliegue
        cumulants: Cumulantes del flujo
        cfg: Hiperparámetros TD
        encoder: Codificador del flujo
        seed: Semilla raíz
        net_cfg: Arquitectura para la red nueva
        pretrained: (red, optimizador) ya entrenados; omite el preentrenamiento
        breaks: Índices de inicio de segmento del flujo

    Returns:
        (log de despliegue, red final, optimizador final)
    """
    if pretrained is None:
        net, opt = offline_td(train, cfg, seed, net_cfg=net_cfg)
    else:
        net, opt = pretrained
    log = online_td_deploy(net, opt, stream, cumulants, cfg, encoder, breaks=breaks)
    return log, net, opt


def td_with_replay(train: TransitionBatch, stream: Dataset, cumulants: np.ndarray,
                   cfg: TDConfig, encoder: StateEncoder, seed: int,
                   net_cfg: Optional[NetworkConfig] = None,
                   pretrained: Optional[Tuple[Network, OptimizerState]] = None,
                   breaks: Optional[Sequence[int]] = None
                   ) -> Tuple[DeploymentLog, Network, OptimizerState]:
    """
    TD en línea con repetición de experiencia tras preentrenamiento.

    El búfer se siembra con las últimas k·n_replay transiciones de entrenamiento
    (con índices negativos, anteriores al despliegue).
    """
    if cfg.replay_capacity < cfg.batch_size:
        raise ConfigError(f"td.replay_capacity ({cfg.replay_capacity}) debe ser >= td.batch_size ({cfg.batch_size})")
    if pretrained is None:
        net, opt = offline_td(train, cfg, seed, net_cfg=net_cfg)
    else:
        net, opt = pretrained

    buffer = ReplayBuffer(cfg.replay_capacity, train.width)
    semilla = cfg.batch_size * cfg.replay_steps
    if semilla > 0 and len(train):
        inicial = train.tail(min(semilla, cfg.replay_capacity))
        buffer.extend(inicial, index_offset=-(int(train.indices.max()) + 1))
    logger.info(f"Búfer de repetición sembrado con {len(buffer):,} transiciones")

    rng = np.random.default_rng(derive_seeds(seed)[2])
    log = online_td_deploy(net, opt, stream, cumulants, cfg, encoder, replay=buffer, rng=rng, breaks=breaks)
    return log, net, opt


def frozen_deploy(net: Network, stream: Dataset, cumulants: np.ndarray, cfg: TDConfig,
                  encoder: StateEncoder, breaks: Optional[Sequence[int]] = None) -> DeploymentLog:
    """Despliegue sin actualizaciones (mismo camino que α = 0; la red no se modifica)"""
    return online_td_deploy(net.copy(), init_optimizer(net), stream, cumulants, cfg, encoder,
                            alpha=0.0, breaks=breaks)

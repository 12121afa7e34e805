#!/usr/bin/env python3
"""
Tubería de Aprendices
=====================
Une codificador, cumulante y aprendices: construcción del conjunto de
entrenamiento, preentrenamiento y despliegue por nombre de algoritmo.
"""

import logging
from dataclasses import replace
from typing import Optional, Tuple, Union

import numpy as np

from ..config.settings import Config
from ..data.ingest import Dataset, find_gaps
from ..utils.errors import CheckpointError, ConfigError
from .encoder import StateEncoder, cumulant_series
from .gvf import (
    TransitionBatch,
    build_transitions,
    frozen_deploy,
    offline_td,
    online_td_deploy,
    td_with_replay,
)
from .logs import DeploymentLog
from .mlp import Network, OptimizerState
from .nstep import NStepDataset, build_nstep_dataset, offline_nstep, online_nstep_stream

logger = logging.getLogger(__name__)

LEARNER_KINDS = ("td", "nstep")
ALGORITHMS = ("onlinetd", "tdreplay", "nstep", "frozen")

TrainingSet = Union[TransitionBatch, NStepDataset]


def _verificar_tipo(learner_kind: str) -> None:
    if learner_kind not in LEARNER_KINDS:
        raise ConfigError(f"Tipo de aprendiz desconocido: {learner_kind} (use {', '.join(LEARNER_KINDS)})")


def stream_breaks(d: Dataset, config: Config) -> Optional[np.ndarray]:
    """Inicios de segmento por huecos mayores a ``data.max_gap``"""
    if config.data.max_gap is None:
        return None
    return find_gaps(d.timestamps, config.data.max_gap)


def stream_cumulants(d: Dataset, config: Config) -> np.ndarray:
    return cumulant_series(d, config.cumulant.sensor, config.cumulant.normalize)


def build_training_set(d: Dataset, config: Config, learner_kind: str) -> TrainingSet:
    """
    Codificar el segmento de entrenamiento y formar transiciones o pares n-step

    Args:
        d: Segmento de entrenamiento preparado
        config: Configuración de la corrida
        learner_kind: "td" o "nstep"

    Returns:
        TransitionBatch o NStepDataset
    """
    _verificar_tipo(learner_kind)
    encoder = StateEncoder(config.encoder, d.meta)
    states = encoder.encode_dataset(d)
    cumulants = stream_cumulants(d, config)
    breaks = stream_breaks(d, config)
    if learner_kind == "td":
        return build_transitions(states, cumulants, breaks)
    return build_nstep_dataset(states, cumulants, config.nstep.n, breaks)


def pretrain_learner(training_set: TrainingSet, config: Config, learner_kind: str, seed: int,
                     eta: Optional[float] = None) -> Tuple[Network, OptimizerState]:
    """Entrenamiento fuera de línea (η de la configuración salvo que se indique otro)"""
    _verificar_tipo(learner_kind)
    if learner_kind == "td":
        cfg = config.td if eta is None else replace(config.td, eta=eta)
        return offline_td(training_set, cfg, seed, net_cfg=config.network)
    cfg = config.nstep if eta is None else replace(config.nstep, eta=eta)
    return offline_nstep(training_set, cfg, seed, net_cfg=config.network)


def deploy_learner(algo: str, net: Network, opt: OptimizerState, stream: Dataset, config: Config,
                   learner_kind: str, alpha: Optional[float] = None,
                   training_set: Optional[TrainingSet] = None, seed: int = 0) -> DeploymentLog:
    """
    Desplegar una red preentrenada con el algoritmo indicado

    Args:
        algo: onlinetd | tdreplay | nstep | frozen
        net: Red preentrenada (se actualiza en sitio salvo en ``frozen``)
        opt: Estado del optimizador continuado
        stream: Segmento de despliegue preparado
        config: Configuración de la corrida
        learner_kind: Tipo de aprendiz con el que se preentrenó la red
        alpha: Tamaño de paso en línea (por defecto el de la configuración)
        training_set: Transiciones de entrenamiento (necesarias para sembrar la repetición)
        seed: Semilla raíz (muestreo de la repetición)

    Returns:
        Log de despliegue
    """
    if algo not in ALGORITHMS:
        raise ConfigError(f"Algoritmo desconocido: {algo} (use {', '.join(ALGORITHMS)})")
    _verificar_tipo(learner_kind)
    esperado = "nstep" if algo == "nstep" else "td"
    if algo != "frozen" and learner_kind != esperado:
        raise CheckpointError(f"El algoritmo {algo} necesita una red preentrenada como '{esperado}', "
                              f"no como '{learner_kind}'")

    encoder = StateEncoder(config.encoder, stream.meta)
    cumulants = stream_cumulants(stream, config)
    breaks = stream_breaks(stream, config)
    logger.info(f"Despliegue {algo} sobre {len(stream):,} registros")

    if algo == "frozen":
        if learner_kind == "nstep":
            return online_nstep_stream(net.copy(), opt.copy(), stream, cumulants, config.nstep, encoder,
                                       alpha=0.0, breaks=breaks)
        return frozen_deploy(net, stream, cumulants, config.td, encoder, breaks=breaks)
    if algo == "nstep":
        return online_nstep_stream(net, opt, stream, cumulants, config.nstep, encoder, alpha=alpha, breaks=breaks)
    if algo == "onlinetd":
        return online_td_deploy(net, opt, stream, cumulants, config.td, encoder, alpha=alpha, breaks=breaks)

    if not isinstance(training_set, TransitionBatch):
        raise ConfigError("tdreplay necesita las transiciones de entrenamiento")
    cfg = config.td if alpha is None else replace(config.td, alpha=alpha)
    log, _, _ = td_with_replay(training_set, stream, cumulants, cfg, encoder, seed,
                               pretrained=(net, opt), breaks=breaks)
    return log

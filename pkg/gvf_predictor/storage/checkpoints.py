#!/usr/bin/env python3
"""
Gestor de Checkpoints y Manifiestos
===================================
Persistencia bit a bit de (Network, OptimizerState) en un contenedor ``.npz``
versionado, con un manifiesto JSON legible al lado, y manifiestos de corrida
para reproducibilidad.
"""

import logging
import os
import platform
import zipfile
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .. import __version__
from ..core.mlp import Network, OptimizerHyper, OptimizerState
from ..utils.errors import CheckpointError
from ..utils.helpers import guardar_json, obtener_hash_archivo

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def _ruta_manifiesto(path: str) -> str:
    return f"{path}.json"


def save_checkpoint(net: Network, opt: OptimizerState, path: str,
                    kind: str = "td", layout_hash: str = "",
                    extra: Optional[Dict[str, Any]] = None) -> str:
    """
    Guardar red y estado del optimizador

    Args:
        net: Red entrenada
        opt: Estado del optimizador (momentos y contador)
        path: Ruta exacta del contenedor
        kind: Tipo de aprendiz ("td" o "nstep")
        layout_hash: Hash del layout del codificador
        extra: Metadatos adicionales para el manifiesto

    Returns:
        Ruta del checkpoint guardado
    """
    arreglos: Dict[str, np.ndarray] = {
        'format_version': np.array(FORMAT_VERSION),
        'dims': np.array(net.dims, dtype=np.int64),
        'kind': np.array(kind),
        'layout_hash': np.array(layout_hash),
        'step_count': np.array(opt.step_count, dtype=np.int64),
        'hyper_kind': np.array(opt.hyper.kind),
        'hyper_values': np.array([opt.hyper.beta1, opt.hyper.beta2,
                                  opt.hyper.epsilon, opt.hyper.weight_decay]),
    }
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        arreglos[f'W{i}'] = w
        arreglos[f'b{i}'] = b
    for i, (m, v) in enumerate(zip(opt.first_moment, opt.second_moment)):
        arreglos[f'm{i}'] = m
        arreglos[f'v{i}'] = v

    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    # Escribir por handle para conservar la ruta exacta (np.savez agrega .npz a nombres)
    with open(path, 'wb') as f:
        np.savez(f, **arreglos)

    guardar_json({
        'format_version': FORMAT_VERSION,
        'kind': kind,
        'dims': net.dims,
        'parameter_count': net.parameter_count,
        'precision': str(net.dtype),
        'step_count': opt.step_count,
        'optimizer': asdict(opt.hyper),
        'layout_hash': layout_hash,
        'sha256': obtener_hash_archivo(path),
        'fecha_creacion': datetime.now().isoformat(),
        **(extra or {}),
    }, _ruta_manifiesto(path))

    logger.info(f"Checkpoint guardado en: {path} ({net.parameter_count:,} parámetros, "
                f"{opt.step_count} pasos del optimizador)")
    return path


def _abrir(path: str) -> Dict[str, np.ndarray]:
    if not os.path.exists(path):
        raise CheckpointError(f"Checkpoint no encontrado: {path}")
    try:
        with np.load(path, allow_pickle=False) as contenedor:
            return {nombre: contenedor[nombre] for nombre in contenedor.files}
    except (zipfile.BadZipFile, ValueError, EOFError, OSError, KeyError) as e:
        raise CheckpointError(f"Checkpoint truncado o corrupto: {path} ({e})") from e


def checkpoint_metadata(path: str) -> Dict[str, Any]:
    """Metadatos embebidos en el contenedor (versión, dims, tipo, layout)"""
    datos = _abrir(path)
    try:
        return {
            'format_version': int(datos['format_version']),
            'dims': [int(d) for d in datos['dims']],
            'kind': str(datos['kind']),
            'layout_hash': str(datos['layout_hash']),
            'step_count': int(datos['step_count']),
        }
    except KeyError as e:
        raise CheckpointError(f"Checkpoint incompleto, falta {e}") from e


def load_checkpoint(path: str, expected_dims: Optional[Sequence[int]] = None,
                    expected_layout_hash: Optional[str] = None) -> Tuple[Network, OptimizerState]:
    """
    Cargar red y estado del optimizador exactamente como se guardaron

    Args:
        path: Ruta del contenedor
        expected_dims: Dimensiones esperadas de la red (opcional)
        expected_layout_hash: Hash de layout esperado (opcional)

    Returns:
        (Network, OptimizerState)
    """
    datos = _abrir(path)
    try:
        version = int(datos['format_version'])
        if version != FORMAT_VERSION:
            raise CheckpointError(f"Versión de checkpoint {version} no soportada (se espera {FORMAT_VERSION})")

        dims = [int(d) for d in datos['dims']]
        if expected_dims is not None and list(expected_dims) != dims:
            raise CheckpointError(f"Dimensiones del checkpoint {dims} distintas de las esperadas {list(expected_dims)}")
        layout = str(datos['layout_hash'])
        if expected_layout_hash is not None and layout != expected_layout_hash:
            raise CheckpointError("El layout del codificador no coincide con el del checkpoint")

        capas = len(dims) - 1
        weights = [datos[f'W{i}'] for i in range(capas)]
        biases = [datos[f'b{i}'] for i in range(capas)]
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != (dims[i + 1], dims[i]) or b.shape != (dims[i + 1],):
                raise CheckpointError(f"Forma inconsistente en la capa {i}")
        first = [datos[f'm{i}'] for i in range(2 * capas)]
        second = [datos[f'v{i}'] for i in range(2 * capas)]

        beta1, beta2, epsilon, weight_decay = (float(x) for x in datos['hyper_values'])
        hyper = OptimizerHyper(str(datos['hyper_kind']), beta1, beta2, epsilon, weight_decay)
        net = Network(weights, biases)
        opt = OptimizerState(first, second, int(datos['step_count']), hyper)
    except KeyError as e:
        raise CheckpointError(f"Checkpoint incompleto, falta {e}") from e

    for p, m, v in zip(net.parameters(), opt.first_moment, opt.second_moment):
        if m.shape != p.shape or v.shape != p.shape:
            raise CheckpointError("Momentos del optimizador con formas inconsistentes")

    logger.info(f"Checkpoint cargado de: {path} (dims={dims}, pasos={opt.step_count})")
    return net, opt


@dataclass
class RunManifest:
    """Manifiesto de corrida: suficiente para reproducirla"""
    command: str
    config: Dict[str, Any]
    seeds: Dict[str, int]
    dataset_hashes: Dict[str, str] = field(default_factory=dict)
    encoder_layout: Optional[Dict[str, Any]] = None
    artifacts: Dict[str, str] = field(default_factory=dict)
    versions: Dict[str, str] = field(default_factory=dict)
    fecha: str = ""

    def __post_init__(self):
        if not self.versions:
            self.versions = {
                'gvf_predictor': __version__,
                'python': platform.python_version(),
                'numpy': np.__version__,
                'pandas': pd.__version__,
            }
        if not self.fecha:
            self.fecha = datetime.now().isoformat()

    def add_dataset(self, name: str, path: str) -> None:
        self.dataset_hashes[name] = obtener_hash_archivo(path)

    def save(self, path: str) -> str:
        guardar_json(asdict(self), path)
        logger.info(f"Manifiesto guardado en: {path}")
        return path

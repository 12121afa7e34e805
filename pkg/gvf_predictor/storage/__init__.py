# Módulo de persistencia del GVF Predictor
from .checkpoints import (
    FORMAT_VERSION,
    RunManifest,
    checkpoint_metadata,
    load_checkpoint,
    save_checkpoint,
)

__all__ = [
    'FORMAT_VERSION',
    'RunManifest',
    'checkpoint_metadata',
    'load_checkpoint',
    'save_checkpoint',
]

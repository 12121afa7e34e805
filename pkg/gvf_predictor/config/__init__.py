# Módulo config del GVF Predictor
from .settings import (
    Config,
    DataConfig,
    SplitConfig,
    CumulantConfig,
    EncoderConfig,
    NetworkConfig,
    TDConfig,
    NStepConfig,
    EvaluationConfig,
    SimulatorConfig,
    PathsConfig,
    LoggingConfig,
    CONFIG_SCHEMA,
)

__all__ = [
    'Config',
    'DataConfig',
    'SplitConfig',
    'CumulantConfig',
    'EncoderConfig',
    'NetworkConfig',
    'TDConfig',
    'NStepConfig',
    'EvaluationConfig',
    'SimulatorConfig',
    'PathsConfig',
    'LoggingConfig',
    'CONFIG_SCHEMA',
]

# Módulo de ingesta de telemetría
from .ingest import (
    RawRecord,
    SensorMeta,
    SplitSpec,
    Dataset,
    compute_sensor_meta,
    load_records,
    save_records,
    remove_constant_sensors,
    impute_missing,
    impute_dataset,
    subsample,
    split_dataset,
    split_from_tail,
    split_from_fractions,
    with_reference_meta,
    find_gaps,
    prepare_dataset,
)

__all__ = [
    'RawRecord',
    'SensorMeta',
    'SplitSpec',
    'Dataset',
    'compute_sensor_meta',
    'load_records',
    'save_records',
    'remove_constant_sensors',
    'impute_missing',
    'impute_dataset',
    'subsample',
    'split_dataset',
    'split_from_tail',
    'split_from_fractions',
    'with_reference_meta',
    'find_gaps',
    'prepare_dataset',
]

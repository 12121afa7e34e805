# Simulador de planta con modos, deriva y cambios de distribución
from .plant import (
    DailyMode,
    DriftSpec,
    EventSpec,
    ModeSchedule,
    PlantScenario,
    SCENARIO_SCHEMA,
    SensorSpec,
    ShiftSpec,
    generate,
    inject_shift,
    mode_sequence,
    packaged_scenario,
    scenario_from_dict,
    scenario_to_dict,
    shift_from_dict,
)

__all__ = [
    'DailyMode',
    'DriftSpec',
    'EventSpec',
    'ModeSchedule',
    'PlantScenario',
    'SCENARIO_SCHEMA',
    'SensorSpec',
    'ShiftSpec',
    'generate',
    'inject_shift',
    'mode_sequence',
    'packaged_scenario',
    'scenario_from_dict',
    'scenario_to_dict',
    'shift_from_dict',
]

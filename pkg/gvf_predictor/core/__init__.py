# Núcleo del GVF Predictor: codificador, red, aprendices y métricas
from .encoder import (
    AugmentedState,
    ModeClock,
    StateEncoder,
    TraceState,
    build_state,
    cumulant_series,
    encode_mode_thermometer,
    encode_one_hot,
    encode_time_of_day,
    normalize,
    update_trace,
)
from .evaluation import (
    EvalSummary,
    MetricState,
    TruncatedReturn,
    compute_returns,
    evaluate_log,
    ew_welford_series,
    ew_welford_update,
    nmse_stream,
    nstep_targets,
    return_horizon,
    truncated_return,
)
from .gvf import (
    ReplayBuffer,
    Transition,
    TransitionBatch,
    build_transitions,
    frozen_deploy,
    offline_td,
    online_td_deploy,
    online_td_step,
    online_td_with_pretrain,
    td_batch_update,
    td_error,
    td_update,
    td_with_replay,
)
from .logs import DeploymentLog
from .mlp import (
    Gradient,
    Network,
    OptimizerHyper,
    OptimizerState,
    adam_step,
    backward_grad,
    build_network,
    forward,
    forward_batch,
    init_network,
    init_optimizer,
    weighted_gradient,
)
from .nstep import (
    NStepDataset,
    NStepPair,
    PastStates,
    build_nstep_dataset,
    nstep_batch_update,
    offline_nstep,
    online_nstep_deploy,
    online_nstep_stream,
)
from .pipeline import ALGORITHMS, LEARNER_KINDS, build_training_set, deploy_learner, pretrain_learner
from .sweep import SweepGrid, SweepResult, geometric_grid, two_stage_sweep, validation_sweep

__all__ = [
    'AugmentedState', 'ModeClock', 'StateEncoder', 'TraceState', 'build_state', 'cumulant_series',
    'encode_mode_thermometer', 'encode_one_hot', 'encode_time_of_day', 'normalize', 'update_trace',
    'EvalSummary', 'MetricState', 'TruncatedReturn', 'compute_returns', 'evaluate_log',
    'ew_welford_series', 'ew_welford_update', 'nmse_stream', 'nstep_targets', 'return_horizon',
    'truncated_return',
    'ReplayBuffer', 'Transition', 'TransitionBatch', 'build_transitions', 'frozen_deploy', 'offline_td',
    'online_td_deploy', 'online_td_step', 'online_td_with_pretrain', 'td_batch_update', 'td_error',
    'td_update', 'td_with_replay',
    'DeploymentLog',
    'Gradient', 'Network', 'OptimizerHyper', 'OptimizerState', 'adam_step', 'backward_grad',
    'build_network', 'forward', 'forward_batch', 'init_network', 'init_optimizer', 'weighted_gradient',
    'NStepDataset', 'NStepPair', 'PastStates', 'build_nstep_dataset', 'nstep_batch_update',
    'offline_nstep', 'online_nstep_deploy', 'online_nstep_stream',
    'ALGORITHMS', 'LEARNER_KINDS', 'build_training_set', 'deploy_learner', 'pretrain_learner',
    'SweepGrid', 'SweepResult', 'geometric_grid', 'two_stage_sweep', 'validation_sweep',
]

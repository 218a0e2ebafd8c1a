"""Two-player bid winner prediction and single-resource allocation."""

from .allocator import (
    AccuracyReport,
    AllocationDecision,
    UtilizationReport,
    accuracy,
    advance_window,
    resolve_bid,
    run_closed_loop,
    utilization,
)
from .classifier import (
    Theta,
    TrainConfig,
    TrainingSet,
    TrainReport,
    cost,
    gradient,
    hypothesis,
    predict,
    sigmoid,
    train,
)
from .errors import ConfigError, ContractError, NumericError
from .game_sim import (
    IID,
    GeneratorSpec,
    LogisticTruth,
    MarkovPersistence,
    SplitSpec,
    bayes_predict,
    featurize,
    generate,
    split,
)
from .metrics import (
    DelayStats,
    MarkovBound,
    empirical_tail,
    markov_bound,
    time_predictions,
    verify_bound,
)

__version__ = "0.1.0"

"""Sensor deployment decisions ranked by expected value of sample information."""

from .classifier import (
    CrossValidationResult,
    EvaluationResult,
    LogisticTrainer,
    Model,
    Trainer,
    TrainingConfig,
    cross_validate,
    evaluate,
    train,
)
from .data import (
    ChannelStats,
    SimDataset,
    SimRecord,
    SplitResult,
    SplitSpec,
    SynthConfig,
    ingest_channel_stats,
    limit_simulations,
    load_csv,
    parse_channel_stats,
    save_csv,
    simulation_split,
    synth_generate,
)
from .decision import (
    Action,
    BinarySensorChannel,
    CostBreakdown,
    CostConvention,
    CostModel,
    EvsiReport,
    PosteriorReport,
    Priors,
    SweepEntry,
    SweepTable,
    baseline_cost_no_signal,
    combine_or,
    evsi,
    expected_cost_with_sensor,
    no_signal_probability,
    posteriors,
    rank_by_evsi,
    sensitivity_sweep,
    signal_probability,
)
from .errors import EvsiKitError
from .metrics import (
    ConfusionCounts,
    ConfusionMatrix,
    MetricsReport,
    PerClassMetrics,
    binary_metrics,
    channel_from_counts,
    collapse_to_binary,
    confusion_matrix,
    empirical_priors,
    weighted_metrics,
)
from .selection import (
    ImportanceEntry,
    ImportanceRanking,
    SelectionMode,
    SelectionRound,
    SelectionTrace,
    StopReason,
    forward_stepwise,
    greedy_evsi_selection,
    mask_importance,
)
from .session import (
    DeploymentSession,
    FullBackendResources,
    SessionBackend,
    SessionManager,
    SessionStatus,
    SignalEvent,
    create_full_session,
    create_stats_session,
    load_session,
    save_session,
)

__version__ = "0.1.0"

"""poolbench: a reproducible pool-based active-learning benchmark harness.

The engine runs seeded deep-active-learning cycles (budgets, query sizes,
pool subsets, warm/cold model starts) with five query strategies over
externally supplied instance embeddings, and reports learning curves,
normalized AUC, final (balanced) accuracy and equal-weight benchmark
aggregates.
"""

from ._version import ENGINE_VERSION as __version__
from .classifier import (
    HeadParams,
    TrainConfig,
    TRAIN_PRESETS,
    grad_embedding,
    init_params,
    load_params,
    mean_cross_entropy,
    predict_proba,
    save_params,
    train,
)
from .featureio import (
    DatasetBundle,
    ManifestEntry,
    load_bundle,
    read_features,
    read_labels,
    read_manifest,
    save_bundle,
    synth_blobs,
    write_features,
    write_labels,
    write_manifest,
)
from .metrics import (
    BenchmarkRow,
    BenchmarkTable,
    LearningCurve,
    RunSummary,
    accuracy,
    aggregate,
    balanced_accuracy,
    fac,
    format_table,
    normalized_auc,
)
from .pools import (
    AnnotatedBatch,
    PoolState,
    QueryBatch,
    annotate,
    draw_subset,
    init_pools,
    update_pools,
)
from .rng import substream
from .runner import (
    DalConfig,
    RunRecord,
    canonical_bytes,
    n_cycles,
    read_record,
    run_experiment,
    run_suite,
    summarize_record,
    write_record,
)
from .strategies import (
    StrategyInput,
    StrategyKind,
    entropy_scores,
    kmeanspp_select,
    query_badge,
    query_cal,
    query_coreset,
    query_entropy,
    query_random,
    select_batch,
)

__all__ = [name for name in dir() if not name.startswith("_")]

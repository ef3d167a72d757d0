"""Experiment orchestration: configs, single runs, suites, run records.

One experiment executes the full pool-based loop for a (config, dataset,
seed) triple: initialize the labeled pool, train, evaluate, then per cycle
draw the candidate subset, let the strategy pick a batch, annotate, grow
the pool, retrain (cold or warm) and evaluate again.  Every random draw
comes from a substream keyed by (seed, cycle, purpose), so runs are
reproducible bit-for-bit and independent of each other.

A RunRecord is the persisted artifact: a header line plus one line per
cycle with the queried train indices, pool size, test score, train loss
and wall-clock timings.  Everything except the timings is deterministic;
``canonical_bytes`` serializes exactly that reproducible payload.
"""

from __future__ import annotations

import hashlib
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ._version import ENGINE_VERSION
from .classifier import TRAIN_PRESETS, TrainConfig, mean_cross_entropy, predict_proba, train
from .classifier import grad_embedding as _grad_embedding
from .errors import (
    ExperimentFailure,
    InvalidConfigError,
    RecordParseError,
)
from .featureio import DatasetBundle
from .metrics import (
    LearningCurve,
    RunSummary,
    accuracy,
    aggregate,
    balanced_accuracy,
    fac,
    format_table,
    normalized_auc,
)
from .pools import annotate, draw_subset, init_pools, update_pools
from .rng import substream
from .strategies import StrategyInput, StrategyKind, select_batch

logger = logging.getLogger(__name__)

RECORD_VERSION = 1
DEFAULT_SEEDS = (0, 1, 2, 3, 4)


@dataclass(frozen=True)
class DalConfig:
    """One experimental condition (everything but dataset and seed)."""

    strategy: StrategyKind
    train: TrainConfig = field(default_factory=TrainConfig)
    init_size: int = 100
    query_size: int = 100
    budget: int = 500
    subset_size: int | None = 10_000
    model_start: str = "cold"
    seeds: tuple = DEFAULT_SEEDS

    def __post_init__(self):
        if self.init_size < 0:
            raise InvalidConfigError("init_size must be >= 0")
        if self.query_size < 1:
            raise InvalidConfigError("query_size must be >= 1")
        if self.budget <= self.init_size:
            raise InvalidConfigError(
                f"budget {self.budget} must exceed init_size {self.init_size}"
            )
        if (self.budget - self.init_size) % self.query_size != 0:
            raise InvalidConfigError(
                f"budget - init_size = {self.budget - self.init_size} "
                f"is not divisible by query_size {self.query_size}"
            )
        if self.subset_size is not None and self.subset_size < 1:
            raise InvalidConfigError("subset_size must be >= 1 or absent")
        if self.model_start not in ("cold", "warm"):
            raise InvalidConfigError(
                f"model_start must be 'cold' or 'warm', got {self.model_start!r}"
            )
        if self.strategy.needs_labeled_pool and self.init_size < 1:
            raise InvalidConfigError(
                f"strategy {self.strategy.name!r} requires init_size >= 1"
            )
        if not self.seeds:
            raise InvalidConfigError("seeds must be non-empty")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @property
    def config_id(self) -> str:
        """Stable short hash of the condition, excluding strategy and seeds."""
        t = self.train
        canon = (
            f"init={self.init_size},query={self.query_size},budget={self.budget},"
            f"subset={self.subset_size},start={self.model_start},"
            f"cal_k={self.strategy.cal_neighbors},"
            f"epochs={t.epochs},lr={t.learning_rate!r},warmup={t.warmup_fraction!r},"
            f"wd={t.weight_decay!r},mb={t.minibatch_size},eps={t.numeric_epsilon!r}"
        )
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


def n_cycles(cfg: DalConfig) -> int:
    """Number of query cycles a config performs before budget depletion."""
    return (cfg.budget - cfg.init_size) // cfg.query_size


@dataclass(frozen=True, eq=False)
class CycleEntry:
    cycle: int
    queried: np.ndarray  # train indices added this cycle (empty at cycle 0)
    labeled_size: int
    metric_name: str
    score: float
    train_loss: float
    train_seconds: float
    query_seconds: float


@dataclass(eq=False)
class RunRecord:
    dataset: str
    strategy: str
    seed: int
    config_id: str
    engine_version: str
    entries: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# record serialization
# ---------------------------------------------------------------------------


def _record_lines(record: RunRecord, include_timings: bool) -> list[str]:
    for text in (record.dataset, record.strategy):
        if any(ch in text for ch in "\t\n"):
            raise InvalidConfigError(f"record field contains tab/newline: {text!r}")
    lines = [
        "record"
        f"\tv={RECORD_VERSION}"
        f"\tdataset={record.dataset}"
        f"\tstrategy={record.strategy}"
        f"\tseed={record.seed}"
        f"\tconfig={record.config_id}"
        f"\tengine={record.engine_version}"
    ]
    for e in record.entries:
        parts = [
            "cycle",
            f"t={e.cycle}",
            f"labeled={e.labeled_size}",
            f"metric={e.metric_name}",
            f"score={e.score!r}",
            f"train_loss={e.train_loss!r}",
        ]
        if include_timings:
            parts.append(f"train_s={e.train_seconds:.6f}")
            parts.append(f"query_s={e.query_seconds:.6f}")
        parts.append("queried=" + ",".join(str(int(i)) for i in e.queried))
        lines.append("\t".join(parts))
    return lines


def canonical_bytes(record: RunRecord) -> bytes:
    """The reproducible payload: everything but wall-clock timings."""
    return ("\n".join(_record_lines(record, include_timings=False)) + "\n").encode()


def write_record(record: RunRecord, destination) -> None:
    """Persist a record atomically (write temp file, then rename)."""
    destination = Path(destination)
    destination.parent.mkdir(parents=True, exist_ok=True)
    blob = ("\n".join(_record_lines(record, include_timings=True)) + "\n").encode()
    tmp = destination.with_name(destination.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, destination)


def _parse_fields(line: str, line_no: int) -> dict:
    fields = {}
    for part in line.split("\t")[1:]:
        if "=" not in part:
            raise RecordParseError(f"malformed field {part!r}", line_no=line_no)
        key, _, value = part.partition("=")
        fields[key] = value
    return fields


def read_record(source) -> RunRecord:
    """Parse a record file; malformed lines raise with their line number."""
    lines = Path(source).read_text().splitlines()
    if not lines or not lines[0].startswith("record\t"):
        raise RecordParseError("missing record header", line_no=1)
    head = _parse_fields(lines[0], 1)
    try:
        record = RunRecord(
            dataset=head["dataset"],
            strategy=head["strategy"],
            seed=int(head["seed"]),
            config_id=head["config"],
            engine_version=head["engine"],
        )
    except KeyError as exc:
        raise RecordParseError(f"header missing field {exc}", line_no=1) from None
    if head.get("v") != str(RECORD_VERSION):
        raise RecordParseError(f"unsupported record version {head.get('v')!r}", line_no=1)
    if record.engine_version != ENGINE_VERSION:
        message = (
            f"record written by engine {record.engine_version}, "
            f"reading with {ENGINE_VERSION}"
        )
        record.warnings.append(message)
        logger.warning("%s: %s", source, message)

    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if not line.startswith("cycle\t"):
            raise RecordParseError(f"expected cycle line, got {line[:30]!r}", line_no=line_no)
        f = _parse_fields(line, line_no)
        try:
            queried = np.array(
                [int(v) for v in f["queried"].split(",") if v], dtype=np.int64
            )
            entry = CycleEntry(
                cycle=int(f["t"]),
                queried=queried,
                labeled_size=int(f["labeled"]),
                metric_name=f["metric"],
                score=float(f["score"]),
                train_loss=float(f["train_loss"]),
                train_seconds=float(f.get("train_s", "0")),
                query_seconds=float(f.get("query_s", "0")),
            )
        except (KeyError, ValueError) as exc:
            raise RecordParseError(f"malformed cycle line: {exc}", line_no=line_no) from None
        if entry.cycle != len(record.entries):
            raise RecordParseError(
                f"cycle {entry.cycle} out of order (expected {len(record.entries)})",
                line_no=line_no,
            )
        record.entries.append(entry)
    return record


def record_curve(record: RunRecord) -> LearningCurve:
    return LearningCurve(
        labeled_counts=np.array([e.labeled_size for e in record.entries]),
        scores=np.array([e.score for e in record.entries]),
    )


def summarize_record(record: RunRecord) -> RunSummary:
    curve = record_curve(record)
    return RunSummary(
        strategy=record.strategy,
        dataset=record.dataset,
        seed=record.seed,
        config_id=record.config_id,
        auc=normalized_auc(curve),
        fac=fac(curve),
        curve=curve,
    )


# ---------------------------------------------------------------------------
# single experiment
# ---------------------------------------------------------------------------


def _evaluate(params, test_x, test_y, metric_name: str, c: int) -> float:
    pred = predict_proba(params, test_x).argmax(axis=1)
    if metric_name == "balanced_accuracy":
        return balanced_accuracy(pred, test_y, c)
    return accuracy(pred, test_y)


def _strategy_inputs(kind, candidates, params, train_x, labeled) -> StrategyInput:
    cand_x = train_x[candidates]
    fields = {"candidate_indices": candidates}
    if kind.name in ("entropy", "cal"):
        fields["candidate_probs"] = predict_proba(params, cand_x)
    if kind.name in ("coreset", "cal"):
        fields["candidate_embeddings"] = cand_x
        fields["labeled_embeddings"] = train_x[labeled]
    if kind.name == "cal":
        fields["labeled_probs"] = predict_proba(params, train_x[labeled])
    if kind.name == "badge":
        fields["grad_embeddings"] = _grad_embedding(params, cand_x)
    return StrategyInput(**fields)


def run_experiment(
    cfg: DalConfig,
    bundle: DatasetBundle,
    seed: int,
    out_path=None,
    observer=None,
) -> RunRecord:
    """Run one full experiment; returns (and optionally persists) its record.

    ``observer`` is an optional callable ``(event, info)`` receiving
    ``("train", {"cycle", "warm_start"})`` and ``("candidates", {"cycle",
    "indices"})`` events; tests use it to verify the cold/warm contract.

    On a cycle failure the partial record is persisted (when ``out_path``
    is given) before an ExperimentFailure annotated with the cycle number
    is raised.
    """
    if cfg.budget > bundle.n_train:
        raise InvalidConfigError(
            f"budget {cfg.budget} exceeds train pool size {bundle.n_train}"
        )
    metric_name = "balanced_accuracy" if bundle.imbalanced else "accuracy"
    train_x = bundle.train_x.astype(np.float64)
    test_x = bundle.test_x.astype(np.float64)
    c = bundle.num_classes
    warm = cfg.model_start == "warm"

    record = RunRecord(
        dataset=bundle.name,
        strategy=cfg.strategy.name,
        seed=seed,
        config_id=cfg.config_id,
        engine_version=ENGINE_VERSION,
    )

    def _notify(event, info):
        if observer is not None:
            observer(event, info)

    def _fail(cycle, exc):
        if out_path is not None:
            write_record(record, out_path)
        raise ExperimentFailure(f"cycle {cycle} failed: {exc}", cycle=cycle) from exc

    total_cycles = n_cycles(cfg)
    try:
        state = init_pools(bundle.n_train, cfg.init_size, substream(seed, 0, "init"))
        t0 = time.perf_counter()
        _notify("train", {"cycle": 0, "warm_start": False})
        params = train(
            train_x[state.labeled],
            bundle.train_y[state.labeled],
            cfg.train,
            substream(seed, 0, "shuffle"),
            num_classes=c,
            init_rng=substream(seed, 0, "model-init"),
        )
        train_s = time.perf_counter() - t0
        record.entries.append(
            CycleEntry(
                cycle=0,
                queried=np.empty(0, dtype=np.int64),
                labeled_size=int(state.labeled.size),
                metric_name=metric_name,
                score=_evaluate(params, test_x, bundle.test_y, metric_name, c),
                train_loss=mean_cross_entropy(
                    params, train_x[state.labeled], bundle.train_y[state.labeled]
                ),
                train_seconds=train_s,
                query_seconds=0.0,
            )
        )
    except Exception as exc:  # noqa: BLE001 - annotate and persist, then re-raise
        _fail(0, exc)

    for t in range(1, total_cycles + 1):
        try:
            q0 = time.perf_counter()
            if cfg.subset_size is None:
                candidates = state.unlabeled.copy()
            else:
                candidates = draw_subset(state, cfg.subset_size, substream(seed, t, "subset"))
            _notify("candidates", {"cycle": t, "indices": candidates})
            inputs = _strategy_inputs(cfg.strategy, candidates, params, train_x, state.labeled)
            batch = select_batch(
                cfg.strategy,
                inputs,
                cfg.query_size,
                substream(seed, t, "strategy"),
                cycle=t,
            )
            query_s = time.perf_counter() - q0

            annotated = annotate(batch, bundle.train_y)
            state = update_pools(state, annotated)

            t0 = time.perf_counter()
            _notify("train", {"cycle": t, "warm_start": warm})
            params = train(
                train_x[state.labeled],
                bundle.train_y[state.labeled],
                cfg.train,
                substream(seed, t, "shuffle"),
                start=params if warm else None,
                num_classes=None if warm else c,
                init_rng=None if warm else substream(seed, t, "model-init"),
            )
            train_s = time.perf_counter() - t0

            record.entries.append(
                CycleEntry(
                    cycle=t,
                    queried=batch.indices,
                    labeled_size=int(state.labeled.size),
                    metric_name=metric_name,
                    score=_evaluate(params, test_x, bundle.test_y, metric_name, c),
                    train_loss=mean_cross_entropy(
                        params, train_x[state.labeled], bundle.train_y[state.labeled]
                    ),
                    train_seconds=train_s,
                    query_seconds=query_s,
                )
            )
        except Exception as exc:  # noqa: BLE001
            _fail(t, exc)

    assert state.labeled.size == cfg.budget  # budget depletion stops the loop
    if out_path is not None:
        write_record(record, out_path)
    return record


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class SuiteResult:
    table: object
    summaries: list
    records: dict  # (dataset, strategy, config_id, seed) -> RunRecord
    failures: list  # (dataset, strategy, config_id, seed, message)


def record_filename(dataset: str, strategy: str, config_id: str, seed: int) -> str:
    return f"{dataset}__{strategy}__{config_id}__s{seed}.rec"


def run_suite(
    bundles,
    configs,
    out_dir=None,
    jobs: int = 1,
    metric: str = "auc",
    include_deltas: bool = True,
) -> SuiteResult:
    """Run a (config x dataset x seed) grid and aggregate the results.

    Individual run failures are collected rather than fatal; their cells
    are simply absent from the table.  The summary is a pure function of
    the run results: execution order and ``jobs`` do not affect it.
    """
    bundles = list(bundles)
    configs = list(configs)
    if jobs < 1:
        raise InvalidConfigError("jobs must be >= 1")
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        (out / "records").mkdir(parents=True, exist_ok=True)

    tasks = []
    for cfg in configs:
        for bundle in bundles:
            for seed in cfg.seeds:
                tasks.append((bundle.name, cfg.strategy.name, cfg.config_id, seed, cfg, bundle))
    tasks.sort(key=lambda task: task[:4])

    def _run(task):
        name, strat, cfg_id, seed, cfg, bundle = task
        path = out / "records" / record_filename(name, strat, cfg_id, seed) if out else None
        return run_experiment(cfg, bundle, seed, out_path=path)

    results: dict = {}
    failures: list = []
    if jobs == 1:
        outcomes = map(_run_safely, ((task, _run) for task in tasks))
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_safely, ((task, _run) for task in tasks)))
    for key, record, error in outcomes:
        if error is not None:
            failures.append((*key, error))
            logger.warning("run %s failed: %s", key, error)
        else:
            results[key] = record

    summaries = [summarize_record(results[key]) for key in sorted(results)]
    table = aggregate(summaries, metric=metric, include_deltas=include_deltas)
    if out is not None:
        (out / "summary.tsv").write_text(format_table(table))
        if failures:
            (out / "failures.txt").write_text(
                "\n".join("\t".join(str(p) for p in f) for f in failures) + "\n"
            )
    return SuiteResult(table=table, summaries=summaries, records=results, failures=failures)


def _run_safely(packed):
    task, runner = packed
    key = task[:4]
    try:
        return key, runner(task), None
    except Exception as exc:  # noqa: BLE001 - suite keeps going
        return key, None, str(exc)


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {
    "strategy",
    "datasets",
    "init_size",
    "query_size",
    "budget",
    "subset_size",
    "model_start",
    "seeds",
    "train",
    "epochs",
    "learning_rate",
    "warmup_fraction",
    "weight_decay",
    "minibatch_size",
    "numeric_epsilon",
    "cal_neighbors",
}


def configs_from_block(block: dict) -> tuple[list[DalConfig], tuple | None]:
    """Expand one config block into DalConfigs (one per listed strategy).

    Returns the configs plus an optional dataset-name filter.  Training
    starts from the ``train`` preset (st, lt, lt+; default lt) and any
    explicit TrainConfig key overrides the preset value.
    """
    unknown = set(block) - _CONFIG_KEYS
    if unknown:
        raise InvalidConfigError(f"unknown config keys: {sorted(unknown)}")

    preset = block.get("train", "lt").strip().lower()
    if preset not in TRAIN_PRESETS:
        raise InvalidConfigError(
            f"unknown train preset {preset!r}; expected one of {sorted(TRAIN_PRESETS)}"
        )
    tc = TRAIN_PRESETS[preset]
    overrides = {}
    for key, cast in (
        ("epochs", int),
        ("learning_rate", float),
        ("warmup_fraction", float),
        ("weight_decay", float),
        ("minibatch_size", int),
        ("numeric_epsilon", float),
    ):
        if key in block:
            overrides[key] = cast(block[key])
    if overrides:
        tc = replace(tc, **overrides)

    subset = block.get("subset_size", "10000").strip().lower()
    subset_size = None if subset in ("none", "false", "") else int(subset)
    seeds = tuple(int(s) for s in block.get("seeds", "0,1,2,3,4").split(","))
    cal_k = int(block.get("cal_neighbors", "10"))

    strategies = [s.strip() for s in block.get("strategy", "random").split(",") if s.strip()]
    configs = [
        DalConfig(
            strategy=StrategyKind(name=name, cal_neighbors=cal_k),
            train=tc,
            init_size=int(block.get("init_size", "100")),
            query_size=int(block.get("query_size", "100")),
            budget=int(block.get("budget", "500")),
            subset_size=subset_size,
            model_start=block.get("model_start", "cold").strip(),
            seeds=seeds,
        )
        for name in strategies
    ]
    datasets = None
    if "datasets" in block:
        datasets = tuple(d.strip() for d in block["datasets"].split(",") if d.strip())
    return configs, datasets

"""Command-line interface.

Subcommands: ``synth`` (emit a synthetic bundle), ``run`` (one
experiment), ``suite`` (a grid from a config file), ``summarize``
(records directory to a comparison table).  ``POOLBENCH_OUT`` overrides
the default output directory; ``POOLBENCH_NO_NUMBA=1`` forces the numpy
kernel path.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click

from ._version import ENGINE_VERSION
from .configio import parse_blocks
from .errors import PoolbenchError
from .featureio import load_bundle, read_manifest, save_bundle, synth_blobs
from .metrics import format_table, aggregate
from .rng import substream
from .runner import (
    DalConfig,
    configs_from_block,
    read_record,
    record_filename,
    run_experiment,
    run_suite,
    summarize_record,
)
from .strategies import StrategyKind

OUT_ENV = "POOLBENCH_OUT"


def _default_out() -> Path:
    return Path(os.environ.get(OUT_ENV, "runs"))


@click.group()
@click.version_option(version=ENGINE_VERSION, prog_name="poolbench")
def main():
    """Pool-based active-learning benchmark harness."""


@main.command()
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Output directory.")
@click.option("--name", default="synth", show_default=True)
@click.option("--n-train", type=int, default=5000, show_default=True)
@click.option("--n-test", type=int, default=2000, show_default=True)
@click.option("--dim", "d", type=int, default=16, show_default=True)
@click.option("--classes", "c", type=int, default=2, show_default=True)
@click.option("--weights", default=None, help="Comma-separated class weights (default uniform).")
@click.option("--spread", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def synth(out, name, n_train, n_test, d, c, weights, spread, seed):
    """Generate a synthetic blob dataset and register it in the manifest."""
    out = out or _default_out() / "data"
    if weights is None:
        w = [1.0 / c] * c
    else:
        w = [float(v) for v in weights.split(",")]
    bundle = synth_blobs(
        n_train, n_test, d, c, w, spread, substream(seed, 0, "synth"), name=name
    )
    entry = save_bundle(bundle, out)
    click.echo(f"wrote {entry.name}: train={n_train} test={n_test} d={d} c={c} -> {out}")


def _load_named_bundles(manifest_path, names=None):
    manifest_path = Path(manifest_path)
    entries = read_manifest(manifest_path)
    if names:
        by_name = {e.name: e for e in entries}
        missing = [n for n in names if n not in by_name]
        if missing:
            raise click.ClickException(f"datasets not in manifest: {missing}")
        entries = [by_name[n] for n in names]
    return [load_bundle(e, manifest_path.parent) for e in entries]


def _single_config(config_path, strategy):
    if config_path is None:
        return DalConfig(strategy=StrategyKind(name=strategy))
    blocks = parse_blocks(Path(config_path).read_text())
    if len(blocks) != 1:
        raise click.ClickException("run expects a config file with exactly one block")
    block = dict(blocks[0])
    block["strategy"] = strategy
    configs, _ = configs_from_block(block)
    return configs[0]


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--dataset", required=True)
@click.option("--strategy", required=True, type=click.Choice(["random", "entropy", "coreset", "badge", "cal"]))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--config", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--out", type=click.Path(path_type=Path), default=None)
def run(manifest, dataset, strategy, seed, config, out):
    """Run a single experiment and write its record."""
    out = out or _default_out()
    bundle = _load_named_bundles(manifest, [dataset])[0]
    cfg = _single_config(config, strategy)
    path = out / "records" / record_filename(dataset, strategy, cfg.config_id, seed)
    record = run_experiment(cfg, bundle, seed, out_path=path)
    summary = summarize_record(record)
    click.echo(
        f"{dataset} {strategy} seed={seed}: auc={summary.auc:.4f} fac={summary.fac:.4f} "
        f"({len(record.entries) - 1} cycles) -> {path}"
    )


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--config", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), default=None)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--metric", type=click.Choice(["auc", "fac"]), default="auc", show_default=True)
@click.option("--no-deltas", is_flag=True, help="Skip the improvement-over-random column.")
def suite(manifest, config, out, jobs, metric, no_deltas):
    """Run every (config, dataset, seed) combination from a config file."""
    out = out or _default_out()
    all_configs = []
    filters = []
    for block in parse_blocks(Path(config).read_text()):
        configs, datasets = configs_from_block(block)
        all_configs.extend(configs)
        filters.append(datasets)
    # a block without a datasets key means "all datasets": only filter the
    # manifest when every block agrees on restricting it
    names = None
    if filters and all(f is not None for f in filters):
        names = sorted({n for f in filters for n in f})
    bundles = _load_named_bundles(manifest, names)
    result = run_suite(
        bundles,
        all_configs,
        out_dir=out,
        jobs=jobs,
        metric=metric,
        include_deltas=not no_deltas,
    )
    click.echo(format_table(result.table), nl=False)
    if result.failures:
        click.echo(f"{len(result.failures)} run(s) failed; see {out / 'failures.txt'}", err=True)
    click.echo(f"summary -> {out / 'summary.tsv'}")


@main.command()
@click.option("--records", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--metric", type=click.Choice(["auc", "fac"]), default="auc", show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None)
@click.option("--no-deltas", is_flag=True)
def summarize(records, metric, out, no_deltas):
    """Aggregate a directory of run records into a comparison table."""
    paths = sorted(Path(records).glob("*.rec"))
    if not paths:
        raise click.ClickException(f"no .rec files under {records}")
    summaries = [summarize_record(read_record(p)) for p in paths]
    table = aggregate(summaries, metric=metric, include_deltas=not no_deltas)
    text = format_table(table)
    click.echo(text, nl=False)
    if out is not None:
        Path(out).write_text(text)
        click.echo(f"table -> {out}")


def entrypoint():  # pragma: no cover - thin wrapper
    try:
        main()
    except PoolbenchError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    entrypoint()

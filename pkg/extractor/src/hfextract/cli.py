"""CLI: extract one dataset into engine-readable feature files."""

from __future__ import annotations

import logging
from pathlib import Path

import click

from .catalog import CATALOG
from .extract import ExtractionJob, extract


@click.group()
def main():
    """Dataset download + frozen-encoder feature extraction."""


@main.command("extract")
@click.option("--dataset", required=True, type=click.Choice(sorted(CATALOG)))
@click.option("--encoder", default="distilbert-base-uncased", show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=Path("data"), show_default=True)
@click.option("--max-length", type=int, default=512, show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--device", default="cpu", show_default=True)
def extract_cmd(dataset, encoder, out, max_length, batch_size, device):
    """Download DATASET, encode both splits, and update OUT/manifest.txt."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    job = ExtractionJob(
        dataset=dataset,
        encoder=encoder,
        out_dir=out,
        max_length=max_length,
        batch_size=batch_size,
        device=device,
    )
    entry = extract(job)
    click.echo(f"{entry['name']}: wrote 4 files and manifest block under {out}")


@main.command("list")
def list_cmd():
    """List the supported dataset ids."""
    for name, spec in sorted(CATALOG.items()):
        pair = "+".join(spec.text_fields)
        click.echo(f"{name:10s} {spec.hub_path:24s} classes={spec.num_classes:<3d} text={pair}")


if __name__ == "__main__":
    main()

"""Command-line entry point.

Exit codes: 0 success, 1 I/O failure, 2 validation or domain error.
Diagnostics go to stderr; results go to files only.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import dataset as ds
from . import workflow
from .errors import GitSegError
from .metrics.report import overall_composite, write_report
from .plotting import score_summary_figure
from .preprocess.config import AugmentationSpec, load_spec
from .rle import decode_rle

DATASET_ENV = "GITSEG_DATASET"

_dataset_option = click.option(
    "--dataset",
    "dataset_root",
    envvar=DATASET_ENV,
    required=True,
    type=click.Path(path_type=Path),
    help=f"Dataset root (default: ${DATASET_ENV}).",
)
_jobs_option = click.option(
    "--jobs",
    "-j",
    type=click.IntRange(min=1),
    default=workflow.default_jobs,
    show_default="available cores",
    help="Worker processes; never changes output bytes.",
)


def _index(root: Path) -> ds.DatasetIndex:
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} does not exist")
    return ds.scan_dataset(root)


@click.group()
@click.version_option(package_name="artifact")
def cli():
    """GI-tract MRI segmentation tools: RLE, preprocessing, ensembling, scoring."""


@cli.command("decode")
@click.option("--rle", required=True, help="Run-length text, e.g. '1 4'.")
@click.option("--width", type=click.IntRange(min=1), required=True)
@click.option("--height", type=click.IntRange(min=1), required=True)
@click.option("--out", type=click.Path(path_type=Path), default="mask.png", show_default=True)
def cmd_decode(rle, width, height, out):
    """Decode RLE into an 8-bit mask PNG (255 = foreground)."""
    mask = decode_rle(rle, width, height)
    ds.write_png(out, mask.bits.astype(np.uint8) * 255)


@cli.command("score")
@click.option("--pred", type=click.Path(path_type=Path), required=True)
@click.option("--truth", type=click.Path(path_type=Path), required=True)
@_dataset_option
@click.option("--out", type=click.Path(path_type=Path), default="report.csv", show_default=True)
@click.option("--figure/--no-figure", default=True, help="Also write <out>.png with per-class means.")
@click.option("--strict", is_flag=True, help="Fail on missing prediction rows instead of scoring them blank.")
@_jobs_option
def cmd_score(pred, truth, dataset_root, out, figure, strict, jobs):
    """Score predictions against ground truth per 3D case."""
    for p in (pred, truth):
        if not p.is_file():
            raise FileNotFoundError(f"{p} does not exist")
    index = _index(dataset_root)
    summary = workflow.score_dataset(
        index, ds.load_annotations(truth), ds.load_annotations(pred), jobs=jobs, strict=strict
    )
    write_report(summary.reports, out)
    if figure:
        score_summary_figure(summary.reports, out.with_suffix(".png"))
    overall = overall_composite(summary.reports) if summary.reports else float("nan")
    click.echo(
        f"scored {len(summary.reports)} case(s); overall composite {overall:.6f}; "
        f"{summary.missing_predictions} missing prediction row(s) scored as blank",
        err=True,
    )


@cli.command("preprocess")
@_dataset_option
@click.option("--spec", "spec_path", type=click.Path(path_type=Path), help="Augmentation config file.")
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--mode", type=click.Choice(["gray", "25d"]), default="gray", show_default=True)
@click.option("--labels", "labels_csv", type=click.Path(path_type=Path), help="Annotations to transform alongside.")
@click.option("--seed", type=int, help="Override the config seed.")
@_jobs_option
def cmd_preprocess(dataset_root, spec_path, out, mode, labels_csv, seed, jobs):
    """Resize, augment and write slices or 2.5D stacks under a seed."""
    spec = load_spec(spec_path) if spec_path else AugmentationSpec()
    if seed is not None:
        spec = spec.replace(seed=seed)
    index = _index(dataset_root)
    annotations = ds.load_annotations(labels_csv) if labels_csv else None
    n = workflow.preprocess_dataset(index, spec, out, mode, annotations, jobs=jobs)
    click.echo(f"wrote {n} {mode} sample(s) to {out}", err=True)


@cli.command("ensemble")
@_dataset_option
@click.option("--probmaps-a", type=click.Path(path_type=Path), required=True, help="2.5D pathway maps.")
@click.option("--probmaps-b", type=click.Path(path_type=Path), required=True, help="Grayscale pathway maps.")
@click.option("--presence", type=click.Path(path_type=Path), required=True, help="CSV id,class,probability.")
@click.option("--gate-thr", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=0.5, show_default=True)
@click.option("--bin-thr", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=0.5, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default="pred.csv", show_default=True)
@_jobs_option
def cmd_ensemble(dataset_root, probmaps_a, probmaps_b, presence, gate_thr, bin_thr, out, jobs):
    """Gate, average and threshold precomputed pathway outputs into an RLE CSV."""
    for d in (probmaps_a, probmaps_b):
        if not d.is_dir():
            raise FileNotFoundError(f"{d} is not a directory")
    index = _index(dataset_root)
    table = workflow.load_presence(presence)
    n = workflow.ensemble_dataset(index, probmaps_a, probmaps_b, table, gate_thr, bin_thr, out, jobs=jobs)
    click.echo(f"wrote {n} prediction row(s) to {out}", err=True)


@cli.command("overlay")
@_dataset_option
@click.option("--masks", type=click.Path(path_type=Path), required=True, help="Annotation or prediction CSV.")
@click.option("--out", type=click.Path(path_type=Path), required=True)
@_jobs_option
def cmd_overlay(dataset_root, masks, out, jobs):
    """Render colour overlays of masks on their slices."""
    index = _index(dataset_root)
    n = workflow.overlay_dataset(index, ds.load_annotations(masks), out, jobs=jobs)
    click.echo(f"wrote {n} overlay(s) to {out}", err=True)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="gitseg", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.Abort:
        return 1
    except GitSegError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

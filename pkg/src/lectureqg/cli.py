"""Command-line interface: ingest, caption, run, sweep-window,
benchmark-metrics, report, serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import runner as runner_mod
from .corpus import CorpusError, load_corpus, load_lecture, corpus_stats
from .ingest import (IngestError, KeyframeParams, align_keyframes,
                     caption_keyframes, extract_keyframes)
from .metrics import (MetricError, bleu_n, load_benchmark_pairs,
                      paraphrase_benchmark, rouge_l_f1)
from .runner import RunConfig


@click.group()
def main():
    """Answer- and timestamp-aware quiz question generation."""


def _load_config(path: str) -> RunConfig:
    try:
        return RunConfig.from_file(path)
    except (OSError, ValueError, TypeError) as exc:
        raise click.UsageError(f"bad config {path}: {exc}")


@main.command()
@click.argument("source", type=click.Path(exists=True))
@click.argument("lecture_dir", type=click.Path())
@click.option("--fps", default=30.0, show_default=True)
@click.option("--skip-n", default=30, show_default=True,
              help="Frames skipped between hash checks.")
@click.option("--delta", default=5, show_default=True,
              help="Hash-distance threshold for a new keyframe.")
@click.option("--crop", default=None, help="x,y,w,h crop rectangle in pixels.")
@click.option("--force", is_flag=True, help="Re-extract even if outputs exist.")
def ingest(source, lecture_dir, fps, skip_n, delta, crop, force):
    """Extract keyframes from SOURCE (video or frame dir) into LECTURE_DIR.

    LECTURE_DIR must already contain transcript.jsonl; keyframes.jsonl and
    the alignment in lecture.json are (re)written.
    """
    lecture_dir = Path(lecture_dir)
    transcript = lecture_dir / "transcript.jsonl"
    if not transcript.exists():
        raise click.UsageError(f"missing transcript: {transcript}")
    kf_path = lecture_dir / "keyframes.jsonl"
    if kf_path.exists() and not force:
        click.echo(f"{kf_path} exists; skipping (use --force to redo)")
        return
    crop_rect = tuple(int(v) for v in crop.split(",")) if crop else None
    params = KeyframeParams(fps=fps, skip_n=skip_n, delta=delta, crop=crop_rect)
    try:
        keyframes = extract_keyframes(source, params,
                                      output_dir=lecture_dir / "frames")
    except IngestError as exc:
        raise click.ClickException(str(exc))
    with open(kf_path, "w", encoding="utf-8") as f:
        for kf in keyframes:
            f.write(json.dumps(
                {"index": kf.index, "timestamp_s": kf.timestamp_s,
                 "image_ref": kf.image_ref, "phash": kf.phash,
                 "caption": kf.caption}, ensure_ascii=False) + "\n")
    lecture = load_lecture(lecture_dir)
    lecture.alignment = align_keyframes(lecture)
    meta_path = lecture_dir / "lecture.json"
    meta = (json.loads(meta_path.read_text(encoding="utf-8"))
            if meta_path.exists() else {})
    meta["alignment"] = {str(k): v for k, v in lecture.alignment.items()}
    meta.setdefault("duration_s", lecture.duration_s)
    meta_path.write_text(json.dumps(meta, ensure_ascii=False, indent=2) + "\n",
                         encoding="utf-8")
    click.echo(f"extracted {len(keyframes)} keyframes")


@main.command()
@click.argument("lecture_dir", type=click.Path(exists=True))
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True))
def caption(lecture_dir, config_path):
    """Caption every keyframe of LECTURE_DIR via the configured vision model."""
    config = _load_config(config_path)
    client = runner_mod.build_generator_client(config)
    lecture = load_lecture(Path(lecture_dir))
    caption_keyframes(lecture, client)
    kf_path = Path(lecture_dir) / "keyframes.jsonl"
    with open(kf_path, "w", encoding="utf-8") as f:
        for kf in lecture.keyframes:
            row = {"index": kf.index, "timestamp_s": kf.timestamp_s,
                   "image_ref": kf.image_ref, "phash": kf.phash,
                   "caption": kf.caption}
            if kf.caption_failed:
                row["caption_failed"] = True
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
    failed = sum(1 for kf in lecture.keyframes if kf.caption_failed)
    click.echo(f"captioned {len(lecture.keyframes) - failed} keyframes"
               + (f" ({failed} failed)" if failed else ""))


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True))
def run(config_path):
    """Run the full matrix (context -> generate -> score) from a config file."""
    config = _load_config(config_path)
    try:
        scores = runner_mod.run(config)
    except CorpusError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"scored {len(scores)} (item, strategy) pairs; "
               f"report in {config.output_dir}")


@main.command("sweep-window")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True))
@click.option("--ks", default="1,3,5,7,9,11", show_default=True)
@click.option("--modality", default="transcript", show_default=True)
def sweep_window(config_path, ks, modality):
    """Sweep Rule-k window sizes and plot mean NLI@5 against k."""
    config = _load_config(config_path)
    ks_tuple = tuple(int(v) for v in ks.split(","))
    try:
        points, best_k = runner_mod.sweep_window(config, ks_tuple, modality)
    except (CorpusError, ValueError) as exc:
        raise click.ClickException(str(exc))
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(runner_mod.sweep_csv(points, best_k),
                                   encoding="utf-8")
    runner_mod.sweep_plot_svg(points, out / "sweep.svg")
    click.echo(f"Rule-Best k = {best_k}; wrote sweep.csv and sweep.svg")


SCORERS = {
    "rouge-l": lambda a, b: rouge_l_f1(a, b),
    "bleu": lambda a, b: bleu_n(a, b, 4),
    "bleu-1": lambda a, b: bleu_n(a, b, 1),
    "bleu-2": lambda a, b: bleu_n(a, b, 2),
}


@main.command("benchmark-metrics")
@click.argument("pairs_path", type=click.Path(exists=True))
@click.option("--scorers", default="rouge-l,bleu,bleu-1,bleu-2",
              show_default=True)
@click.option("--nli-endpoint", default="", help="NLI endpoint URL for the "
              "'nli' scorer.")
@click.option("--threshold", default=0.5, show_default=True)
@click.option("--sweep-thresholds", is_flag=True,
              help="Report the best threshold per scorer instead of the "
              "fixed one (the fixed rule is ambiguous for continuous "
              "metrics).")
@click.option("--out", "out_path", default="", help="Write CSV here.")
def benchmark_metrics(pairs_path, scorers, nli_endpoint, threshold,
                      sweep_thresholds, out_path):
    """Paraphrase-pair discrimination benchmark over labeled question pairs."""
    pairs = load_benchmark_pairs(pairs_path)
    available = dict(SCORERS)
    if nli_endpoint:
        from .metrics import nli_score
        from .runner import build_nli_client

        nli_client = build_nli_client(nli_endpoint)
        available["nli"] = lambda a, b: nli_score(a, b, nli_client)
    lines = ["scorer,threshold,f1,accuracy,tp,fp,tn,fn"]
    for name in scorers.split(","):
        name = name.strip()
        if name not in available:
            raise click.UsageError(
                f"unknown scorer {name!r}; available: "
                f"{', '.join(sorted(available))}")
        try:
            result = paraphrase_benchmark(
                pairs, available[name], scorer_name=name, threshold=threshold,
                sweep_thresholds=sweep_thresholds)
        except MetricError as exc:
            raise click.ClickException(str(exc))
        lines.append(f"{name},{result.threshold:.4f},{100 * result.f1:.2f},"
                     f"{100 * result.accuracy:.2f},{result.tp},{result.fp},"
                     f"{result.tn},{result.fn}")
        click.echo(f"{name}: F1 {100 * result.f1:.2f}  "
                   f"Acc {100 * result.accuracy:.2f}  "
                   f"(threshold {result.threshold:g})")
    if out_path:
        Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@main.command()
@click.argument("corpus_root", type=click.Path(exists=True))
def report(corpus_root):
    """Print corpus statistics (word counts, segments, keyframes, choices)."""
    try:
        stats = corpus_stats(load_corpus(corpus_root))
    except CorpusError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"{'field':<20}{'mean':>10}{'std':>10}{'min':>8}"
               f"{'median':>10}{'max':>8}")
    for name, fs in stats.fields.items():
        click.echo(f"{name:<20}{fs.mean:>10.1f}{fs.std:>10.1f}{fs.min:>8.0f}"
                   f"{fs.median:>10.1f}{fs.max:>8.0f}")


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--static-dir", default=None, type=click.Path(),
              help="Built authoring-UI assets to serve at /.")
def serve(config_path, host, port, static_dir):
    """Serve the authoring API (and optionally the UI) over HTTP."""
    import uvicorn

    from .api import create_app

    config = _load_config(config_path)
    app = create_app(
        config.corpus_root,
        client=runner_mod.build_generator_client(config),
        nli_client=runner_mod.build_nli_client(config.nli_endpoint),
        rquge_client=runner_mod.build_rquge_client(config.rquge_endpoint),
        rule_best_k=config.rule_best_k,
        runs_dir=config.output_dir,
        static_dir=static_dir,
    )
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())

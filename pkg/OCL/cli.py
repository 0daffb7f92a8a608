from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional

import typer

from OCL.config import RunConfig, load_config
from OCL.cropper import compute_smin, dump_pairs
from OCL.errors import ConfigError, MissingInputError, OCLError
from OCL.evalkit import (
    bench_proposals,
    check_regression,
    features_from_state,
    linear_probe,
    overlap_report,
    run_sweep,
)
from OCL.objectness import (
    BingModel,
    ProposalCache,
    ProposalConfig,
    ProposalSource,
    cache_write,
    get_proposal_source,
    proposal_recall,
    propose,
    random_baseline,
    train as train_bing,
)
from OCL.runs import RunDirectory, atomic_write_text, canonical_json, default_workers
from OCL.ssl import load_checkpoint, pretrain
from OCL.synthgen import DatasetManifest, generate, split

logger = logging.getLogger(__name__)

app = typer.Typer(help="Object-aware cropping laboratory: synthetic data, proposals, pretraining and probes.")

# -------------------------------------------------------------
# Common options
# -------------------------------------------------------------
CONFIG_OPT = typer.Option(None, "--config", "-c", help="JSON or YAML run config")
SET_OPT = typer.Option(None, "--set", help="Override a config value: section.key=value (repeatable)")
SEED_OPT = typer.Option(None, "--seed", help="Top-level seed (overrides the config)")
OUT_OPT = typer.Option(".", "--out", "-o", help="Run directory; relative artifact paths resolve here")
VERBOSE_OPT = typer.Option(False, "--verbose", "-v", help="Log progress at INFO level")


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def _run(
    command: str,
    config: Optional[str],
    overrides: Optional[List[str]],
    seed: Optional[int],
    out: str,
    verbose: bool,
    body: Callable[[RunConfig, RunDirectory], Iterable[Path]],
) -> None:
    """Resolve config, echo it, run ``body`` and record its outputs; OCLError -> one JSON line + exit code."""
    _setup_logging(verbose)
    try:
        cfg = load_config(config, overrides or [], seed)
        run = RunDirectory(out)
        resolved = cfg.to_dict()
        run.echo_config(command, resolved)
        outputs = list(body(cfg, run))
        run_id = run.record(command, resolved, outputs)
        logger.info("%s recorded as run %s", command, run_id)
    except OCLError as exc:
        typer.echo(json.dumps(exc.to_dict(), sort_keys=True), err=True)
        raise typer.Exit(code=exc.exit_code)


# -------------------------------------------------------------
# Helpers
# -------------------------------------------------------------
def _manifest(cfg: RunConfig, run: RunDirectory, name: str) -> DatasetManifest:
    return DatasetManifest.read(cfg.dataset_file(run.root, name)).validate(n_classes=cfg.synth.n_classes)


def _source(cfg: RunConfig, run: RunDirectory, manifest: DatasetManifest, n_max: Optional[int] = None) -> ProposalSource:
    """The configured proposal source; a cache must cover every image of ``manifest``."""
    kind = cfg.proposals.source
    n_max = n_max or cfg.proposals.n_max
    if cfg.train.strategy.uses_gt or kind == "gt":
        return get_proposal_source("gt")
    if kind == "cache":
        cache = ProposalCache.read(cfg.resolve_path(run.root, "proposals"))
        cache.require(r.image for r in manifest.records)
        return get_proposal_source("cache", cache=cache, n_max=n_max)
    model = BingModel.load(cfg.resolve_path(run.root, "model"))
    pcfg = cfg.proposals.proposal_config()
    pcfg.n_max = n_max
    return get_proposal_source("bing", model=model, cfg=pcfg)


def _smin(cfg: RunConfig, manifest: DatasetManifest, source: Optional[ProposalSource]) -> float:
    """Scale floor for box crops: scale_lo over the mean box-to-image area fraction."""
    if source is None or not cfg.train.strategy.needs_boxes:
        return cfg.crop.scale_lo
    boxes: Dict[str, list] = {}
    for rec in manifest.records:
        image = manifest.load_image(rec) if getattr(source, "kind", "") == "bing" else None
        boxes[rec.image] = source.boxes(rec, image)
    sizes = {rec.image: (rec.width, rec.height) for rec in manifest.records}
    s_min = compute_smin(boxes, sizes, cfg.crop.scale_lo)
    logger.info("s_min = %.4f", s_min)
    return s_min


def _box_source(cfg: RunConfig, run: RunDirectory, manifest: DatasetManifest) -> Optional[ProposalSource]:
    return _source(cfg, run, manifest) if cfg.train.strategy.needs_boxes else None


def _write_json(path: Path, payload) -> Path:
    return atomic_write_text(path, canonical_json(payload))


# -------------------------------------------------------------
# Dataset commands
# -------------------------------------------------------------
@app.command("synth-gen")
def synth_gen_cmd(
    config: Optional[str] = CONFIG_OPT,
    overrides: Optional[List[str]] = SET_OPT,
    seed: Optional[int] = SEED_OPT,
    out: str = OUT_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """
    Generate the synthetic multi-object dataset with its manifests and report.
    """

    def body(cfg: RunConfig, run: RunDirectory):
        target = cfg.resolve_path(run.root, "dataset")
        typer.secho(f"Generating {cfg.synth.n_images} images into {target} ...", fg=typer.colors.BLUE)
        result = generate(cfg.synth, target)
        typer.secho(
            f"{result.report['images']} images, {result.report['objects']} objects", fg=typer.colors.GREEN
        )
        return [result.manifest_path, result.train_path, result.val_path, target / "report.json"]

    _run("synth-gen", config, overrides, seed, out, verbose, body)


@app.command("split")
def split_cmd(
    manifest: Optional[str] = typer.Option(None, "--manifest", "-m", help="Manifest to split (default: dataset manifest)"),
    config: Optional[str] = CONFIG_OPT,
    overrides: Optional[List[str]] = SET_OPT,
    seed: Optional[int] = SEED_OPT,
    out: str = OUT_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """
    Split a manifest into train.jsonl / val.jsonl in the dataset directory.
    """

    def body(cfg: RunConfig, run: RunDirectory):
        src = Path(manifest) if manifest else cfg.dataset_file(run.root, "manifest")
        data = DatasetManifest.read(src).validate(n_classes=cfg.synth.n_classes)
        target = cfg.resolve_path(run.root, "dataset")
        train_m, val_m = split(data, cfg.synth.train_frac, cfg.seed)
        train_path = train_m.relocated(target).write(target / "train.jsonl")
        val_path = val_m.relocated(target).write(target / "val.jsonl")
        typer.echo(json.dumps({"train": len(train_m), "val": len(val_m)}))
        return [train_path, val_path]

    _run("split", config, overrides, seed, out, verbose, body)


# -------------------------------------------------------------
# Objectness commands
# -------------------------------------------------------------
@app.command("bing-train")
def bing_train_cmd(
    config: Optional[str] = CONFIG_OPT,
    overrides: Optional[List[str]] = SET_OPT,
    seed: Optional[int] = SEED_OPT,
    out: str = OUT_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """
    Train the objectness model on the train split's GT boxes.
    """

    def body(cfg: RunConfig, run: RunDirectory):
        data = _manifest(cfg, run, "train")
        typer.secho(f"Training objectness model on {len(data)} images ...", fg=typer.colors.BLUE)
        model = train_bing(data, cfg.bing)
        path = model.save(cfg.resolve_path(run.root, "model"))
        typer.echo(json.dumps(model.recipe, sort_keys=True))
        return [path]

    _run("bing-train", config, overrides, seed, out, verbose, body)


@app.command("propose")
def propose_cmd(
    split_name: str = typer.Option("manifest", "--split", help="manifest | train | val"),
    config: Optional[str] = CONFIG_OPT,
    overrides: Optional[List[str]] = SET_OPT,
    seed: Optional[int] = SEED_OPT,
    out: str = OUT_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """
    Run the objectness model over a manifest and write the proposal cache.
    """

    def body(cfg: RunConfig, run: RunDirectory):
        data = _manifest(cfg, run, split_name)
        model = BingModel.load(cfg.resolve_path(run.root, "model"))
        pcfg: ProposalConfig = cfg.proposals.proposal_config()
        workers = cfg.synth.workers or default_workers()
        with ThreadPoolExecutor(max_workers=workers) as executor:
            lists = list(executor.map(lambda rec: propose(data.load_image(rec), model, pcfg), data.records))
        path = cache_write(cfg.resolve_path(run.root, "proposals"), {r.image: p for r, p in zip(data.records, lists)})
        fallbacks = sum(1 for props in lists if props and props[0].is_fallback)
        typer.secho(f"Wrote proposals for {len(lists)} images to {path}", fg=typer.colors.GREEN)
        if fallbacks:
            typer.secho(f"{fallbacks} image(s) fell back to the full-image box", fg=typer.colors.YELLOW)
        return [path]

    _run("propose", config, overrides, seed, out, verbose, body)


@app.command("recall")
def recall_cmd(
    split_name: str = typer.Option("val", "--split", help="manifest | train | val"),
    config: Optional[str] = CONFIG_OPT,
    overrides: Optional[List[str]] = SET_OPT,
    seed: Optional[int] = SEED_OPT,
    out: str = OUT_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """
    Recall@k of cached proposals against GT boxes, next to a random-box baseline.
    """

    def body(cfg: RunConfig, run: RunDirectory):
        data = _manifest(cfg, run, split_name)
        cache = ProposalCache.read(cfg.resolve_path(run.root, "proposals")).require(r.image for r in data.records)
        k, thr = cfg.proposals.recall_k, cfg.proposals.recall_iou
        report = {
            "proposals": proposal_recall(data, cache.entries, k=k, iou_thresh=thr),
            "random": proposal_recall(data, random_baseline(data, k, cfg.seed), k=k, iou_thresh=thr),
        }
        typer.echo(json.dumps(report, sort_keys=True))
        return [_write_json(cfg.resolve_path(run.root, "recall"), report)]

    _run("recall", config, overrides, seed, out, verbose, body)


# -------------------------------------------------------------
# Crop and pretraining commands
# -------------------------------------------------------------
@app.command("crop-dump")
def crop_dump_cmd(
    config: Optional[str] = CONFIG_OPT,
    overrides: Optional[List[str]] = SET_OPT,
    seed: Optional[int] = SEED_OPT,
    out: str = OUT_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """
    Write view pairs of the configured strategy as PPM files plus pairs.jsonl.
    """

    def body(cfg: RunConfig, run: RunDirectory):
        data = _manifest(cfg, run, "train")
        source = _box_source(cfg, run, data)
        s_min = _smin(cfg, data, source)
        target = cfg.resolve_path(run.root, "crops")
        sidecar = dump_pairs(
            data, source, cfg.train.strategy, cfg.crop, s_min, cfg.analysis.dump_pairs, cfg.seed, target
        )
        typer.secho(f"Dumped {cfg.analysis.dump_pairs} pairs to {target}", fg=typer.colors.GREEN)
        return [sidecar]

    _run("crop-dump", config, overrides, seed, out, verbose, body)


@app.command("pretrain")
def pretrain_cmd(
    resume: bool = typer.Option(False, "--resume", help="Continue from the checkpoint if it exists"),
    stop_after: Optional[int] = typer.Option(None, "--stop-after", help="Stop after this many more epochs"),
    config: Optional[str] = CONFIG_OPT,
    overrides: Optional[List[str]] = SET_OPT,
    seed: Optional[int] = SEED_OPT,
    out: str = OUT_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """
    Momentum-contrast pretraining on the train split; checkpoints and metrics every epoch.
    """

    def body(cfg: RunConfig, run: RunDirectory):
        data = _manifest(cfg, run, "train")
        ckpt = cfg.resolve_path(run.root, "checkpoint")
        metrics = cfg.resolve_path(run.root, "metrics")
        state = None
        if resume and ckpt.exists():
            state, saved = load_checkpoint(ckpt)
            mine, theirs = cfg.train.to_dict(), saved.to_dict()
            mine.pop("epochs"), theirs.pop("epochs")
            if mine != theirs:
                raise ConfigError(
                    f"checkpoint {ckpt} was trained with a different config", code="RESUME_CONFIG_MISMATCH"
                )
            typer.secho(f"Resuming from epoch {state.epoch}", fg=typer.colors.YELLOW)
        source = _box_source(cfg, run, data)
        s_min = _smin(cfg, data, source)
        typer.secho(
            f"Pretraining {cfg.train.strategy.value} for {cfg.train.epochs} epoch(s) on {len(data)} images ...",
            fg=typer.colors.BLUE,
        )
        result = pretrain(
            data,
            cfg.train,
            source=source,
            s_min=s_min,
            state=state,
            checkpoint_path=ckpt,
            metrics_path=metrics,
            stop_after=stop_after,
        )
        if result.state.metrics:
            last = result.state.metrics[-1]
            typer.secho(f"epoch {last.epoch}: loss {last.loss:.5f}", fg=typer.colors.GREEN)
        return [ckpt, metrics]

    _run("pretrain", config, overrides, seed, out, verbose, body)


# -------------------------------------------------------------
# Evaluation commands
# -------------------------------------------------------------
@app.command("probe")
def probe_cmd(
    checkpoint: Optional[str] = typer.Option(None, "--checkpoint", help="Checkpoint to probe (default: paths.checkpoint)"),
    config: Optional[str] = CONFIG_OPT,
    overrides: Optional[List[str]] = SET_OPT,
    seed: Optional[int] = SEED_OPT,
    out: str = OUT_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """
    Linear probe on frozen features: per-class AP and mAP on the val split.
    """

    def body(cfg: RunConfig, run: RunDirectory):
        ckpt = Path(checkpoint) if checkpoint else cfg.resolve_path(run.root, "checkpoint")
        train_m = _manifest(cfg, run, "train")
        val_m = _manifest(cfg, run, "val")
        state, saved = load_checkpoint(ckpt)
        n_classes = cfg.synth.n_classes
        train_set = features_from_state(state, saved.crop.target, train_m, n_classes)
        val_set = features_from_state(state, saved.crop.target, val_m, n_classes)
        result = linear_probe(train_set.features, train_set.labels, val_set.features, val_set.labels, cfg.probe)
        report = dict(result.to_dict(), checkpoint=str(ckpt), epoch=state.epoch)
        typer.secho(f"mAP {result.mean_ap:.4f}", fg=typer.colors.GREEN)
        csv_path = atomic_write_text(cfg.resolve_path(run.root, "probe_csv"), result.to_csv())
        return [_write_json(cfg.resolve_path(run.root, "probe"), report), csv_path]

    _run("probe", config, overrides, seed, out, verbose, body)


@app.command("overlap")
def overlap_cmd(
    split_name: str = typer.Option("train", "--split", help="manifest | train | val"),
    config: Optional[str] = CONFIG_OPT,
    overrides: Optional[List[str]] = SET_OPT,
    seed: Optional[int] = SEED_OPT,
    out: str = OUT_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """
    View-overlap and object-pixel statistics of the configured strategy.
    """

    def body(cfg: RunConfig, run: RunDirectory):
        data = _manifest(cfg, run, split_name)
        source = _box_source(cfg, run, data)
        s_min = _smin(cfg, data, source)
        report = overlap_report(
            data, cfg.train.strategy, cfg.crop, cfg.analysis.overlap_samples, cfg.seed, source=source, s_min=s_min
        )
        typer.echo(json.dumps(report, sort_keys=True))
        return [_write_json(cfg.resolve_path(run.root, "overlap"), report)]

    _run("overlap", config, overrides, seed, out, verbose, body)


@app.command("sweep")
def sweep_cmd(
    preset: Optional[str] = typer.Option(None, "--preset", help="Use a preset grid: delta | temperature"),
    config: Optional[str] = CONFIG_OPT,
    overrides: Optional[List[str]] = SET_OPT,
    seed: Optional[int] = SEED_OPT,
    out: str = OUT_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """
    Pretrain + probe over a parameter grid; resumable CSV of (value, seed, mAP, pos_sim, neg_sim).
    """

    def body(cfg: RunConfig, run: RunDirectory):
        spec = cfg.sweep
        train_m = _manifest(cfg, run, "train")
        val_m = _manifest(cfg, run, "val")
        base_source = _box_source(cfg, run, train_m)
        s_min = _smin(cfg, train_m, base_source)

        def source_for(n_max: Optional[int]) -> Optional[ProposalSource]:
            if not cfg.train.strategy.needs_boxes:
                return None
            return _source(cfg, run, train_m, n_max) if n_max else base_source

        path = cfg.resolve_path(run.root, "sweep")
        typer.secho(f"Sweeping {spec.param} over {spec.values} x seeds {spec.seeds} ...", fg=typer.colors.BLUE)
        rows = run_sweep(spec, cfg.train, cfg.probe, train_m, val_m, cfg.synth.n_classes, path, source_for, s_min)
        typer.secho(f"{len(rows)} row(s) in {path}", fg=typer.colors.GREEN)
        return [path]

    if preset:
        overrides = list(overrides or []) + [f"sweep.preset={preset}"]
    _run("sweep", config, overrides, seed, out, verbose, body)


@app.command("bench")
def bench_cmd(
    config: Optional[str] = CONFIG_OPT,
    overrides: Optional[List[str]] = SET_OPT,
    seed: Optional[int] = SEED_OPT,
    out: str = OUT_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """
    Single-thread proposal throughput; gated against paths.baseline when set.
    """

    def body(cfg: RunConfig, run: RunDirectory):
        model = BingModel.load(cfg.resolve_path(run.root, "model"))
        b = cfg.bench
        report = bench_proposals(
            model, b.width, b.height, b.n_iters, b.warmup, cfg.seed, cfg.proposals.proposal_config()
        )
        gate = None
        if cfg.paths.baseline:
            baseline_path = cfg.resolve_path(run.root, "baseline")
            if not baseline_path.exists():
                raise MissingInputError(f"bench baseline not found: {baseline_path}")
            gate = check_regression(report, json.loads(baseline_path.read_text(encoding="utf-8")), b.tolerance)
            report["regression"] = gate
        path = _write_json(cfg.resolve_path(run.root, "bench"), report)
        typer.echo(json.dumps(report, sort_keys=True))
        if gate is not None and not gate["ok"]:
            raise OCLError(
                f"throughput {gate['fps_mean']:.1f} fps is below the gate {gate['floor']:.1f} fps",
                code="THROUGHPUT_REGRESSION",
            )
        return [path]

    _run("bench", config, overrides, seed, out, verbose, body)


# -------------------------------------------------------------
# CLI Entrypoint
# -------------------------------------------------------------
if __name__ == "__main__":
    app()

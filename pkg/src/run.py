"""Main orchestration module and command-line interface for shotsort."""

import json
import logging
import os
import statistics
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import click
import numpy as np
from pydantic import ValidationError

from .core.probe import STANDARD_PITCH_UM, standard_probe
from .core.recording import GroundTruth, Recording
from .core.rng import Rng
from .dataset.split import select_segment, split_train_test
from .dataset.windows import build_dataset, subsample_few_shot
from .eval.curves import FewShotCurve, GeneralityMatrix, annotation_reduction, fewshot_curve, generality_matrix
from .eval.match import EvalReport, match
from .io_persist.checkpoint_io import load_backbone, load_model, write_checkpoint
from .io_persist.recording_io import read_ground_truth, read_recording, write_ground_truth, write_recording
from .io_persist.run_config_io import load_run_config, with_overrides, write_sidecar
from .io_persist.spikes_io import read_spikes, write_spikes
from .nn.train import PretrainedBackbone, finetune_run, pretrain
from .postproc.filters import SortedOutput
from .postproc.trace import sort_recording
from .render.to_csv import render_curve_csv
from .render.to_table import render_curve_table, render_matrix_table, render_report_table
from .synth.generator import synthesize
from .util.errors import InvalidInputError, SortingError
from .util.hashing import derive_seed
from .util.logging import log_run_stats, setup_logging
from .util.schema import RunConfig

EXIT_VALIDATION = 2
EXIT_IO = 3

DEFAULT_CONFIG = 'config.yaml'

SEGMENTS = ['all', 'train', 'test']
MATRIX_NOISE_UV = [10.0, 20.0, 30.0]
MATRIX_DRIFT_KINDS = ['none', 'slow', 'fast', 'non_rigid']


def parse_n_ft(text: str) -> List[int]:
    """Parse ``"3..37"`` (inclusive range) or ``"3,5,10"``."""
    text = text.strip()
    try:
        if ".." in text:
            start, stop = text.split("..", 1)
            values = list(range(int(start), int(stop) + 1))
        else:
            values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise InvalidInputError(f"Cannot parse n_ft list {text!r}: use 'a..b' or 'a,b,c'") from e
    if not values or min(values) < 1:
        raise InvalidInputError(f"n_ft list {text!r} must be non-empty with values >= 1")
    return values


def order_stats(times: List[float]) -> Dict[str, float]:
    """min, median, p90 and max of wall-clock samples."""
    values = np.sort(np.asarray(times, dtype=np.float64))
    return {
        "min_s": float(values[0]),
        "median_s": float(statistics.median(values.tolist())),
        "p90_s": float(np.percentile(values, 90)),
        "max_s": float(values[-1]),
    }


class SortingPipeline:
    """Workflow orchestrator binding synthesis, training, sorting and evaluation."""

    def __init__(self, config: Optional[RunConfig] = None, threads: Optional[int] = None):
        self.config = config or RunConfig()
        self.threads = threads or os.cpu_count() or 1
        self.logger = logging.getLogger('shotsort')

    @property
    def seed(self) -> int:
        return self.config.train.seed

    # Inputs

    def load_pair(self, rec_path: str, gt_path: Optional[str]) -> Tuple[Recording, Optional[GroundTruth]]:
        rec = read_recording(rec_path)
        gt = read_ground_truth(gt_path) if gt_path else None
        return rec, gt

    def segment_of(self, rec: Recording, gt: Optional[GroundTruth], segment: str,
                   boundary_s: float) -> Tuple[Recording, Optional[GroundTruth]]:
        if segment == "all":
            return rec, gt
        if gt is None:
            gt = GroundTruth.from_pairs([], 0, rec.n_samples)
            cut_rec, _ = select_segment(rec, gt, segment, boundary_s)
            return cut_rec, None
        return select_segment(rec, gt, segment, boundary_s)

    # Steps

    def synth(self, out_prefix: str) -> Tuple[Recording, GroundTruth, List[str]]:
        rec, gt = synthesize(self.config.synth)
        outputs = [f"{out_prefix}.rec", f"{out_prefix}.gt.json"]
        write_recording(outputs[0], rec)
        write_ground_truth(outputs[1], gt)
        counts = {f"neuron {k}": v for k, v in gt.counts().items()}
        log_run_stats(self.logger, counts, title="Spikes per neuron")
        return rec, gt, outputs

    def pretrain(self, rec: Recording, gt: GroundTruth) -> PretrainedBackbone:
        cfg = self.config
        return pretrain(rec, gt, cfg.window, cfg.backbone, cfg.train.train_config())

    def finetune(self, backbone: Optional[PretrainedBackbone], rec: Recording, gt: GroundTruth,
                 n_ft: Optional[int]):
        cfg = self.config
        ds = build_dataset(rec, gt, cfg.window, Rng(derive_seed(self.seed, "dataset")))
        if n_ft is not None:
            ds = subsample_few_shot(ds, n_ft, Rng(derive_seed(self.seed, f"fewshot:{n_ft}")), cfg.train.selection)
        return finetune_run(backbone, ds, cfg.train.train_config(), cfg.backbone)

    def sort(self, model, rec: Recording) -> SortedOutput:
        return sort_recording(model, rec, self.config.postproc, threads=self.threads)

    def evaluate(self, sorted_output: SortedOutput, gt: GroundTruth) -> EvalReport:
        report = match(sorted_output, gt, self.config.eval.match_config())
        log_run_stats(self.logger, {"tp": report.tp, "fp": report.fp, "fn": report.fn,
                                    "accuracy": f"{report.accuracy:.4f}"}, title="Evaluation")
        return report

    def curve(self, backbone: Optional[PretrainedBackbone], rec: Recording, gt: GroundTruth,
              n_ft_list: List[int], boundary_s: float) -> FewShotCurve:
        train, test = split_train_test(rec, gt, boundary_s)
        return fewshot_curve(backbone, train, test, n_ft_list, self.config, threads=self.threads)

    def bench(self, model, rec: Recording, repeat: int) -> Dict[str, float]:
        times = []
        for _ in range(repeat):
            start = time.perf_counter()
            self.sort(model, rec)
            times.append(time.perf_counter() - start)
        stats = order_stats(times)
        stats["repeat"] = repeat
        stats["duration_s"] = rec.duration_s
        log_run_stats(self.logger, stats, title="Sort wall time")
        return stats

    def matrix_conditions(self, axis: str) -> Dict[str, Dict[str, Any]]:
        """Synth overrides per condition of a generality study."""
        if axis == "probe":
            return {kind: {"probe": standard_probe(kind)} for kind in STANDARD_PITCH_UM}
        if axis == "noise":
            return {f"{noise:g}uV": {"noise_uv": noise} for noise in MATRIX_NOISE_UV}
        if axis == "drift":
            return {kind: {"drift": {"kind": kind}} for kind in MATRIX_DRIFT_KINDS}
        raise InvalidInputError(f"Unknown matrix axis {axis!r}")

    def matrix(self, axis: str, n_ft: int, pretrain_neurons: int, boundary_s: float) -> GeneralityMatrix:
        """Pretrain one backbone per condition and finetune each on every condition."""
        conditions = self.matrix_conditions(axis)
        backbones: Dict[str, Optional[PretrainedBackbone]] = {"scratch": None}
        finetune_sets = {}
        for name, overrides in conditions.items():
            base = with_overrides(self.config, {"synth": overrides})
            pretrain_cfg = with_overrides(base, {"synth": {
                "n_neurons": pretrain_neurons,
                "seed": derive_seed(base.synth.seed, f"pretrain:{name}"),
            }})
            rec_pre, gt_pre = synthesize(pretrain_cfg.synth)
            backbones[name] = pretrain(rec_pre, gt_pre, base.window, base.backbone, base.train.train_config())
            rec, gt = synthesize(base.synth)
            finetune_sets[name] = split_train_test(rec, gt, boundary_s)
        return generality_matrix(backbones, finetune_sets, n_ft, self.config, threads=self.threads)


# Command-line interface

def _config_from(ctx: click.Context, overrides: Dict[str, Dict[str, Any]]) -> RunConfig:
    """Flags > config file > defaults."""
    return with_overrides(ctx.obj['config'], overrides)


def _pipeline(ctx: click.Context, config: RunConfig) -> SortingPipeline:
    return SortingPipeline(config, threads=ctx.obj['threads'])


def _seed_overrides(seed: Optional[int]) -> Dict[str, Dict[str, Any]]:
    return {"synth": {"seed": seed}, "train": {"seed": seed}}


def _merge(*parts: Dict[str, Dict[str, Any]]) -> Dict[str, Dict[str, Any]]:
    merged: Dict[str, Dict[str, Any]] = {}
    for part in parts:
        for section, values in part.items():
            merged.setdefault(section, {}).update(values)
    return merged


def _options(ctx: click.Context) -> Dict[str, Any]:
    return {k: v for k, v in ctx.params.items() if isinstance(v, (str, int, float, bool, type(None)))}


class ShotsortGroup(click.Group):
    """Maps toolkit errors to their exit codes."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except SortingError as e:
            click.echo(f"Error: {e}", err=True)
            ctx.exit(e.exit_code)
        except ValidationError as e:
            click.echo(f"Invalid configuration: {e}", err=True)
            ctx.exit(EXIT_VALIDATION)
        except FileNotFoundError as e:
            click.echo(f"File not found: {e.filename or e}", err=True)
            ctx.exit(EXIT_IO)


segment_option = click.option('--segment', type=click.Choice(SEGMENTS), default=None,
                              help='Part of the recording to use (split at --boundary-s)')
boundary_option = click.option('--boundary-s', type=float, default=None,
                               help='Train/test boundary in seconds [default: eval.boundary_s]')
seed_option = click.option('--seed', type=click.IntRange(0, 2**64 - 1), default=None,
                           help='Seed for every random stage')


@click.group(cls=ShotsortGroup)
@click.option('--config', 'config_path', default=DEFAULT_CONFIG, show_default=True, type=click.Path(),
              help='Run config (YAML/JSON) or a .run.json sidecar to reproduce')
@click.option('--threads', type=click.IntRange(min=1), default=None, envvar='FAFESORT_THREADS',
              help='Inference worker threads [default: available cores]')
@click.option('--log-level', default='INFO',
              type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False))
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[str], threads: Optional[int], log_level: str):
    """Few-shot multi-channel spike sorting.

    Exit codes: 0 ok, 1 other toolkit error, 2 invalid input or configuration,
    3 I/O or file format error, 4 training diverged.
    """
    setup_logging(log_level)
    ctx.ensure_object(dict)
    if config_path == DEFAULT_CONFIG and not Path(config_path).exists():
        logging.getLogger('shotsort').warning(f"Config file {config_path} not found, using defaults")
        config_path = None
    ctx.obj['config'] = load_run_config(config_path)
    ctx.obj['threads'] = threads or os.cpu_count() or 1


@cli.command()
@click.option('--out', 'out_prefix', required=True, help='Output prefix: writes <out>.rec and <out>.gt.json')
@click.option('--duration', type=float, default=None, help='Duration in seconds')
@click.option('--neurons', type=int, default=None, help='Number of neurons')
@click.option('--noise', type=float, default=None, help='Noise standard deviation in uV')
@click.option('--drift', type=click.Choice(MATRIX_DRIFT_KINDS), default=None)
@click.option('--probe', type=click.Choice(sorted(STANDARD_PITCH_UM)), default=None)
@click.option('--sample-rate', type=float, default=None, help='Sample rate in Hz')
@click.option('--rate-min', type=float, default=None, help='Lowest firing rate in Hz')
@click.option('--rate-max', type=float, default=None, help='Highest firing rate in Hz')
@seed_option
@click.pass_context
def synth(ctx, out_prefix, duration, neurons, noise, drift, probe, sample_rate, rate_min, rate_max, seed):
    """Generate a synthetic recording and its ground truth."""
    started = time.perf_counter()
    base = ctx.obj['config']
    rates = None
    if rate_min is not None or rate_max is not None:
        low, high = base.synth.firing_rate_range_hz
        rates = (rate_min if rate_min is not None else low, rate_max if rate_max is not None else high)
    synth_overrides = {
        "duration_s": duration, "n_neurons": neurons, "noise_uv": noise, "sample_rate_hz": sample_rate,
        "drift": {"kind": drift} if drift else None,
        "probe": standard_probe(probe) if probe else None,
        "firing_rate_range_hz": rates,
    }
    config = _config_from(ctx, _merge(_seed_overrides(seed), {"synth": synth_overrides}))
    _, gt, outputs = _pipeline(ctx, config).synth(out_prefix)
    for neuron, count in gt.counts().items():
        click.echo(f"neuron {neuron}: {count} spikes")
    write_sidecar(outputs[0], "synth", config, config.synth.seed, outputs=outputs,
                  options=_options(ctx), started=started)


def _train_overrides(epochs, lr, batch_size):
    return {"train": {"epochs": epochs, "learning_rate": lr, "batch_size": batch_size}}


train_options = [
    click.option('--epochs', type=int, default=None),
    click.option('--lr', type=float, default=None, help='Adam learning rate'),
    click.option('--batch-size', type=int, default=None),
]


def _with_train_options(f):
    for option in reversed(train_options):
        f = option(f)
    return f


@cli.command('pretrain')
@click.option('--rec', 'rec_path', required=True, type=click.Path())
@click.option('--gt', 'gt_path', required=True, type=click.Path())
@click.option('--out', required=True, help='Backbone checkpoint (.ckpt)')
@segment_option
@boundary_option
@_with_train_options
@seed_option
@click.pass_context
def pretrain_command(ctx, rec_path, gt_path, out, segment, boundary_s, epochs, lr, batch_size, seed):
    """Pretrain a backbone on a neuron-rich recording."""
    started = time.perf_counter()
    config = _config_from(ctx, _merge(_seed_overrides(seed), _train_overrides(epochs, lr, batch_size),
                                      {"eval": {"boundary_s": boundary_s}}))
    pipeline = _pipeline(ctx, config)
    rec, gt = pipeline.segment_of(*pipeline.load_pair(rec_path, gt_path), segment or "train",
                                  config.eval.boundary_s)
    backbone = pipeline.pretrain(rec, gt)
    write_checkpoint(out, backbone)
    click.echo(f"final pretraining loss: {backbone.epoch_losses[-1]:.6f}")
    write_sidecar(out, "pretrain", config, config.train.seed, inputs={"rec": rec_path, "gt": gt_path},
                  options=_options(ctx), started=started)


@cli.command('finetune')
@click.option('--backbone', 'backbone_path', default=None, type=click.Path(),
              help='Pretrained checkpoint; omit to train from scratch')
@click.option('--rec', 'rec_path', required=True, type=click.Path())
@click.option('--gt', 'gt_path', required=True, type=click.Path())
@click.option('--n-ft', type=click.IntRange(min=1), default=None,
              help='Annotated spikes per neuron [default: train.n_ft, else all]')
@click.option('--selection', type=click.Choice(['random', 'earliest']), default=None)
@click.option('--out', required=True, help='Model checkpoint (.ckpt)')
@segment_option
@boundary_option
@_with_train_options
@seed_option
@click.pass_context
def finetune_command(ctx, backbone_path, rec_path, gt_path, n_ft, selection, out, segment, boundary_s,
                     epochs, lr, batch_size, seed):
    """Finetune a pretrained backbone (or train from scratch) on few annotated spikes."""
    started = time.perf_counter()
    overrides = _merge(_seed_overrides(seed), _train_overrides(epochs, lr, batch_size),
                       {"train": {"n_ft": n_ft, "selection": selection}, "eval": {"boundary_s": boundary_s}})
    config = _config_from(ctx, overrides)
    pipeline = _pipeline(ctx, config)
    rec, gt = pipeline.segment_of(*pipeline.load_pair(rec_path, gt_path), segment or "train",
                                  config.eval.boundary_s)
    backbone = load_backbone(backbone_path) if backbone_path else None
    result = pipeline.finetune(backbone, rec, gt, config.train.n_ft)
    write_checkpoint(out, result.model)
    click.echo(f"final training loss: {result.epoch_losses[-1]:.6f}")
    inputs = {"rec": rec_path, "gt": gt_path}
    if backbone_path:
        inputs["backbone"] = backbone_path
    write_sidecar(out, "finetune", config, config.train.seed, inputs=inputs,
                  options=_options(ctx), started=started)


@cli.command('sort')
@click.option('--model', 'model_path', required=True, type=click.Path())
@click.option('--rec', 'rec_path', required=True, type=click.Path())
@click.option('--out', required=True, help='Sorted spikes (.spikes.json)')
@click.option('--threshold', type=float, default=None)
@click.option('--half-width', type=int, default=None, help='Triangle filter half width h')
@segment_option
@boundary_option
@click.pass_context
def sort_command(ctx, model_path, rec_path, out, threshold, half_width, segment, boundary_s):
    """Sort a recording with a trained model."""
    started = time.perf_counter()
    config = _config_from(ctx, {"postproc": {"threshold": threshold, "triangle_half_width": half_width},
                                "eval": {"boundary_s": boundary_s}})
    pipeline = _pipeline(ctx, config)
    rec, _ = pipeline.segment_of(read_recording(rec_path), None, segment or "test", config.eval.boundary_s)
    sorted_output = pipeline.sort(load_model(model_path), rec)
    write_spikes(out, sorted_output)
    click.echo(f"{len(sorted_output)} spikes written to {out}")
    write_sidecar(out, "sort", config, config.train.seed, inputs={"model": model_path, "rec": rec_path},
                  options=_options(ctx), started=started)


@cli.command('eval')
@click.option('--spikes', 'spikes_path', required=True, type=click.Path())
@click.option('--gt', 'gt_path', required=True, type=click.Path())
@click.option('--tolerance', type=int, default=None, help='Matching tolerance in samples')
@click.option('--sample-rate', type=float, default=None,
              help='Sample rate used to place the boundary [default: synth.sample_rate_hz]')
@click.option('--out', default=None, help='Optional JSON report')
@segment_option
@boundary_option
@click.pass_context
def eval_command(ctx, spikes_path, gt_path, tolerance, sample_rate, out, segment, boundary_s):
    """Score sorted spikes against ground truth."""
    started = time.perf_counter()
    config = _config_from(ctx, {"eval": {"tolerance_samples": tolerance, "boundary_s": boundary_s}})
    pipeline = _pipeline(ctx, config)
    sorted_output = read_spikes(spikes_path)
    gt = read_ground_truth(gt_path)
    segment = segment or "test"
    if segment != "all":
        rate = sample_rate or config.synth.sample_rate_hz
        boundary = int(round(config.eval.boundary_s * rate))
        if gt.n_samples >= 0 and not 0 < boundary < gt.n_samples:
            raise InvalidInputError(f"Boundary sample {boundary} lies outside the ground truth's {gt.n_samples} samples")
        end = gt.n_samples if gt.n_samples >= 0 else int(gt.sample_indices.max(initial=boundary)) + 1
        gt = gt.segment(0, boundary) if segment == "train" else gt.segment(boundary, end)
    report = pipeline.evaluate(sorted_output, gt)
    click.echo(render_report_table(report))
    click.echo(f"accuracy: {report.accuracy:.4f}")
    if out:
        Path(out).write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
        write_sidecar(out, "eval", config, config.train.seed, inputs={"spikes": spikes_path, "gt": gt_path},
                      options=_options(ctx), started=started)


@cli.command('curve')
@click.option('--rec', 'rec_path', required=True, type=click.Path())
@click.option('--gt', 'gt_path', required=True, type=click.Path())
@click.option('--backbone', 'backbone_path', default=None, type=click.Path(),
              help='Pretrained checkpoint; omit for the scratch arm')
@click.option('--with-scratch', is_flag=True, help='Also run the scratch arm and report the annotation reduction')
@click.option('--n-ft', 'n_ft_text', default=None, help="'3..37' or '3,5,10' [default: eval.n_ft_list]")
@click.option('--out', required=True, help='CSV with n_ft,accuracy rows')
@boundary_option
@_with_train_options
@seed_option
@click.pass_context
def curve_command(ctx, rec_path, gt_path, backbone_path, with_scratch, n_ft_text, out, boundary_s,
                  epochs, lr, batch_size, seed):
    """Accuracy versus annotated spikes per neuron (train on the first segment, score the second)."""
    started = time.perf_counter()
    n_ft_list = parse_n_ft(n_ft_text) if n_ft_text else None
    config = _config_from(ctx, _merge(_seed_overrides(seed), _train_overrides(epochs, lr, batch_size),
                                      {"eval": {"boundary_s": boundary_s, "n_ft_list": n_ft_list}}))
    pipeline = _pipeline(ctx, config)
    rec, gt = pipeline.load_pair(rec_path, gt_path)
    backbone = load_backbone(backbone_path) if backbone_path else None
    curve = pipeline.curve(backbone, rec, gt, config.eval.n_ft_list, config.eval.boundary_s)
    Path(out).write_text(render_curve_csv(curve), encoding="utf-8")
    curves = [curve]
    outputs = [out]
    if with_scratch and backbone is not None:
        scratch = pipeline.curve(None, rec, gt, config.eval.n_ft_list, config.eval.boundary_s)
        scratch_out = f"{Path(out).with_suffix('')}.scratch.csv"
        Path(scratch_out).write_text(render_curve_csv(scratch), encoding="utf-8")
        outputs.append(scratch_out)
        curves.append(scratch)
        reduction = annotation_reduction(scratch, curve)
        click.echo(f"annotation reduction: {reduction:.2f}x" if reduction else "annotation reduction: not reached")
    click.echo(render_curve_table(curves))
    inputs = {"rec": rec_path, "gt": gt_path}
    if backbone_path:
        inputs["backbone"] = backbone_path
    write_sidecar(out, "curve", config, config.train.seed, inputs=inputs, outputs=outputs,
                  options=_options(ctx), started=started)


@cli.command('bench')
@click.option('--model', 'model_path', required=True, type=click.Path())
@click.option('--rec', 'rec_path', required=True, type=click.Path())
@click.option('--repeat', type=click.IntRange(min=1), default=5)
@click.option('--out', default=None, help='Optional JSON with the timing statistics')
@segment_option
@boundary_option
@click.pass_context
def bench_command(ctx, model_path, rec_path, repeat, out, segment, boundary_s):
    """Time sort (inference and post-processing) over repeated runs."""
    started = time.perf_counter()
    config = _config_from(ctx, {"eval": {"boundary_s": boundary_s}})
    pipeline = _pipeline(ctx, config)
    rec, _ = pipeline.segment_of(read_recording(rec_path), None, segment or "test", config.eval.boundary_s)
    stats = pipeline.bench(load_model(model_path), rec, repeat)
    for key in ("min_s", "median_s", "p90_s", "max_s"):
        click.echo(f"{key}: {stats[key]:.4f}")
    if out:
        Path(out).write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        write_sidecar(out, "bench", config, config.train.seed, inputs={"model": model_path, "rec": rec_path},
                      options=_options(ctx), started=started)


@cli.command('matrix')
@click.option('--axis', type=click.Choice(['probe', 'noise', 'drift']), required=True)
@click.option('--n-ft', type=click.IntRange(min=1), default=15)
@click.option('--pretrain-neurons', type=click.IntRange(min=2), default=30)
@click.option('--out', default=None, help='Optional JSON with the accuracy matrix')
@boundary_option
@_with_train_options
@seed_option
@click.pass_context
def matrix_command(ctx, axis, n_ft, pretrain_neurons, out, boundary_s, epochs, lr, batch_size, seed):
    """Generality study: pretrain per condition, finetune and score on every condition."""
    started = time.perf_counter()
    config = _config_from(ctx, _merge(_seed_overrides(seed), _train_overrides(epochs, lr, batch_size),
                                      {"eval": {"boundary_s": boundary_s}}))
    result = _pipeline(ctx, config).matrix(axis, n_ft, pretrain_neurons, config.eval.boundary_s)
    click.echo(render_matrix_table(result))
    if out:
        Path(out).write_text(result.model_dump_json(indent=2) + "\n", encoding="utf-8")
        write_sidecar(out, "matrix", config, config.train.seed, options=_options(ctx), started=started)


def main():
    cli(obj={})


if __name__ == '__main__':
    main()

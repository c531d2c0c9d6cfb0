"""Count metrics and the runnable experiments.

Experiments:

* ``idealized``: periodogram vs wavelet counting on sinusoids drawn through
  cycle annotations, optionally with Gaussian noise.
* ``cases``: the flow pipeline with min-cost signal selection on a synthetic
  case corpus.
* ``acceleration``: the same items before and after dropping every second
  sample from the midpoint on.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .annotation import VideoAnnotation
from .config import RunConfig, worker_count
from .errors import CorpusFormat, LengthMismatch, ZeroTruth
from .estimate import analyze_signal, select_signal
from .flowfield import CHANNELS, extract_signals, load_sequence
from .synth import accelerate_halfway, add_noise, idealized_signal
from .tfa import Signal, periodogram_count

# published QUVA Repetition dataset statistics that the synthetic corpus mimics
QUVA_MEAN_VARIATION = 0.36
QUVA_COUNT_RANGE = (4, 63)
QUVA_COUNT_MEAN = 12.5
QUVA_COUNT_STD = 10.4
QUVA_DURATION_MEAN = 17.6


@dataclass(frozen=True)
class ItemResult:
    id: str
    truth: float
    prediction: float

    @property
    def abs_rel_error(self) -> float:
        return abs(self.prediction - self.truth) / self.truth


@dataclass(frozen=True)
class EvalReport:
    per_item: tuple[ItemResult, ...]
    mae: float
    mae_std: float
    oboa: float
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_items(cls, items: Iterable[ItemResult], **extra) -> EvalReport:
        items = tuple(items)
        preds = [it.prediction for it in items]
        truths = [it.truth for it in items]
        mean, std = mae(preds, truths)
        return cls(items, mean, std, oboa(preds, truths), dict(extra))

    def to_dict(self) -> dict:
        out = {
            "mae": self.mae,
            "mae_std": self.mae_std,
            "oboa": self.oboa,
            "per_item": [
                {
                    "id": it.id,
                    "truth": it.truth,
                    "prediction": it.prediction,
                    "abs_rel_error": it.abs_rel_error,
                }
                for it in self.per_item
            ],
        }
        out.update(self.extra)
        return out


def _check_lengths(preds, truths):
    if len(preds) != len(truths):
        raise LengthMismatch(f"{len(preds)} predictions for {len(truths)} truths")
    if len(preds) == 0:
        raise LengthMismatch("no items to evaluate")


def mae(preds: Sequence[float], truths: Sequence[float]) -> tuple[float, float]:
    """Mean and population std of ``|pred - truth| / truth`` (fractions, not percent)."""
    _check_lengths(preds, truths)
    truths = np.asarray(truths, dtype=float)
    if np.any(truths <= 0):
        raise ZeroTruth("truth counts must be positive")
    err = np.abs(np.asarray(preds, dtype=float) - truths) / truths
    return float(err.mean()), float(err.std())


def oboa(preds: Sequence[float], truths: Sequence[float]) -> float:
    """Fraction of items whose count is within one of the truth."""
    _check_lengths(preds, truths)
    diff = np.abs(np.asarray(preds, dtype=float) - np.asarray(truths, dtype=float))
    return float(np.mean(diff <= 1.0))


def _parallel_map(fn: Callable, items: Sequence) -> list:
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


# -- synthetic annotations ---------------------------------------------------

def _cycle_profile(rng: np.random.Generator, count: int) -> np.ndarray:
    """Zero-mean relative cycle-length profile with unit (max - min) spread."""
    u = np.linspace(0.0, 1.0, count)
    kind = rng.integers(3)
    if kind == 0:  # steady acceleration or deceleration
        shape = u
    elif kind == 1:  # speeds up then settles, or the reverse
        shape = np.sqrt(u)
    else:  # tempo change in the middle of the video
        shape = 1.0 / (1.0 + np.exp(-(u - rng.uniform(0.3, 0.7)) * 12.0))
    if rng.random() < 0.5:
        shape = -shape
    shape = shape + rng.normal(0.0, 0.05, count)
    shape -= shape.mean()
    return shape / np.ptp(shape)


def synthetic_annotations(
    n: int,
    seed: int = 0,
    mean_variation: float = QUVA_MEAN_VARIATION,
    fps: float = 30.0,
) -> list[VideoAnnotation]:
    """Cycle-bound annotations with count and cycle-length statistics like QUVA.

    Counts are drawn from a clipped log-normal (4 to 63), mean cycle length
    from the typical duration, and each video's cycle lengths follow a drifting
    tempo whose (max - min) / mean spread averages ``mean_variation``.
    """
    rng = np.random.default_rng(seed)
    sigma = math.sqrt(math.log(1 + (QUVA_COUNT_STD / QUVA_COUNT_MEAN) ** 2))
    mu = math.log(QUVA_COUNT_MEAN) - sigma**2 / 2
    counts = np.clip(np.rint(rng.lognormal(mu, sigma, n)), *QUVA_COUNT_RANGE).astype(int)
    variations = rng.uniform(0.0, 2.0, n)
    variations *= mean_variation / variations.mean() if n and variations.mean() > 0 else 0.0
    variations = np.minimum(variations, 1.2)
    annotations = []
    for i, (count, variation) in enumerate(zip(counts, variations)):
        duration = rng.uniform(0.5, 1.5) * QUVA_DURATION_MEAN
        mean_len = max(duration * fps / count, 8.0)
        lengths = mean_len * (1.0 + variation * _cycle_profile(rng, count))
        bounds = np.concatenate(([0.0], np.cumsum(np.maximum(lengths, 4.0))))
        bounds = np.rint(bounds).astype(int)
        annotations.append(VideoAnnotation(f"synthetic_{i:03d}", fps, tuple(bounds.tolist())))
    return annotations


def mean_cycle_length_variation(annotations: Sequence[VideoAnnotation]) -> float:
    return float(np.mean([a.cycle_length_variation for a in annotations]))


# -- idealized signals: Fourier vs wavelets -------------------------------

def wavelet_count(signal: Signal, config: RunConfig = RunConfig()) -> float:
    return analyze_signal(signal, config).count


def run_idealized_experiment(
    annotations: Sequence[VideoAnnotation],
    noise_sigma: float = 0.0,
    seed: int = 0,
    config: RunConfig = RunConfig(),
) -> tuple[EvalReport, EvalReport]:
    """Count each idealized signal with the periodogram and with the wavelet pipeline."""
    if len(annotations) == 0:
        raise ValueError("need at least one annotation")

    def one(indexed):
        i, ann = indexed
        signal = add_noise(idealized_signal(ann), noise_sigma, seed=[seed, i])
        return (
            ItemResult(ann.id, ann.count, periodogram_count(signal, config.min_reps)),
            ItemResult(ann.id, ann.count, wavelet_count(signal, config)),
        )

    pairs = _parallel_map(one, list(enumerate(annotations)))
    fourier = [p[0] for p in pairs]
    wavelet = [p[1] for p in pairs]
    wins = sum(w.abs_rel_error < f.abs_rel_error for f, w in zip(fourier, wavelet))
    losses = sum(w.abs_rel_error > f.abs_rel_error for f, w in zip(fourier, wavelet))
    tally = {"wavelet_wins": wins, "fourier_wins": losses, "ties": len(pairs) - wins - losses}
    meta = {
        "noise_sigma": noise_sigma,
        "mean_cycle_length_variation": mean_cycle_length_variation(annotations),
    }
    return (
        EvalReport.from_items(fourier, method="fourier", tally=tally, **meta),
        EvalReport.from_items(wavelet, method="wavelet", tally=tally, **meta),
    )


# -- corpora on disk ---------------------------------------------------------

@dataclass
class CorpusItem:
    id: str
    path: Path
    truth: float
    fps: float
    case: str | None
    annotation: VideoAnnotation | None
    has_frames: bool


def read_corpus(corpus_dir) -> list[CorpusItem]:
    """Items are subdirectories holding ``truth.json`` (and optionally ``.flo`` frames).

    A corpus directory may also be a single item itself.
    """
    root = Path(corpus_dir)
    if not root.is_dir():
        raise CorpusFormat(f"{root}: not a directory")
    dirs = [root] if (root / "truth.json").is_file() else sorted(p for p in root.iterdir() if p.is_dir())
    items = []
    for d in dirs:
        truth_path = d / "truth.json"
        if not truth_path.is_file():
            raise CorpusFormat(f"{d}: missing truth.json")
        try:
            record = json.loads(truth_path.read_text())
            ann = VideoAnnotation.from_dict(record)
        except (ValueError, TypeError) as exc:
            raise CorpusFormat(f"{truth_path}: {exc}") from exc
        truth = float(record.get("truth_count", ann.count))
        items.append(
            CorpusItem(
                id=d.name,
                path=d,
                truth=truth,
                fps=float(ann.fps),
                case=record.get("case"),
                annotation=ann,
                has_frames=any(d.glob("*.flo")),
            )
        )
    if not items:
        raise CorpusFormat(f"{root}: no corpus items found")
    return items


def write_annotation_corpus(annotations: Sequence[VideoAnnotation], out_dir) -> Path:
    """One subdirectory per annotation holding only ``truth.json``."""
    out = Path(out_dir)
    for ann in annotations:
        item = out / ann.id
        item.mkdir(parents=True, exist_ok=True)
        record = ann.to_dict()
        record["truth_count"] = ann.count
        (item / "truth.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    return out


def _item_bundle(item: CorpusItem, accelerate: bool, config: RunConfig):
    frames, _ = load_sequence(item.path, item.path)
    if accelerate:
        frames = accelerate_halfway(frames)
    return extract_signals(frames, item.fps, config.kernel_size, config.kernel_sigma)


def run_case_benchmark(corpus_dir, config: RunConfig = RunConfig()) -> EvalReport:
    """Min-cost selection on every flow sequence of a synthetic case corpus."""
    items = [it for it in read_corpus(corpus_dir) if it.has_frames]
    if not items:
        raise CorpusFormat(f"{corpus_dir}: no flow sequences in corpus")

    def one(item):
        est = select_signal(_item_bundle(item, False, config), config)
        return item, est

    results = _parallel_map(one, items)
    per_case = {}
    histogram = Counter({name: 0 for name in CHANNELS})
    for item, est in results:
        histogram[est.channel] += 1
        per_case[item.id] = {
            "case": item.case,
            "truth": item.truth,
            "prediction": est.count,
            "channel": est.channel,
            "cost": est.cost,
            "within_one": abs(est.count - item.truth) <= 1.0,
        }
    report = EvalReport.from_items(
        (ItemResult(item.id, item.truth, est.count) for item, est in results),
        experiment="cases",
        per_case=per_case,
        selected_histogram={name: histogram[name] for name in CHANNELS},
    )
    return report


def run_acceleration_experiment(corpus_dir, config: RunConfig = RunConfig()) -> dict:
    """Wavelet and periodogram MAE before and after halfway acceleration.

    Flow sequences run through min-cost selection; the periodogram baseline
    counts on the channel chosen there. Annotation-only items use their
    idealized signal.
    """
    items = read_corpus(corpus_dir)

    def signal_of(item, accelerate):
        if item.has_frames:
            bundle = _item_bundle(item, accelerate, config)
            est = select_signal(bundle, config)
            sig = Signal(bundle.channels[est.channel], bundle.dt)
            return est.count, sig
        sig = idealized_signal(item.annotation)
        if accelerate:
            sig = accelerate_halfway(sig)
        return wavelet_count(sig, config), sig

    def one(item):
        out = {}
        for label, acc in (("original", False), ("accelerated", True)):
            count, sig = signal_of(item, acc)
            out[label] = (count, periodogram_count(sig, config.min_reps))
        return item, out

    results = _parallel_map(one, items)
    reports = {}
    for label in ("original", "accelerated"):
        for k, method in enumerate(("wavelet", "fourier")):
            reports[f"{method}_{label}"] = EvalReport.from_items(
                ItemResult(item.id, item.truth, out[label][k]) for item, out in results
            )
    return {
        "experiment": "acceleration",
        "reports": reports,
        "wavelet_degradation": reports["wavelet_accelerated"].mae - reports["wavelet_original"].mae,
        "fourier_degradation": reports["fourier_accelerated"].mae - reports["fourier_original"].mae,
    }


# -- formatting --------------------------------------------------------------

def format_table(rows: Sequence[Sequence], header: Sequence[str]) -> str:
    cells = [[str(h) for h in header]] + [[_cell(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths))) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.3f}"
    return str(v)


def summary_row(name: str, report: EvalReport) -> list:
    return [name, f"{100 * report.mae:.1f} ± {100 * report.mae_std:.1f}", f"{report.oboa:.2f}", len(report.per_item)]

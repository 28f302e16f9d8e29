"""Render the standard result figures from experiment CSVs.

Two figure kinds:

- trace: max retained posterior per normalization mode against the step
  index. Before plotting, the ordering the inference engine guarantees
  (bound <= exact <= naive wherever the modes coexist) is re-checked from
  the CSV values, so a corrupt or mislabeled file fails loudly instead of
  rendering a misleading figure.
- runtime_sweep: mean normalization wall time against problem size per
  mode, with a log-scaled time axis.

Each input CSV becomes one panel of the output image. Rendering only reads
the inputs; re-running a spec rewrites the same image.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

KINDS = ("trace", "runtime_sweep")
TRACE_REQUIRED = ("step", "mode", "max_prob")
SWEEP_REQUIRED = ("axis", "size", "mode", "mean_wall_ns")

# fixed plotting order so colors and legends are stable across runs; the
# middle two are the exact normalizers that must sit between naive and bound
MODE_ORDER = ("naive", "exact_independent", "oracle", "bound")
ORDERING_PAIRS = (
    ("bound", "exact_independent"),
    ("bound", "oracle"),
    ("exact_independent", "naive"),
    ("oracle", "naive"),
    ("bound", "naive"),
)


class FigureError(Exception):
    """Base class for figure-rendering failures."""


class MissingColumn(FigureError):
    """A required CSV column is absent."""


class EmptyInput(FigureError):
    """The CSV has a header but no data rows."""


class InconsistentTrace(FigureError):
    """Trace values violate the guaranteed bound <= exact <= naive order."""


@dataclass(frozen=True)
class FigureSpec:
    """One output image rendered from one or more CSVs of the same kind."""

    inputs: tuple[str, ...]
    kind: str
    out_path: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; choices: {', '.join(KINDS)}")


def _read_rows(path: str, required: tuple[str, ...]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise EmptyInput(f"{path}: no data rows")
    return rows


def _ordered_modes(series: dict) -> list[str]:
    known = [m for m in MODE_ORDER if m in series]
    return known + sorted(set(series) - set(known))


def _trace_series(rows: list[dict]) -> dict[str, dict[int, float]]:
    series: dict[str, dict[int, float]] = {}
    for row in rows:
        series.setdefault(row["mode"], {})[int(row["step"])] = float(row["max_prob"])
    return series


def _check_trace_ordering(series: dict[str, dict[int, float]], path: str) -> None:
    for low, high in ORDERING_PAIRS:
        if low not in series or high not in series:
            continue
        for step in sorted(set(series[low]) & set(series[high])):
            if series[low][step] > series[high][step]:
                raise InconsistentTrace(
                    f"{path}: {low} max_prob {series[low][step]!r} exceeds "
                    f"{high} {series[high][step]!r} at step {step}"
                )


def _plot_trace(ax, rows: list[dict], path: str) -> None:
    series = _trace_series(rows)
    _check_trace_ordering(series, path)
    for mode in _ordered_modes(series):
        steps = sorted(series[mode])
        ax.plot(steps, [series[mode][s] for s in steps], marker="o",
                markersize=3, label=mode)
    ax.set_xlabel("step")
    ax.set_ylabel("max retained posterior")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title(Path(path).stem)
    ax.legend()


def _plot_sweep(ax, rows: list[dict], path: str) -> None:
    series: dict[str, dict[int, float]] = {}
    axes_seen = set()
    for row in rows:
        axes_seen.add(row["axis"])
        series.setdefault(row["mode"], {})[int(row["size"])] = float(row["mean_wall_ns"])
    for mode in _ordered_modes(series):
        sizes = sorted(series[mode])
        ax.plot(sizes, [series[mode][s] for s in sizes], marker="o",
                markersize=3, label=mode)
    ax.set_yscale("log")
    ax.set_xlabel(f"problem size ({', '.join(sorted(axes_seen))})")
    ax.set_ylabel("mean wall time (ns)")
    ax.set_title(Path(path).stem)
    ax.legend()


def render(spec: FigureSpec) -> str:
    """Render the spec to its output image; returns the output path."""
    required = TRACE_REQUIRED if spec.kind == "trace" else SWEEP_REQUIRED
    per_input = [(path, _read_rows(path, required)) for path in spec.inputs]
    fig, axes = plt.subplots(
        1, len(per_input), figsize=(6 * len(per_input), 4), squeeze=False
    )
    try:
        for ax, (path, rows) in zip(axes[0], per_input):
            if spec.kind == "trace":
                _plot_trace(ax, rows, path)
            else:
                _plot_sweep(ax, rows, path)
        fig.tight_layout()
        fig.savefig(spec.out_path)
    finally:
        plt.close(fig)
    return spec.out_path

"""Plot metrics from one or more run directories.

    python -m evostrat.plot -p runs/es-sphere-seed0 runs/adames-sphere-seed0 \\
        --metric divergence --legend ES AdamES --window 20 --log-y

Alongside every figure a ``<save-path>.csv`` sidecar holds the smoothed
series exactly as plotted.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from evostrat.metrics import METRICS_FILE, read_metrics, series

# plot metric -> (section, record name)
METRIC_RECORDS = {
    "reward": ("reward", "reward"),
    "divergence": ("metrics", "divergence"),
    "entropy": ("metrics", "entropy"),
    "actor_loss": ("loss", "actor_loss"),
    "critic_loss": ("loss", "critic_loss"),
}


class PlotError(Exception):
    pass


@dataclass
class PlotRequest:
    paths: list
    metric: str = "reward"
    titles: list | None = None
    num_cols: int = 1
    legend: list | None = None
    window: int = 1
    log_y: bool = False
    save_path: str = "plot"
    save_types: tuple = ("pdf",)

    def __post_init__(self):
        if not self.paths:
            raise ValueError("at least one run directory is required")
        if self.metric not in METRIC_RECORDS:
            raise ValueError(f"metric must be one of {sorted(METRIC_RECORDS)}, got {self.metric!r}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.num_cols < 1:
            raise ValueError(f"num-cols must be >= 1, got {self.num_cols}")
        if self.legend and len(self.legend) != len(self.paths):
            raise ValueError(f"got {len(self.legend)} legend labels for {len(self.paths)} runs")
        titles = self.titles or [self.metric]
        if len(self.paths) % len(titles):
            raise ValueError(f"{len(self.paths)} runs cannot be split evenly over {len(titles)} panels")


def moving_average(values, window: int) -> np.ndarray:
    """Trailing mean over ``window`` points; the first points average the available prefix."""
    values = np.asarray(values, dtype=np.float64)
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    # explicit window sums; cumulative-sum differencing drifts on long runs
    return np.array([values[max(i + 1 - window, 0) : i + 1].mean() for i in range(values.shape[0])])


def load_runs(request: PlotRequest) -> list[tuple[str, np.ndarray, np.ndarray] | None]:
    section, name = METRIC_RECORDS[request.metric]
    runs = []
    for path in request.paths:
        path = Path(path)
        if not (path / METRICS_FILE).is_file():
            raise PlotError(f"no {METRICS_FILE} in run directory {path}")
        steps, values = series(read_metrics(path), name, section)
        runs.append((str(path), steps, values) if len(values) else None)
    if all(r is None for r in runs):
        raise PlotError(f"metric {request.metric!r} absent from every run: {', '.join(map(str, request.paths))}")
    return runs


def plot(request: PlotRequest) -> list[Path]:
    """Render the figure and CSV sidecar; returns the written paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    runs = load_runs(request)
    titles = request.titles or [request.metric]
    labels = request.legend or [Path(p).name for p in request.paths]
    per_panel = len(request.paths) // len(titles)
    num_cols = min(request.num_cols, len(titles))
    num_rows = math.ceil(len(titles) / num_cols)
    fig, axes = plt.subplots(num_rows, num_cols, figsize=(5 * num_cols, 3.5 * num_rows), squeeze=False)

    rows = []
    for i, run in enumerate(runs):
        panel = i // per_panel
        ax = axes[panel // num_cols][panel % num_cols]
        if run is None:
            print(f"warning: metric {request.metric!r} absent from {request.paths[i]}", file=sys.stderr)
            continue
        path, steps, values = run
        smoothed = moving_average(values, request.window)
        ax.plot(steps, smoothed, label=labels[i])
        for step, value in zip(steps, smoothed):
            rows.append((titles[panel], labels[i], path, int(step), repr(float(value))))
    for panel, title in enumerate(titles):
        ax = axes[panel // num_cols][panel % num_cols]
        ax.set_title(title)
        ax.set_xlabel("iteration")
        ax.set_ylabel(request.metric)
        if request.log_y:
            ax.set_yscale("log")
        if ax.get_legend_handles_labels()[0]:
            ax.legend()
    for empty in range(len(titles), num_rows * num_cols):
        axes[empty // num_cols][empty % num_cols].set_visible(False)
    fig.tight_layout()

    save_path = Path(request.save_path)
    save_path.parent.mkdir(parents=True, exist_ok=True)
    written = []
    for ext in request.save_types:
        out = save_path.with_name(f"{save_path.name}.{ext.lstrip('.')}")
        fig.savefig(out)
        written.append(out)
    plt.close(fig)

    sidecar = save_path.with_name(f"{save_path.name}.csv")
    with open(sidecar, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["title", "label", "path", "step", "value"])
        writer.writerows(rows)
    written.append(sidecar)
    return written


def add_plot_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-p", "--paths", nargs="+", required=True, help="run directories")
    parser.add_argument("--metric", default="reward", choices=sorted(METRIC_RECORDS))
    parser.add_argument("--titles", nargs="+", help="one panel per title; runs are split evenly in order")
    parser.add_argument("--num-cols", type=int, default=1)
    parser.add_argument("--legend", nargs="+")
    parser.add_argument("--window", type=int, default=1, help="trailing moving-average length")
    parser.add_argument("--log-y", action="store_true")
    parser.add_argument("--save-path", default="plot")
    parser.add_argument("--save-types", nargs="+", default=["pdf"])


def request_from_args(args: argparse.Namespace) -> PlotRequest:
    return PlotRequest(
        paths=args.paths,
        metric=args.metric,
        titles=args.titles,
        num_cols=args.num_cols,
        legend=args.legend,
        window=args.window,
        log_y=args.log_y,
        save_path=args.save_path,
        save_types=tuple(args.save_types),
    )


def run_plot(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        request = request_from_args(args)
    except ValueError as exc:
        parser.error(str(exc))
    try:
        written = plot(request)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="evostrat.plot", description="Plot metrics from run directories.")
    add_plot_arguments(parser)
    args = parser.parse_args(argv)
    return run_plot(args, parser)


if __name__ == "__main__":
    raise SystemExit(main())

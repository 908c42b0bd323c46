"""Event-driven experiment harness: batch compression versus online updates."""

from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .codec import (
    PacketConfig,
    compress_batch,
    compression_ratio,
    online_volume,
    prediction_hits,
    raw_volume,
)
from .mining import group_model, mine_groups
from .world import ScenarioConfig, SensorGrid, simulate_group

CSV_FIELDS = [
    "scenario", "gdr", "n", "D", "eps", "raw_bytes", "batch_bytes",
    "online_bytes", "online_pred_bytes", "ratio",
]
COMPARISON_FIELDS = [
    "scenario", "gdr", "n", "D", "eps", "hit_rate", "ratio_replace", "ratio_huffman",
]


@dataclass(frozen=True)
class ExperimentSpec:
    """Cartesian sweep; each point is run ``repetitions`` times with seeds
    ``seed_base .. seed_base + repetitions - 1`` (paired across points)."""

    gdrs: Sequence[float] = (0.1, 0.25, 0.5, 0.75, 1.0)
    group_sizes: Sequence[int] = (1, 2, 4, 8, 16)
    batch_periods: Sequence[int] = (50, 100, 200)
    error_bounds: Sequence[int] = (0,)
    repetitions: int = 5
    seed_base: int = 0
    # history the group predictor is learned from, preceding the batch
    train_intervals: int = 200
    mine: bool = False
    grid: SensorGrid = SensorGrid()
    packet: PacketConfig = PacketConfig()

    def points(self) -> list[tuple[float, int, int, int]]:
        return list(itertools.product(self.gdrs, self.group_sizes, self.batch_periods, self.error_bounds))

    def scenario(self, gdr: float, n: int, D: int, eps: int, rep: int) -> ScenarioConfig:
        return ScenarioConfig(group_size=n, gdr=gdr, batch_period=D, error_bound=eps, seed=self.seed_base + rep)


@dataclass
class MetricRow:
    scenario: str
    gdr: float
    n: int
    D: int
    eps: int
    raw_bytes: float
    batch_bytes: float
    online_bytes: float
    online_pred_bytes: float
    ratio: float
    huffman_bytes: float = 0.0
    # batch bytes plus the Huffman tables, for when tables are transmitted
    batch_table_bytes: float = 0.0
    hit_rate: float = 0.0
    ratio_replace: float = 0.0
    ratio_huffman: float = 0.0
    batch_bytes_std: float = 0.0
    ratio_std: float = 0.0
    repetitions: int = 1

    @property
    def bytes_per_object(self) -> float:
        return self.batch_bytes / self.n

    @property
    def ratio_online_pred(self) -> float:
        return compression_ratio(self.raw_bytes, self.online_pred_bytes) if self.online_pred_bytes else math.inf


def run_point(spec: ExperimentSpec, gdr: float, n: int, D: int, eps: int, rep: int) -> dict:
    """One simulate -> model -> segment -> merge -> replace -> pack run."""
    config = spec.scenario(gdr, n, D, eps, rep)
    grid = spec.grid
    full = simulate_group(config, grid, n_intervals=spec.train_intervals + D)
    history = [s.window(0, spec.train_intervals) for s in full]
    batch = [s.window(spec.train_intervals, spec.train_intervals + D) for s in full]

    if spec.mine and n > 1:
        mined = mine_groups(history, grid)
        groups = dict(mined.grouping.partition)
        # a single shared predictor per packet: the leader's group
        predictor = mined.models[groups[0]]
    else:
        groups = {s.object_id: 0 for s in batch}
        predictor = group_model(history, range(grid.size))

    packed = compress_batch(batch, grid, predictor, groups, eps, spec.packet)
    plain = compress_batch(batch, grid, predictor, groups, eps, spec.packet, use_replace=False)
    raw = raw_volume(batch, spec.packet)
    location_bits = sum(len(s) for s in batch) * spec.packet.location_bits
    hits = sum(prediction_hits(s.symbols, predictor) for s in batch)
    return {
        "raw_bytes": raw,
        "batch_bytes": packed.packet_bytes,
        "huffman_bytes": plain.packet_bytes,
        "batch_table_bytes": packed.packet_bytes + packed.table_bytes,
        "online_bytes": online_volume(batch, spec.packet),
        "online_pred_bytes": online_volume(batch, spec.packet, predictor),
        "ratio": compression_ratio(raw, packed.packet_bytes),
        "hit_rate": hits / sum(len(s) for s in batch),
        "ratio_replace": compression_ratio(location_bits, packed.stream_bits),
        "ratio_huffman": compression_ratio(location_bits, plain.stream_bits),
    }


def _run_point_args(args):
    return run_point(*args)


def run_experiment(spec: ExperimentSpec, workers: int | None = None) -> list[MetricRow]:
    """Run every sweep point; rows come back in sweep order, averaged over repetitions."""
    jobs = [(spec, *pt, rep) for pt in spec.points() for rep in range(spec.repetitions)]
    if workers and workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_point_args, jobs, chunksize=4))
    else:
        results = [run_point(*job) for job in jobs]

    rows = []
    for i, (gdr, n, D, eps) in enumerate(spec.points()):
        chunk = results[i * spec.repetitions:(i + 1) * spec.repetitions]
        mean = {k: float(np.mean([r[k] for r in chunk])) for k in chunk[0]}
        rows.append(
            MetricRow(
                scenario=f"gdr={gdr:g},n={n},D={D},eps={eps}",
                gdr=gdr, n=n, D=D, eps=eps,
                batch_bytes_std=float(np.std([r["batch_bytes"] for r in chunk])),
                ratio_std=float(np.std([r["ratio"] for r in chunk])),
                repetitions=spec.repetitions,
                **mean,
            )
        )
    return rows


# --------------------------------------------------------------------------
# Trend checks


@dataclass
class TrendCheck:
    name: str
    ok: bool
    failures: list[str] = field(default_factory=list)


def _series(rows: Iterable[MetricRow], vary: str) -> dict[tuple, list[MetricRow]]:
    keys = [k for k in ("gdr", "n", "D", "eps") if k != vary]
    out: dict[tuple, list[MetricRow]] = {}
    for row in rows:
        out.setdefault(tuple(getattr(row, k) for k in keys), []).append(row)
    return {k: sorted(v, key=lambda r: getattr(r, vary)) for k, v in out.items()}


def _non_increasing(rows, vary, metric, tol=1e-9) -> list[str]:
    bad = []
    for key, series in _series(rows, vary).items():
        vals = [metric(r) for r in series]
        for a, b, ra, rb in zip(vals, vals[1:], series, series[1:]):
            if b > a + tol:
                bad.append(f"{rb.scenario}: {b:.4g} > {a:.4g} at {ra.scenario}")
    return bad


def check_trends(rows: Sequence[MetricRow], identical_gdr: float | None = None) -> list[TrendCheck]:
    """Qualitative trends expected of the sweep.

    T2 is checked on the rows whose dispersion equals ``identical_gdr``
    (default: the smallest swept value), i.e. the most tightly moving groups.
    """
    checks = []
    checks.append(TrendCheck("T1 ratio non-increasing in GDR", False, _non_increasing(rows, "gdr", lambda r: r.ratio)))
    if identical_gdr is None:
        identical_gdr = min(r.gdr for r in rows)
    tight = [r for r in rows if r.gdr == identical_gdr]
    checks.append(
        TrendCheck("T2 bytes/object non-increasing in n", False, _non_increasing(tight, "n", lambda r: r.bytes_per_object))
    )
    bad = [
        f"{r.scenario}: replace {r.ratio_replace:.4g} < huffman {r.ratio_huffman:.4g}"
        for r in rows
        if r.ratio_replace < r.ratio_huffman - 1e-9
    ]
    checks.append(TrendCheck("T3 Replace+Huffman ratio >= Huffman-only", False, bad))
    bad = [f"{r.scenario}" for r in rows if r.online_pred_bytes > r.online_bytes]
    checks.append(TrendCheck("online with prediction <= online", False, bad))
    bad = [
        f"{r.scenario}: batch {r.batch_bytes:.1f} >= online-pred {r.online_pred_bytes:.1f}"
        for r in rows
        if r.gdr <= 0.5 and r.n >= 8 and not r.batch_bytes < r.online_pred_bytes
    ]
    checks.append(TrendCheck("batch ratio > online-pred ratio (gdr<=0.5, n>=8)", False, bad))
    for c in checks:
        c.ok = not c.failures
    return checks


# --------------------------------------------------------------------------
# Reports


def write_csv(rows: Sequence[MetricRow], path: str | Path, columns: Sequence[str] = CSV_FIELDS) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            d = asdict(row)
            writer.writerow([_fmt(d[c]) for c in columns])
    return path


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _line_plot(path, title, xlabel, ylabel, series: dict[str, tuple[list, list]]):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "groupmove", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for label, (xs, ys) in series.items():
            ax.plot(xs, ys, marker="o", label=label)
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return Path(path)


def _mean_by(rows, x: str, line: str | None, y):
    groups: dict = {}
    for r in rows:
        groups.setdefault(getattr(r, line) if line else "", {}).setdefault(getattr(r, x), []).append(y(r))
    out = {}
    for label, pts in sorted(groups.items()):
        xs = sorted(pts)
        out[f"{line}={label}" if line else "mean"] = (xs, [float(np.mean(pts[v])) for v in xs])
    return out


def emit_report(rows: Sequence[MetricRow], out_dir: str | Path, formats: Sequence[str] = ("csv", "svg")) -> list[Path]:
    """Write ``metrics.csv``, ``comparison.csv`` and per-sweep SVG line plots."""
    if not rows:
        raise ValueError("no rows to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        written.append(write_csv(rows, out / "metrics.csv"))
        written.append(write_csv(rows, out / "comparison.csv", COMPARISON_FIELDS))
    if "svg" in formats:
        written.append(_line_plot(out / "ratio_vs_gdr.svg", "Compression ratio vs GDR", "GDR (hops)", "ratio",
                                  _mean_by(rows, "gdr", "n", lambda r: r.ratio)))
        written.append(_line_plot(out / "bytes_per_object_vs_n.svg", "Batch bytes per object", "group size n",
                                  "bytes/object", _mean_by(rows, "n", "gdr", lambda r: r.bytes_per_object)))
        written.append(_line_plot(out / "bytes_vs_D.svg", "Transmitted bytes per interval vs batch period",
                                  "batch period D", "bytes/interval", {
                                      "batch": _mean_by(rows, "D", None, lambda r: r.batch_bytes / r.D)["mean"],
                                      "online": _mean_by(rows, "D", None, lambda r: r.online_bytes / r.D)["mean"],
                                      "online+prediction": _mean_by(rows, "D", None,
                                                                    lambda r: r.online_pred_bytes / r.D)["mean"],
                                  }))
        written.append(_line_plot(out / "ratio_vs_eps.svg", "Compression ratio vs error bound", "error bound (hops)",
                                  "ratio", _mean_by(rows, "eps", "gdr", lambda r: r.ratio)))
        by_hit = sorted(rows, key=lambda r: r.hit_rate)
        written.append(_line_plot(out / "ratio_vs_hit_rate.svg", "Replace vs Huffman", "prediction hit rate",
                                  "stream compression ratio", {
                                      "Replace+Huffman": ([r.hit_rate for r in by_hit], [r.ratio_replace for r in by_hit]),
                                      "Huffman": ([r.hit_rate for r in by_hit], [r.ratio_huffman for r in by_hit]),
                                  }))
    return written


def read_csv_rows(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))



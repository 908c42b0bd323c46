"""Sensor grid, group mobility workload, and batch segmentation.

Locations are nodes of a ``width x height`` grid; a node's symbol is its
row-major index ``y * width + x``.  The grid is tiled into square clusters,
each served by one cluster head.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class Location:
    x: int
    y: int


@dataclass(frozen=True)
class SensorGrid:
    """Two-layer tracking network: ``width x height`` nodes in square cluster tiles."""

    width: int = 16
    height: int = 16
    cluster_grid: int = 4

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.cluster_grid < 1:
            raise ValueError("grid dimensions must be positive")
        if self.width % self.cluster_grid or self.height % self.cluster_grid:
            raise ValueError(
                f"{self.cluster_grid}x{self.cluster_grid} clusters do not tile a "
                f"{self.width}x{self.height} grid"
            )

    @property
    def size(self) -> int:
        return self.width * self.height

    @property
    def n_clusters(self) -> int:
        return self.cluster_grid * self.cluster_grid

    def contains(self, loc: Location) -> bool:
        return 0 <= loc.x < self.width and 0 <= loc.y < self.height

    def check(self, loc: Location) -> Location:
        if not self.contains(loc):
            raise ValueError(f"{loc} is outside the {self.width}x{self.height} grid")
        return loc

    def symbol(self, loc: Location) -> int:
        self.check(loc)
        return loc.y * self.width + loc.x

    def location(self, symbol: int) -> Location:
        if not 0 <= symbol < self.size:
            raise ValueError(f"symbol {symbol} is not a grid node")
        return Location(symbol % self.width, symbol // self.width)

    def cluster_of(self, symbol: int) -> int:
        loc = self.location(symbol)
        tile_w = self.width // self.cluster_grid
        tile_h = self.height // self.cluster_grid
        return (loc.y // tile_h) * self.cluster_grid + loc.x // tile_w

    def coordinates(self) -> np.ndarray:
        """``(size, 2)`` array of node coordinates indexed by symbol."""
        ids = np.arange(self.size)
        return np.column_stack([ids % self.width, ids // self.width])


def hop_distance(a: Location, b: Location, grid: SensorGrid | None = None) -> int:
    """Hop count between two nodes of the grid mesh (Manhattan distance)."""
    if grid is not None:
        grid.check(a)
        grid.check(b)
    elif min(a.x, a.y, b.x, b.y) < 0:
        raise ValueError("negative grid coordinates")
    return abs(a.x - b.x) + abs(a.y - b.y)


def symbol_distance(grid: SensorGrid, a: int, b: int) -> int:
    return hop_distance(grid.location(a), grid.location(b))


@dataclass(frozen=True)
class ScenarioConfig:
    group_size: int = 4
    gdr: float = 0.0
    batch_period: int = 100
    error_bound: int = 0
    tracking_interval: float = 0.5
    speed: float = 1.0
    seed: int = 0
    # Euclidean distance between the leader's start and furthest point;
    # None means half the grid diagonal.
    movement_range: float | None = None

    def __post_init__(self):
        if self.group_size < 1:
            raise ValueError("group_size must be >= 1")
        if self.gdr < 0:
            raise ValueError("gdr must be >= 0")
        if self.batch_period < 1:
            raise ValueError("batch_period must be >= 1")
        if self.error_bound < 0:
            raise ValueError("error_bound must be >= 0")
        if self.tracking_interval <= 0 or self.speed <= 0:
            raise ValueError("tracking_interval and speed must be positive")

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "ScenarioConfig":
        """Read a flat ``key = value`` file; ``#`` starts a comment."""
        values = dict(overrides)
        for raw in Path(path).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"malformed config line: {raw!r}")
            values[key.strip()] = value.strip()
        return cls.from_mapping(values)

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> "ScenarioConfig":
        aliases = {"n": "group_size", "D": "batch_period", "eps": "error_bound"}
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, value in values.items():
            name = aliases.get(key, key)
            if name not in types:
                raise ValueError(f"unknown scenario key {key!r}")
            if value is None or value == "" or value == "None":
                kwargs[name] = None
            elif name in ("group_size", "batch_period", "error_bound", "seed"):
                kwargs[name] = int(value)
            else:
                kwargs[name] = float(value)
        return cls(**kwargs)


@dataclass(frozen=True)
class LocationSequence:
    object_id: int
    timestamps: tuple[int, ...]
    symbols: tuple[int, ...]

    def __post_init__(self):
        if len(self.timestamps) != len(self.symbols):
            raise ValueError("timestamps and symbols differ in length")
        if any(b <= a for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self):
        return len(self.symbols)

    @property
    def items(self) -> list[tuple[int, int]]:
        return list(zip(self.timestamps, self.symbols))

    def window(self, start: int, stop: int) -> "LocationSequence":
        """Items with ``start <= t < stop``."""
        keep = [i for i, t in enumerate(self.timestamps) if start <= t < stop]
        return LocationSequence(
            self.object_id,
            tuple(self.timestamps[i] for i in keep),
            tuple(self.symbols[i] for i in keep),
        )


# --------------------------------------------------------------------------
# Reference point group mobility


def _raster_path(start: Location, end: Location) -> list[Location]:
    """4-connected node path hugging the straight segment from start to end."""
    dx, dy = end.x - start.x, end.y - start.y
    sx, sy = (dx > 0) - (dx < 0), (dy > 0) - (dy < 0)
    ax, ay = abs(dx), abs(dy)
    path = [start]
    x, y, ix, iy = start.x, start.y, 0, 0
    while ix < ax or iy < ay:
        # step along whichever axis crosses its next cell boundary first
        tx = (ix + 0.5) / ax if ix < ax else math.inf
        ty = (iy + 0.5) / ay if iy < ay else math.inf
        if tx <= ty:
            x += sx
            ix += 1
        else:
            y += sy
            iy += 1
        path.append(Location(x, y))
    return path


def _pick_endpoints(rng: np.random.Generator, grid: SensorGrid, movement_range: float):
    start = Location(int(rng.integers(grid.width)), int(rng.integers(grid.height)))
    for _ in range(64):
        angle = rng.uniform(0.0, 2.0 * math.pi)
        ex = int(round(start.x + movement_range * math.cos(angle)))
        ey = int(round(start.y + movement_range * math.sin(angle)))
        end = Location(min(max(ex, 0), grid.width - 1), min(max(ey, 0), grid.height - 1))
        if end != start:
            return start, end
    return start, start


def leader_path(config: ScenarioConfig, grid: SensorGrid, rng: np.random.Generator) -> list[Location]:
    rng_range = config.movement_range
    if rng_range is None:
        rng_range = math.hypot(grid.width - 1, grid.height - 1) / 2.0
    start, end = _pick_endpoints(rng, grid, rng_range)
    return _raster_path(start, end)


def _leader_positions(path: list[Location], config: ScenarioConfig, n_intervals: int) -> list[Location]:
    hops_per_interval = config.speed * config.tracking_interval
    last = len(path) - 1
    out = []
    for t in range(n_intervals):
        k = int(math.floor(t * hops_per_interval + 1e-9))
        if last == 0:
            out.append(path[0])
            continue
        k %= 2 * last
        out.append(path[k] if k <= last else path[2 * last - k])
    return out


def _ball(radius: int) -> list[tuple[int, int]]:
    return [
        (dx, dy)
        for dx in range(-radius, radius + 1)
        for dy in range(-radius, radius + 1)
        if abs(dx) + abs(dy) <= radius
    ]


def simulate_group(
    config: ScenarioConfig, grid: SensorGrid, n_intervals: int | None = None
) -> list[LocationSequence]:
    """Generate one group's trajectories with reference point group mobility.

    Object 0 is the leader; it shuttles between a random start node and a
    random furthest node at ``config.speed`` hops per time unit.  Each
    follower is redrawn every interval uniformly among the grid nodes within
    the dispersion radius of the leader.  A fractional ``gdr`` displaces the
    follower with probability ``gdr - floor(gdr)`` using radius ``ceil(gdr)``
    and otherwise uses radius ``floor(gdr)``.

    ``n_intervals`` defaults to the batch period.
    """
    n_intervals = config.batch_period if n_intervals is None else n_intervals
    rng = np.random.default_rng(config.seed)
    leader = _leader_positions(leader_path(config, grid, rng), config, n_intervals)

    lo, hi = math.floor(config.gdr), math.ceil(config.gdr)
    frac = config.gdr - lo
    balls = {r: _ball(r) for r in {lo, hi}}

    timestamps = tuple(range(n_intervals))
    seqs = [LocationSequence(0, timestamps, tuple(grid.symbol(p) for p in leader))]
    for obj in range(1, config.group_size):
        symbols = []
        for pos in leader:
            radius = hi if frac > 0 and rng.random() < frac else lo
            options = [
                Location(pos.x + dx, pos.y + dy)
                for dx, dy in balls[radius]
                if grid.contains(Location(pos.x + dx, pos.y + dy))
            ]
            symbols.append(grid.symbol(options[int(rng.integers(len(options)))]))
        seqs.append(LocationSequence(obj, timestamps, tuple(symbols)))
    return seqs


def random_walk(
    grid: SensorGrid, n_intervals: int, seed: int, object_id: int = 0, move_prob: float = 0.5
) -> LocationSequence:
    """Independent walker: each interval stays put or steps to a random neighbour."""
    rng = np.random.default_rng(seed)
    x, y = int(rng.integers(grid.width)), int(rng.integers(grid.height))
    symbols = []
    steps = ((1, 0), (-1, 0), (0, 1), (0, -1))
    for _ in range(n_intervals):
        symbols.append(grid.symbol(Location(x, y)))
        if rng.random() < move_prob:
            dx, dy = steps[int(rng.integers(4))]
            if grid.contains(Location(x + dx, y + dy)):
                x, y = x + dx, y + dy
    return LocationSequence(object_id, tuple(range(n_intervals)), tuple(symbols))


# --------------------------------------------------------------------------
# Segmentation and alignment


@dataclass(frozen=True)
class Segment:
    """A time-contiguous slice of one object (``S``) or of aligned group members (``G``).

    ``rows[i]`` holds the symbols of ``members[i]`` for timestamps
    ``begin .. begin + length - 1``.  ``group`` is the group id carried by
    G-segments; for S-segments it is the owning object's group.
    """

    kind: str
    begin: int
    members: tuple[int, ...]
    rows: tuple[tuple[int, ...], ...]
    cluster: int = 0
    group: int = 0

    def __post_init__(self):
        if self.kind not in ("G", "S"):
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if len(self.members) != len(self.rows) or not self.rows:
            raise ValueError("one row per member required")
        if len({len(r) for r in self.rows}) != 1 or not self.rows[0]:
            raise ValueError("member rows must be non-empty and aligned")
        if self.kind == "G" and len(self.members) < 2:
            raise ValueError("a G-segment needs at least two members")
        if self.kind == "S" and len(self.members) != 1:
            raise ValueError("an S-segment has exactly one member")

    @property
    def length(self) -> int:
        return len(self.rows[0])

    @property
    def timestamps(self) -> range:
        return range(self.begin, self.begin + self.length)

    def columns(self) -> list[tuple[int, ...]]:
        return list(zip(*self.rows))

    def slices(self) -> list[LocationSequence]:
        ts = tuple(self.timestamps)
        return [LocationSequence(m, ts, row) for m, row in zip(self.members, self.rows)]


def segment_and_align(
    seqs: Sequence[LocationSequence],
    grid: SensorGrid,
    groups: Mapping[int, int] | None = None,
) -> list[Segment]:
    """Split sequences at cluster boundaries and align co-resident group members.

    For every cluster and group, the timeline is swept interval by interval;
    a maximal run of consecutive intervals with the same set of present
    members becomes one segment: a G-segment when two or more members are
    present, an S-segment otherwise.  ``groups`` maps object id to group id
    (default: all objects in group 0); objects of different groups are never
    aligned together.
    """
    if not seqs:
        return []
    groups = {s.object_id: 0 for s in seqs} if groups is None else dict(groups)
    ids = [s.object_id for s in seqs]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate object ids")

    # (cluster, group) -> t -> {object: symbol}
    presence: dict[tuple[int, int], dict[int, dict[int, int]]] = defaultdict(lambda: defaultdict(dict))
    for seq in seqs:
        g = groups[seq.object_id]
        for t, sym in zip(seq.timestamps, seq.symbols):
            presence[(grid.cluster_of(sym), g)][t][seq.object_id] = sym

    segments = []
    for (cluster, g), by_time in presence.items():
        run: list[int] = []
        members: tuple[int, ...] = ()
        for t in sorted(by_time) + [None]:
            now = tuple(sorted(by_time[t])) if t is not None else ()
            if run and (t is None or t != run[-1] + 1 or now != members):
                rows = tuple(tuple(by_time[u][m] for u in run) for m in members)
                kind = "G" if len(members) > 1 else "S"
                segments.append(Segment(kind, run[0], members, rows, cluster, g))
                run = []
            if t is not None:
                run.append(t)
                members = now
    segments.sort(key=lambda s: (s.cluster, s.begin, s.kind, s.members))
    return segments


def desegment(segments: Iterable[Segment]) -> list[LocationSequence]:
    """Inverse of :func:`segment_and_align`: per-object sequences sorted by id."""
    items: dict[int, dict[int, int]] = defaultdict(dict)
    for seg in segments:
        for m, row in zip(seg.members, seg.rows):
            for t, sym in zip(seg.timestamps, row):
                if t in items[m]:
                    raise ValueError(f"object {m} has two items at t={t}")
                items[m][t] = sym
    out = []
    for m in sorted(items):
        ts = tuple(sorted(items[m]))
        out.append(LocationSequence(m, ts, tuple(items[m][t] for t in ts)))
    return out


# --------------------------------------------------------------------------
# Trajectory CSV


def write_trajectories(path: str | Path, seqs: Sequence[LocationSequence], grid: SensorGrid) -> None:
    rows = sorted(
        (t, s.object_id, grid.location(sym)) for s in seqs for t, sym in zip(s.timestamps, s.symbols)
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "object_id", "x", "y"])
        for t, obj, loc in rows:
            writer.writerow([t, obj, loc.x, loc.y])


def read_trajectories(path: str | Path, grid: SensorGrid) -> list[LocationSequence]:
    items: dict[int, list[tuple[int, int]]] = defaultdict(list)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["t", "object_id", "x", "y"]:
            raise ValueError(f"unexpected trajectory header {reader.fieldnames}")
        for row in reader:
            loc = Location(int(row["x"]), int(row["y"]))
            items[int(row["object_id"])].append((int(row["t"]), grid.symbol(loc)))
    out = []
    for obj in sorted(items):
        pairs = sorted(items[obj])
        out.append(LocationSequence(obj, tuple(t for t, _ in pairs), tuple(s for _, s in pairs)))
    return out

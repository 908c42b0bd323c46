"""Sequence merge phase: vertical compression of one aligned group segment.

A column whose members all report the same node (S-column) collapses to one
symbol.  A differing column (D-column) is replaced by a single representative
when some node lies within the error bound of every member; otherwise it is
written verbatim inside a ``DELIM ... DELIM`` run, ``n`` symbols per column in
member order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .world import SensorGrid

# Reserved tokens; location symbols are non-negative.
DELIM = -1
HIT = -2

Column = tuple[int, ...]


@dataclass(frozen=True)
class MergedSequence:
    group_size: int
    tokens: tuple[int, ...]

    def __len__(self):
        return len(self.tokens)


def _deviations(grid: SensorGrid, column: Sequence[int]) -> np.ndarray:
    """``(grid.size, n)`` hop distances from every node to every member."""
    coords = grid.coordinates()
    members = coords[np.asarray(column)]
    return np.abs(coords[:, None, :] - members[None, :, :]).sum(axis=2)


def select_representative(column: Sequence[int], eps: int, grid: SensorGrid) -> int | None:
    """Node minimizing mean hop deviation over the column, subject to max deviation <= eps.

    Ties go to the smallest symbol id; ``None`` when no node qualifies.
    """
    if not column:
        raise ValueError("empty column")
    if eps < 0:
        raise ValueError("error bound must be >= 0")
    if len(set(column)) == 1:
        return column[0]
    if eps == 0:
        return None
    dev = _deviations(grid, column)
    ok = dev.max(axis=1) <= eps
    if not ok.any():
        return None
    total = np.where(ok, dev.sum(axis=1), np.iinfo(np.int64).max)
    return int(np.argmin(total))


def merge_group(columns: Sequence[Column], eps: int, grid: SensorGrid) -> MergedSequence:
    if eps < 0:
        raise ValueError("error bound must be >= 0")
    if not columns:
        raise ValueError("nothing to merge")
    n = len(columns[0])
    if n < 1 or any(len(c) != n for c in columns):
        raise ValueError("columns must share one group size >= 1")

    tokens: list[int] = []
    verbatim = False
    for col in columns:
        rep = select_representative(col, eps, grid)
        if rep is None:
            if not verbatim:
                tokens.append(DELIM)
                verbatim = True
            tokens.extend(col)
        else:
            if verbatim:
                tokens.append(DELIM)
                verbatim = False
            tokens.append(rep)
    if verbatim:
        tokens.append(DELIM)
    return MergedSequence(n, tuple(tokens))


def unmerge(merged: MergedSequence) -> list[Column]:
    n = merged.group_size
    columns: list[Column] = []
    run: list[int] | None = None
    for tok in merged.tokens:
        if tok == DELIM:
            if run is None:
                run = []
                continue
            if not run or len(run) % n:
                raise ValueError(f"verbatim run of {len(run)} symbols is not a multiple of {n}")
            columns.extend(tuple(run[i:i + n]) for i in range(0, len(run), n))
            run = None
        elif run is not None:
            run.append(tok)
        else:
            columns.append((tok,) * n)
    if run is not None:
        raise ValueError("unterminated verbatim run")
    return columns

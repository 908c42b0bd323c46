"""Group movement pattern mining.

Per-object probabilistic suffix trees, the ``simp`` similarity score, the
similarity graph, HCS clustering by repeated global minimum cuts, and the
consensus step that merges local grouping results.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from .world import LocationSequence, SensorGrid

Context = tuple[int, ...]

D_MIN = 1e-6


def _symbols(seq) -> list[int]:
    if isinstance(seq, LocationSequence):
        return list(seq.symbols)
    return list(seq)


@dataclass(frozen=True, eq=False)
class PatternTree:
    """Variable-order Markov predictor over a fixed alphabet.

    ``nodes`` maps a context (oldest symbol first) to its next-symbol
    distribution, aligned with ``alphabet``; ``significance`` holds each
    context's empirical probability in the training sequence.  The empty
    context is always present.
    """

    alphabet: tuple[int, ...]
    nodes: dict[Context, np.ndarray]
    significance: dict[Context, float]
    min_prob: float = 0.02
    max_depth: int = 5
    smoothing: float = 0.001
    _argmax_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __len__(self):
        return len(self.nodes)

    def longest_suffix(self, context: Sequence[int]) -> Context:
        ctx = tuple(context[len(context) - self.max_depth:]) if self.max_depth else ()
        while ctx not in self.nodes:
            ctx = ctx[1:]
        return ctx

    def distribution(self, context: Sequence[int]) -> np.ndarray:
        return self.nodes[self.longest_suffix(context)]

    def argmax(self, context: Sequence[int]) -> int:
        """Most likely next symbol; ties go to the smallest symbol id."""
        key = self.longest_suffix(context)
        hit = self._argmax_cache.get(key)
        if hit is None:
            hit = self.alphabet[int(np.argmax(self.nodes[key]))]
            self._argmax_cache[key] = hit
        return hit

    # -- exchange format -------------------------------------------------

    def to_bytes(self) -> bytes:
        lines = [
            "pst 1",
            "alphabet " + " ".join(map(str, self.alphabet)),
            f"params {self.min_prob!r} {self.max_depth} {self.smoothing!r}",
        ]
        for ctx in sorted(self.nodes, key=lambda c: (len(c), c)):
            name = " ".join(map(str, ctx)) or "-"
            probs = " ".join(repr(float(p)) for p in self.nodes[ctx])
            lines.append(f"{name}\t{self.significance[ctx]!r}\t{probs}")
        return ("\n".join(lines) + "\n").encode("ascii")

    @classmethod
    def from_bytes(cls, data: bytes) -> "PatternTree":
        lines = data.decode("ascii").splitlines()
        if not lines or lines[0] != "pst 1":
            raise ValueError("not a serialized pattern tree")
        alphabet = tuple(int(s) for s in lines[1].split()[1:])
        _, min_prob, max_depth, smoothing = lines[2].split()
        nodes, significance = {}, {}
        for line in lines[3:]:
            name, sig, probs = line.split("\t")
            ctx = () if name == "-" else tuple(int(s) for s in name.split())
            nodes[ctx] = np.array([float(p) for p in probs.split()])
            significance[ctx] = float(sig)
        return cls(alphabet, nodes, significance, float(min_prob), int(max_depth), float(smoothing))

    def digest(self) -> bytes:
        return hashlib.sha256(self.to_bytes()).digest()


def learn_pst(
    seq,
    alphabet: Iterable[int] | None = None,
    min_prob: float = 0.02,
    max_depth: int = 5,
    smoothing: float = 0.001,
) -> PatternTree:
    """Learn a suffix-closed pattern tree from one symbol sequence.

    A context of length ``L < N`` is kept when its empirical probability
    ``count / (N - L + 1)`` reaches ``min_prob``; suffixes of kept contexts
    are added so the tree stays suffix-closed.  Next-symbol distributions
    are ``(1 - k*smoothing) * freq + smoothing`` over an alphabet of size
    ``k``.  A context never followed by a symbol inherits its parent's
    distribution.
    """
    symbols = _symbols(seq)
    if not symbols:
        raise ValueError("cannot learn a pattern tree from an empty sequence")
    alphabet = tuple(sorted(set(symbols) if alphabet is None else set(alphabet)))
    index = {s: i for i, s in enumerate(alphabet)}
    if any(s not in index for s in symbols):
        raise ValueError("sequence uses symbols outside the alphabet")
    k = len(alphabet)
    if not 0 <= smoothing * k < 1:
        raise ValueError("smoothing too large for the alphabet size")
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")

    n = len(symbols)
    significance: dict[Context, float] = {(): 1.0}
    # a context must be followed by something, so it is shorter than the sequence
    for length in range(1, min(max_depth, n - 1) + 1):
        counts = Counter(tuple(symbols[i:i + length]) for i in range(n - length + 1))
        total = n - length + 1
        for ctx, c in counts.items():
            p = c / total
            if p >= min_prob:
                significance[ctx] = p
    # suffix closure
    for ctx in list(significance):
        for j in range(1, len(ctx)):
            suffix = ctx[j:]
            if suffix not in significance:
                c = sum(
                    1 for i in range(n - len(suffix) + 1) if tuple(symbols[i:i + len(suffix)]) == suffix
                )
                significance[suffix] = c / (n - len(suffix) + 1)

    follow: dict[Context, np.ndarray] = {ctx: np.zeros(k) for ctx in significance}
    for i, s in enumerate(symbols):
        follow[()][index[s]] += 1
        for length in range(1, min(max_depth, i) + 1):
            ctx = tuple(symbols[i - length:i])
            if ctx in follow:
                follow[ctx][index[s]] += 1

    nodes: dict[Context, np.ndarray] = {}
    for ctx in sorted(significance, key=len):
        counts = follow[ctx]
        total = counts.sum()
        if total > 0:
            nodes[ctx] = (1.0 - k * smoothing) * counts / total + smoothing
        else:
            nodes[ctx] = nodes[ctx[1:]].copy()
    return PatternTree(alphabet, nodes, significance, min_prob, max_depth, smoothing)


def predict(tree: PatternTree, context: Sequence[int], next_symbol: int) -> float:
    """Probability of ``next_symbol`` under the longest stored suffix of ``context``."""
    try:
        i = tree.alphabet.index(next_symbol)
    except ValueError:
        return 0.0
    return float(tree.distribution(context)[i])


def simp_score(t1: PatternTree, t2: PatternTree, d_min: float = D_MIN) -> float:
    """Similarity of two trees: ``-log`` of their significance-weighted L1 distance.

    Every context significant in either tree contributes the L1 distance
    between the two next-symbol predictions, weighted by the mean of its
    significance in the two trees (zero where a tree lacks the context).
    """
    if t1.alphabet != t2.alphabet:
        raise ValueError("pattern trees use different alphabets")
    patterns = sorted(set(t1.nodes) | set(t2.nodes), key=lambda c: (len(c), c))
    num = den = 0.0
    for ctx in patterns:
        w = 0.5 * (t1.significance.get(ctx, 0.0) + t2.significance.get(ctx, 0.0))
        num += w * float(np.abs(t1.distribution(ctx) - t2.distribution(ctx)).sum())
        den += w
    d = num / den if den > 0 else 0.0
    return -math.log(max(d, d_min))


# --------------------------------------------------------------------------
# Similarity graph and HCS


def build_similarity_graph(trees: Mapping[int, PatternTree], threshold: float) -> nx.Graph:
    g = nx.Graph()
    ids = sorted(trees)
    g.add_nodes_from(ids)
    for a, b in combinations(ids, 2):
        if simp_score(trees[a], trees[b]) >= threshold:
            g.add_edge(a, b)
    return g


def stoer_wagner(g: nx.Graph) -> tuple[int, set]:
    """Global minimum edge cut of an unweighted graph with >= 2 vertices.

    Deterministic: vertices are processed in sorted order, the most tightly
    connected vertex is added first with ties going to the smallest id, and
    the earliest phase attaining the minimum wins.
    """
    nodes = sorted(g.nodes)
    if len(nodes) < 2:
        raise ValueError("minimum cut needs at least two vertices")
    pos = {v: i for i, v in enumerate(nodes)}
    w = np.zeros((len(nodes), len(nodes)), dtype=np.int64)
    for a, b in g.edges:
        if a != b:
            w[pos[a], pos[b]] = w[pos[b], pos[a]] = 1
    merged = {i: {nodes[i]} for i in range(len(nodes))}
    active = list(range(len(nodes)))
    best_value, best_side = None, None
    while len(active) > 1:
        added = [active[0]]
        rest = active[1:]
        conn = w[active[0]].copy()
        while rest:
            nxt = max(rest, key=lambda v: (conn[v], -v))
            rest.remove(nxt)
            added.append(nxt)
            if rest:
                conn += w[nxt]
        s, t = added[-2], added[-1]
        cut = int(conn[t])
        if best_value is None or cut < best_value:
            best_value, best_side = cut, set(merged[t])
        w[s] += w[t]
        w[:, s] += w[:, t]
        w[s, s] = 0
        merged[s] |= merged.pop(t)
        active.remove(t)
    # report the side holding the smallest vertex id
    if min(nodes) not in best_side:
        best_side = set(nodes) - best_side
    return best_value, best_side


@dataclass(frozen=True)
class GroupingResult:
    partition: dict[int, int]
    source: int = 0

    def groups(self) -> list[list[int]]:
        by_id: dict[int, list[int]] = {}
        for obj in sorted(self.partition):
            by_id.setdefault(self.partition[obj], []).append(obj)
        return sorted(by_id.values())

    def same_partition(self, other: "GroupingResult") -> bool:
        return self.groups() == other.groups()


def _labelled(groups: Iterable[Iterable[int]], source: int = 0) -> GroupingResult:
    ordered = sorted(sorted(grp) for grp in groups)
    return GroupingResult({obj: gid for gid, grp in enumerate(ordered) for obj in grp}, source)


def hcs_cluster(g: nx.Graph, source: int = 0) -> GroupingResult:
    """Highly connected subgraph clustering.

    A connected subgraph whose edge connectivity exceeds half its vertex
    count is a group; otherwise it is split along a global minimum cut and
    both sides are processed again.  Vertices left alone are singletons.
    """
    done: list[set] = []
    stack = [set(c) for c in nx.connected_components(g)]
    while stack:
        part = stack.pop()
        if len(part) == 1:
            done.append(part)
            continue
        sub = g.subgraph(part)
        if not nx.is_connected(sub):
            stack.extend(set(c) for c in nx.connected_components(sub))
            continue
        value, side = stoer_wagner(sub)
        if value > len(part) / 2:
            done.append(part)
        else:
            stack.extend([side, part - side])
    return _labelled(done, source)


# --------------------------------------------------------------------------
# Consensus ensembling


def _entropy(labels: np.ndarray) -> float:
    _, counts = np.unique(labels, return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log(p)).sum())


def nmi(a: Sequence[int], b: Sequence[int]) -> float:
    """Normalized mutual information with geometric-mean normalization."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("label vectors differ in length")
    ha, hb = _entropy(a), _entropy(b)
    if ha == 0.0 or hb == 0.0:
        return 1.0 if ha == hb else 0.0
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    joint = np.zeros((ia.max() + 1, ib.max() + 1))
    np.add.at(joint, (ia, ib), 1)
    joint /= joint.sum()
    pa, pb = joint.sum(1, keepdims=True), joint.sum(0, keepdims=True)
    nz = joint > 0
    mi = float((joint[nz] * np.log(joint[nz] / (pa @ pb)[nz])).sum())
    return mi / math.sqrt(ha * hb)


def coassociation(local_results: Sequence[GroupingResult]) -> tuple[list[int], np.ndarray]:
    """Pairwise Jaccard co-association over a list of local groupings."""
    objects = sorted(local_results[0].partition)
    for res in local_results[1:]:
        if sorted(res.partition) != objects:
            raise ValueError("local grouping results cover different object sets")
    labels = np.array([[res.partition[o] for o in objects] for res in local_results])
    together = (labels[:, :, None] == labels[:, None, :]).sum(axis=0)
    return objects, together / len(local_results)


def ce_ensemble(local_results: Sequence[GroupingResult], partition_param: int = 9) -> GroupingResult:
    """Combine local groupings into a consensus partition.

    The co-association matrix is thresholded at ``partition_param`` evenly
    spaced levels in (0, 1); each level yields a candidate partition (the
    connected components), and the candidate with the highest mean NMI
    against the local results is returned.  Ties go to the lower level.
    """
    if not local_results:
        raise ValueError("need at least one local grouping result")
    if partition_param < 1:
        raise ValueError("partition_param must be >= 1")
    objects, co = coassociation(local_results)
    if len(local_results) == 1:
        return local_results[0]
    inputs = [[res.partition[o] for o in objects] for res in local_results]

    best, best_score = None, -math.inf
    for i in range(partition_param):
        level = (i + 1) / (partition_param + 1)
        g = nx.Graph()
        g.add_nodes_from(range(len(objects)))
        rows, cols = np.nonzero(np.triu(co >= level, k=1))
        g.add_edges_from(zip(rows.tolist(), cols.tolist()))
        candidate = _labelled([[objects[j] for j in comp] for comp in nx.connected_components(g)], -1)
        labels = [candidate.partition[o] for o in objects]
        score = float(np.mean([nmi(labels, ref) for ref in inputs]))
        if score > best_score + 1e-12:
            best, best_score = candidate, score
    return best


# --------------------------------------------------------------------------
# End-to-end mining


@dataclass
class MiningResult:
    grouping: GroupingResult
    local_results: list[GroupingResult]
    models: dict[int, PatternTree]


def group_model(seqs: Sequence[LocationSequence], alphabet: Iterable[int], **pst_params) -> PatternTree:
    """Group predictor: one tree learned from the members' concatenated sequences."""
    joined = [s for seq in seqs for s in seq.symbols]
    return learn_pst(joined, alphabet, **pst_params)


def mine_groups(
    seqs: Sequence[LocationSequence],
    grid: SensorGrid,
    regions: int = 3,
    threshold: float = 0.2,
    partition_param: int = 9,
    **pst_params,
) -> MiningResult:
    """Discover groups and their shared predictors.

    The batch timeline is split into ``regions`` consecutive windows, each
    standing for one local observer; every window produces a local HCS
    grouping, and the local results are combined by :func:`ce_ensemble`.
    A group predictor is then learned for every resulting group.
    """
    if not seqs:
        raise ValueError("no sequences to mine")
    alphabet = range(grid.size)
    t0 = min(s.timestamps[0] for s in seqs if len(s))
    t1 = max(s.timestamps[-1] for s in seqs if len(s)) + 1
    bounds = np.linspace(t0, t1, regions + 1).round().astype(int)
    local = []
    for r in range(regions):
        trees = {}
        for seq in seqs:
            part = seq.window(int(bounds[r]), int(bounds[r + 1]))
            trees[seq.object_id] = learn_pst(part if len(part) else seq, alphabet, **pst_params)
        local.append(hcs_cluster(build_similarity_graph(trees, threshold), source=r))
    grouping = ce_ensemble(local, partition_param)
    by_id = {s.object_id: s for s in seqs}
    models = {
        grouping.partition[members[0]]: group_model([by_id[m] for m in members], alphabet, **pst_params)
        for members in grouping.groups()
    }
    return MiningResult(grouping, local, models)

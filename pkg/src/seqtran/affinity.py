"""Edge costs from image/label similarity, the compatibility filter and the source graph."""

from __future__ import annotations

import itertools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from .dataset import TaskDescriptor, common_grid
from .errors import IsolatedTargetError, PairError, SeqtranError, ValidationError
from .ot import image_similarity_H
from .reduction import DEFAULT_DIM, reduce_pair
from .ssim import SsimParams, label_similarity_R

log = logging.getLogger(__name__)

MODES = ("one_minus_R", "signed_beta")
GRAPH_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class AffinityParams:
    alpha: float = 1.0
    beta: float = 1.0
    mode: str = "one_minus_R"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValidationError("alpha and beta must be finite")
        if self.mode == "one_minus_R" and (self.alpha < 0 or self.beta < 0):
            raise ValidationError("alpha and beta must be >= 0 in one_minus_R mode")

    def scaled(self, c: float) -> "AffinityParams":
        return replace(self, alpha=self.alpha * c, beta=self.beta * c)


@dataclass(frozen=True)
class MetricConfig:
    """How H and R are computed for a task pair."""

    pca_dim: int = DEFAULT_DIM
    ssim: SsimParams = field(default_factory=SsimParams)
    solver: str = "sinkhorn"
    jobs: int = 1


@dataclass(frozen=True)
class Edge:
    i: str
    j: str
    h: float
    r: float
    cost: float

    def __post_init__(self):
        if self.i == self.j:
            raise ValidationError(f"self-loop on {self.i}")
        if self.j < self.i:
            raise ValidationError(f"edge ({self.i}, {self.j}) not in canonical order")

    @classmethod
    def make(cls, u: str, v: str, h: float, r: float, params: AffinityParams) -> "Edge":
        i, j = sorted((u, v))
        return cls(i, j, h, r, edge_cost(h, r, params))

    def other(self, node: str) -> str:
        return self.j if node == self.i else self.i


@dataclass(frozen=True)
class Node:
    descriptor: TaskDescriptor
    sample_count: int

    @property
    def id(self) -> str:
        return self.descriptor.id


@dataclass(frozen=True)
class SourceGraph:
    nodes: tuple
    edges: tuple
    params: AffinityParams = AffinityParams()

    def __post_init__(self):
        nodes = tuple(sorted(self.nodes, key=lambda n: n.id))
        edges = tuple(sorted(self.edges, key=lambda e: (e.i, e.j)))
        ids = [n.id for n in nodes]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate node id")
        known = set(ids)
        by_id = {n.id: n.descriptor for n in nodes}
        seen = set()
        for e in edges:
            if e.i not in known or e.j not in known:
                raise ValidationError(f"edge ({e.i}, {e.j}) references an unknown node")
            if (e.i, e.j) in seen:
                raise ValidationError(f"duplicate edge ({e.i}, {e.j})")
            if not compatible(by_id[e.i], by_id[e.j]):
                raise ValidationError(f"edge ({e.i}, {e.j}) joins incompatible tasks")
            seen.add((e.i, e.j))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    @property
    def node_ids(self):
        return [n.id for n in self.nodes]

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def edge_map(self):
        """``{(i, j): Edge}`` with both orientations as keys."""
        out = {}
        for e in self.edges:
            out[(e.i, e.j)] = e
            out[(e.j, e.i)] = e
        return out

    def reweighted(self, params: AffinityParams) -> "SourceGraph":
        """Same metrics, costs recomputed under ``params``."""
        edges = tuple(Edge(e.i, e.j, e.h, e.r, edge_cost(e.h, e.r, params)) for e in self.edges)
        return SourceGraph(self.nodes, edges, params)

    def to_dict(self):
        return {
            "schema_version": GRAPH_SCHEMA_VERSION,
            "nodes": [{"id": n.id, "institute": n.descriptor.institute,
                       "modality": n.descriptor.modality, "objective": n.descriptor.objective,
                       "sample_count": n.sample_count} for n in self.nodes],
            "edges": [{"i": e.i, "j": e.j, "h": e.h, "r": e.r, "cost": e.cost} for e in self.edges],
            "params": {"alpha": self.params.alpha, "beta": self.params.beta,
                       "mode": self.params.mode},
        }

    @classmethod
    def from_dict(cls, doc) -> "SourceGraph":
        try:
            nodes = [Node(TaskDescriptor(n["institute"], n["modality"], n["objective"]),
                          int(n["sample_count"])) for n in doc["nodes"]]
            for n, raw in zip(nodes, doc["nodes"]):
                if raw.get("id", n.id) != n.id:
                    raise ValidationError(f"node id {raw['id']!r} does not match its fields")
            edges = [Edge(e["i"], e["j"], float(e["h"]), float(e["r"]), float(e["cost"]))
                     for e in doc["edges"]]
            p = doc.get("params", {})
            params = AffinityParams(float(p.get("alpha", 1.0)), float(p.get("beta", 1.0)),
                                    p.get("mode", "one_minus_R"))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed graph document: {exc}") from None
        return cls(tuple(nodes), tuple(edges), params)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SourceGraph":
        return cls.from_dict(json.loads(text))


def compatible(a: TaskDescriptor, b: TaskDescriptor) -> bool:
    """Tasks may be linked if they share a modality or a segmentation objective."""
    return a.modality == b.modality or a.objective == b.objective


def edge_cost(h: float, r: float, params: AffinityParams) -> float:
    if params.mode == "one_minus_R":
        return params.alpha * h + params.beta * (1.0 - r)
    return params.alpha * h + params.beta * r


def pair_metrics(task_i, task_j, config: MetricConfig = MetricConfig()):
    """``(h, r)`` for two tasks, resampled to their common grid."""
    if task_j.id < task_i.id:
        task_i, task_j = task_j, task_i
    try:
        ti, tj = common_grid(task_i, task_j)
        di, dj = reduce_pair(ti, tj, config.pca_dim)
        h = image_similarity_H(di, dj, solver=config.solver)
        r = label_similarity_R(ti, tj, config.ssim)
    except SeqtranError as exc:
        raise PairError((task_i.id, task_j.id), exc) from exc
    log.debug("pair %s / %s: h=%.6g r=%.6g", task_i.id, task_j.id, h, r)
    return h, r


def _compute_pairs(pairs, config):
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            return list(pool.map(lambda p: pair_metrics(p[0], p[1], config), pairs))
    return [pair_metrics(a, b, config) for a, b in pairs]


def build_graph(catalog, params: AffinityParams = AffinityParams(),
                config: MetricConfig = MetricConfig()) -> SourceGraph:
    sources = sorted(catalog.sources, key=lambda t: t.id)
    if len(sources) < 2:
        raise ValidationError("build_graph needs at least 2 source tasks")
    pairs = [(a, b) for a, b in itertools.combinations(sources, 2)
             if compatible(a.descriptor, b.descriptor)]
    metrics = _compute_pairs(pairs, config)
    edges = tuple(Edge.make(a.id, b.id, h, r, params) for (a, b), (h, r) in zip(pairs, metrics))
    nodes = tuple(Node(t.descriptor, t.sample_count) for t in sources)
    log.info("source graph: %d nodes, %d edges", len(nodes), len(edges))
    return SourceGraph(nodes, edges, params)


def attach_target(graph: SourceGraph, target, sources, params: AffinityParams | None = None,
                  config: MetricConfig = MetricConfig()):
    """Edges between ``target`` and every compatible source; ``graph`` is not modified.

    ``sources`` is any iterable of source :class:`TaskDataset` (e.g. ``catalog.sources``).
    """
    params = graph.params if params is None else params
    if target.id in graph.node_ids:
        raise ValidationError(f"target {target.id} is already a graph node")
    by_id = {t.id: t for t in sources}
    pairs = []
    for node in graph.nodes:
        if compatible(node.descriptor, target.descriptor):
            if node.id not in by_id:
                raise ValidationError(f"no dataset for source {node.id}")
            pairs.append((by_id[node.id], target))
    if not pairs:
        raise IsolatedTargetError(f"isolated target: {target.id} shares no modality or "
                                  f"objective with any source")
    metrics = _compute_pairs(pairs, config)
    return [Edge.make(s.id, t.id, h, r, params) for (s, t), (h, r) in zip(pairs, metrics)]

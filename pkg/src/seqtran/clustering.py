"""Girvan-Newman clustering of the source graph and representative election.

Edge cost is treated as a distance for shortest paths. Modularity needs
similarity weights, so it uses ``exp(-cost / s)`` where ``s`` is the mean edge
cost of the graph; dividing by ``s`` keeps the chosen partition unchanged when
all costs are rescaled by a positive factor.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ValidationError

BETWEENNESS_TIE_RTOL = 1e-9
MODULARITY_TIE_ATOL = 1e-12
PARTITION_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Partition:
    """``assignment`` maps task id to a cluster index in ``0..k-1``.

    Clusters are numbered by their smallest member id.
    """

    assignment: dict
    modularity: float = 0.0

    @property
    def k(self) -> int:
        return len(set(self.assignment.values()))

    def clusters(self):
        out = {}
        for node, c in sorted(self.assignment.items()):
            out.setdefault(c, []).append(node)
        return dict(sorted(out.items()))

    def cluster_of(self, node: str):
        return self.clusters()[self.assignment[node]]

    @classmethod
    def from_groups(cls, groups, modularity: float = 0.0) -> "Partition":
        groups = sorted((sorted(g) for g in groups if g), key=lambda g: g[0])
        return cls({n: c for c, g in enumerate(groups) for n in g}, modularity)

    def validate(self, node_ids):
        if set(self.assignment) != set(node_ids):
            missing = sorted(set(node_ids) - set(self.assignment))
            raise ValidationError(f"partition does not cover nodes {missing}")
        if sorted(set(self.assignment.values())) != list(range(self.k)):
            raise ValidationError("cluster indices are not contiguous from 0")


@dataclass(frozen=True)
class Representatives:
    by_cluster: dict

    def ids(self):
        return [self.by_cluster[c] for c in sorted(self.by_cluster)]


def _dense(graph, edges=None):
    ids = graph.node_ids
    index = {n: k for k, n in enumerate(ids)}
    W = np.full((len(ids), len(ids)), np.inf)
    for e in graph.edges if edges is None else edges:
        if e.cost < 0:
            raise ValidationError(f"negative edge cost on ({e.i}, {e.j}); shortest paths undefined")
        W[index[e.i], index[e.j]] = W[index[e.j], index[e.i]] = e.cost
    return ids, index, W


def edge_betweenness(graph, edges=None):
    """``{(i, j): betweenness}`` over unordered node pairs, shortest paths by edge cost."""
    if not graph.nodes:
        raise ValidationError("edge_betweenness needs a non-empty graph")
    edges = graph.edges if edges is None else edges
    ids, index, W = _dense(graph, edges)
    B = kernels.edge_betweenness_dense(np.ascontiguousarray(W))
    return {(e.i, e.j): float(B[index[e.i], index[e.j]]) for e in edges}


def similarity_weights(graph):
    if not graph.edges:
        return {}
    scale = math.fsum(e.cost for e in graph.edges) / len(graph.edges)
    if scale <= 0:
        scale = 1.0
    return {(e.i, e.j): math.exp(-e.cost / scale) for e in graph.edges}


def modularity(graph, partition: Partition) -> float:
    """Weighted modularity ``sum_c (w_c / W - (s_c / 2W)^2)``; 0 for an edgeless graph."""
    partition.validate(graph.node_ids)
    weights = similarity_weights(graph)
    total = math.fsum(weights.values())
    if total <= 0:
        return 0.0
    k = partition.k
    internal = [0.0] * k
    strength = [0.0] * k
    for (i, j), w in weights.items():
        ci, cj = partition.assignment[i], partition.assignment[j]
        strength[ci] += w
        strength[cj] += w
        if ci == cj:
            internal[ci] += w
    return math.fsum(internal[c] / total - (strength[c] / (2.0 * total)) ** 2 for c in range(k))


def _components(ids, edges):
    parent = {n: n for n in ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges:
        ri, rj = find(e.i), find(e.j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups = {}
    for n in ids:
        groups.setdefault(find(n), []).append(n)
    return list(groups.values())


def _pick_edge(betweenness):
    top = max(betweenness.values())
    cut = top - BETWEENNESS_TIE_RTOL * max(1.0, abs(top))
    return min(key for key, v in betweenness.items() if v >= cut)


def removal_sequence(graph):
    """Yield ``(removed_edge_key, partition)`` for each Girvan-Newman step.

    The first item is ``(None, initial_partition)``; partitions carry their
    modularity on the original graph.
    """
    ids = graph.node_ids
    remaining = list(graph.edges)
    groups = _components(ids, remaining)
    part = Partition.from_groups(groups)
    yield None, Partition(part.assignment, modularity(graph, part))
    while remaining:
        key = _pick_edge(edge_betweenness(graph, remaining))
        remaining = [e for e in remaining if (e.i, e.j) != key]
        new_groups = _components(ids, remaining)
        if len(new_groups) != len(groups):
            part = Partition.from_groups(new_groups)
            part = Partition(part.assignment, modularity(graph, part))
        groups = new_groups
        yield key, part


def girvan_newman(graph) -> Partition:
    """Divisive clustering; returns the partition with maximal modularity over the
    removal sequence (earliest one on ties)."""
    best = None
    for _, part in removal_sequence(graph):
        if best is None or part.modularity > best.modularity + MODULARITY_TIE_ATOL:
            best = part
    return best


def select_representatives(graph, partition: Partition) -> Representatives:
    """Per cluster, the member with the most samples (smallest id on ties)."""
    partition.validate(graph.node_ids)
    counts = {n.id: n.sample_count for n in graph.nodes}
    reps = {}
    for c, members in partition.clusters().items():
        if not members:
            raise ValidationError(f"cluster {c} is empty")
        reps[c] = min(members, key=lambda m: (-counts[m], m))
    return Representatives(reps)


def partition_to_dict(partition: Partition, reps: Representatives):
    return {
        "schema_version": PARTITION_SCHEMA_VERSION,
        "k": partition.k,
        "modularity": partition.modularity,
        "clusters": {str(c): m for c, m in partition.clusters().items()},
        "representatives": {str(c): r for c, r in sorted(reps.by_cluster.items())},
    }


def partition_from_dict(doc):
    try:
        clusters = {int(c): list(m) for c, m in doc["clusters"].items()}
        assignment = {n: c for c, members in clusters.items() for n in members}
        part = Partition(assignment, float(doc.get("modularity", 0.0)))
        reps = Representatives({int(c): r for c, r in doc["representatives"].items()})
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed partition document: {exc}") from None
    if sorted(clusters) != list(range(len(clusters))):
        raise ValidationError("cluster indices are not contiguous from 0")
    for c, r in reps.by_cluster.items():
        if c not in clusters or r not in clusters[c]:
            raise ValidationError(f"representative {r!r} is not a member of cluster {c}")
    return part, reps


def partition_to_json(partition, reps) -> str:
    return json.dumps(partition_to_dict(partition, reps), indent=2, sort_keys=True) + "\n"

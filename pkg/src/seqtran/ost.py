"""Optimal sequential transfer path selection.

A path starts at a cluster representative, visits ``l - 1`` further distinct
members of that cluster and ends at the target. Its objective is

    w(v0, t) + sum_k w(v_k, v_{k+1}) + w(v_{l-1}, t)

Objectives are compared in exact rational arithmetic and ties go to the
lexicographically smallest node sequence, so results do not depend on
summation order or on the enumeration strategy.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import NoPathError, ValidationError

EXACT_CLUSTER_LIMIT = 20
BEAM_WIDTH = 256
RESULT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TransferPath:
    """``nodes`` ends with the target id; ``edges`` lists the objective's terms in order."""

    nodes: tuple
    cost: float
    edges: tuple = field(default=(), compare=False)
    approximate: bool = False

    @property
    def length(self) -> int:
        return len(self.nodes) - 1

    @property
    def target(self) -> str:
        return self.nodes[-1]

    def to_dict(self):
        return {"path": list(self.nodes), "cost": self.cost}


class _Costs:
    """Edge lookup over source edges plus target edges."""

    def __init__(self, graph, target_edges):
        if not target_edges:
            raise ValidationError("no target edges given")
        nodes = set(graph.node_ids)
        targets = {e.j if e.i in nodes else e.i for e in target_edges}
        if len(targets) != 1 or targets & nodes:
            raise ValidationError("target edges must join graph nodes to a single new target")
        self.target = targets.pop()
        self.edges = graph.edge_map()
        for e in target_edges:
            self.edges[(e.i, e.j)] = e
            self.edges[(e.j, e.i)] = e

    def get(self, u, v):
        return self.edges.get((u, v))


def _objective_edges(seq, target, costs):
    """Edges entering the objective for source sequence ``seq``, or None if one is missing."""
    terms = [costs.get(seq[0], target)]
    terms += [costs.get(u, v) for u, v in zip(seq, seq[1:])]
    if len(seq) > 1:
        terms.append(costs.get(seq[-1], target))
    if any(t is None for t in terms):
        return None
    return terms


def _exact(edges, l):
    total = sum((Fraction(e.cost) for e in edges), Fraction(0))
    # literal objective counts w(v0, t) twice when l == 1; argmin is unaffected
    return total * 2 if l == 1 else total


def _make_path(seq, target, edges, approximate=False):
    return TransferPath(tuple(seq) + (target,), math.fsum(e.cost for e in edges),
                        tuple(edges), approximate)


def _check_inputs(graph, partition, representatives):
    partition.validate(graph.node_ids)
    for c, r in representatives.by_cluster.items():
        if partition.assignment.get(r) != c:
            raise ValidationError(f"representative {r} is not in cluster {c}")


def enumerate_paths(graph, partition, representatives, target_edges, l: int = 2):
    """Every feasible path of length ``l`` as ``(exact_objective, TransferPath)``, unsorted."""
    if l < 1:
        raise ValidationError("path length l must be >= 1")
    _check_inputs(graph, partition, representatives)
    costs = _Costs(graph, target_edges)
    out = []
    for r in representatives.ids():
        members = [m for m in partition.cluster_of(r) if m != r]
        for rest in itertools.permutations(members, l - 1):
            seq = (r,) + rest
            terms = _objective_edges(seq, costs.target, costs)
            if terms is not None:
                out.append((_exact(terms, l), _make_path(seq, costs.target, terms)))
    return out


def ost_l2(graph, partition, representatives, target_edges) -> TransferPath:
    """Best representative -> intermediate -> target path."""
    candidates = enumerate_paths(graph, partition, representatives, target_edges, 2)
    if not candidates:
        raise NoPathError("no sequential path: no representative has a usable intermediate")
    return min(candidates, key=lambda c: (c[0], c[1].nodes))[1]


def _search_cluster(r, members, l, costs, exact):
    """Best ``(objective, seq)`` starting at ``r`` over simple sequences in ``members``."""
    target = costs.target
    first = costs.get(r, target)
    if first is None:
        return None
    # state: (visited, last) -> (prefix objective, seq)
    layer = {(frozenset([r]), r): (Fraction(first.cost), (r,))}
    for _ in range(l - 1):
        nxt = {}
        for (visited, last), (val, seq) in layer.items():
            for m in members:
                if m in visited:
                    continue
                e = costs.get(last, m)
                if e is None:
                    continue
                key = (visited | {m}, m)
                cand = (val + Fraction(e.cost), seq + (m,))
                if key not in nxt or cand < nxt[key]:
                    nxt[key] = cand
        if not exact and len(nxt) > BEAM_WIDTH:
            nxt = dict(sorted(nxt.items(), key=lambda kv: kv[1])[:BEAM_WIDTH])
        layer = nxt
    best = None
    for (_, last), (val, seq) in layer.items():
        if l == 1:
            total = val * 2
        else:
            e = costs.get(last, target)
            if e is None:
                continue
            total = val + Fraction(e.cost)
        if best is None or (total, seq) < best:
            best = (total, seq)
    return best


def ost_general(graph, partition, representatives, target_edges, l: int = 2) -> TransferPath:
    """Best path of length ``l``.

    Exact dynamic programming over (visited set, last node) for clusters of at
    most ``EXACT_CLUSTER_LIMIT`` members; larger clusters use a beam search and
    the result is flagged ``approximate``.
    """
    if l < 1:
        raise ValidationError("path length l must be >= 1")
    _check_inputs(graph, partition, representatives)
    costs = _Costs(graph, target_edges)
    best, approximate = None, False
    fits = False
    for r in representatives.ids():
        cluster = partition.cluster_of(r)
        if l > len(cluster):
            continue
        fits = True
        exact = len(cluster) <= EXACT_CLUSTER_LIMIT
        found = _search_cluster(r, [m for m in cluster if m != r], l, costs, exact)
        if found is not None and (best is None or found < best):
            best, approximate = found, not exact
    if not fits:
        raise ValidationError(f"l={l} exceeds every cluster size")
    if best is None:
        raise NoPathError(f"no sequential path of length {l}")
    seq = best[1]
    return _make_path(seq, costs.target, _objective_edges(seq, costs.target, costs), approximate)


def rank_candidates(graph, partition, representatives, target_edges, top_n: int, l: int = 2):
    """The ``top_n`` cheapest paths, ascending, ties by node sequence."""
    candidates = enumerate_paths(graph, partition, representatives, target_edges, l)
    candidates.sort(key=lambda c: (c[0], c[1].nodes))
    return [p for _, p in candidates[:max(top_n, 0)]]


def result_to_dict(path: TransferPath, alternatives=()):
    return {
        "schema_version": RESULT_SCHEMA_VERSION,
        "target": path.target,
        "l": path.length,
        "path": list(path.nodes),
        "cost": path.cost,
        "approximate": path.approximate,
        "edge_breakdown": [_breakdown(e, u, v) for e, (u, v) in zip(path.edges, _hops(path))],
        "alternatives": [a.to_dict() for a in alternatives],
    }


def _hops(path):
    seq, t = path.nodes[:-1], path.target
    hops = [(seq[0], t)]
    hops += list(zip(seq, seq[1:]))
    if len(seq) > 1:
        hops.append((seq[-1], t))
    return hops


def _breakdown(e, u, v):
    return {"from": u, "to": v, "h": e.h, "r": e.r, "cost": e.cost}


def result_to_json(path, alternatives=()) -> str:
    return json.dumps(result_to_dict(path, alternatives), indent=2, sort_keys=True) + "\n"

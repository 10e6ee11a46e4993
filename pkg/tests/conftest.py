import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from seqtran.affinity import AffinityParams, Edge, Node, SourceGraph  # noqa: E402
from seqtran.dataset import Sample, TaskDataset, TaskDescriptor  # noqa: E402


def node_id(name):
    return f"{name}-T1-ED"


def make_graph(costs, names=None, counts=None, params=AffinityParams()):
    """Graph over mutually compatible nodes; ``costs`` maps (u, v) names to cost.

    Node ids are ``<name>-T1-ED`` so id order follows name order.
    """
    if names is None:
        names = sorted({n for e in costs for n in e})
    counts = counts or {}
    nodes = tuple(Node(TaskDescriptor(n, "T1", "ED"), counts.get(n, 10)) for n in names)
    edges = tuple(Edge(*sorted((node_id(u), node_id(v))), 0.0, 1.0, float(c))
                  for (u, v), c in costs.items())
    return SourceGraph(nodes, edges, params)


def make_task(institute, modality, objective, images, labels):
    desc = TaskDescriptor(institute, modality, objective)
    return TaskDataset(desc, tuple(Sample(np.asarray(i, dtype=np.float64),
                                          np.asarray(l, dtype=np.uint8))
                                   for i, l in zip(images, labels)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.acceptance_results = []


def pytest_terminal_summary(terminalreporter, config):
    results = getattr(config, "acceptance_results", [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in results:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")

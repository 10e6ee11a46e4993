"""seqtran command line.

    seqtran build-graph --manifest m.json --out graph.json
    seqtran cluster     --graph graph.json --out partition.json
    seqtran select-path --graph graph.json --partition partition.json --manifest m.json --out path.json
    seqtran calibrate   --records rec.jsonl --manifest m.json --out params.json
    seqtran eval        --pred p.raw --gt g.raw --shape 64 64 32
    seqtran make-fixture --out-dir fixture/

Options may also come from ``--config file.json`` (keys are option names with
dashes replaced by underscores); explicit flags win. Every command exits 0 and
writes valid JSON on success, or exits non-zero with a JSON error object on
standard error. Output files are written atomically.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .affinity import AffinityParams, MetricConfig, SourceGraph, attach_target, build_graph
from .calibration import BoConfig, MetricCache, bayes_opt, calibration_to_json, read_records
from .clustering import (girvan_newman, partition_from_dict, partition_to_json,
                         select_representatives)
from .dataset import LABEL_DTYPE, load_manifest, read_volume
from .errors import SeqtranError, ValidationError
from .fixtures import write_fixture
from .ost import ost_general, ost_l2, rank_candidates, result_to_json
from .segmetrics import confusion, dice, iou
from .ssim import SsimParams

log = logging.getLogger("seqtran")

DEFAULTS = {
    "alpha": 1.0, "beta": 1.0, "mode": "one_minus_R", "pca_dim": 16, "ssim_window": 7,
    "length": 2, "solver": "sinkhorn", "seed": 0, "jobs": 1, "top": 5,
    "n_init": 8, "n_iter": 32, "bounds": [[0.0, 10.0], [0.0, 10.0]], "reverse": False,
}


def setup_logging():
    level = os.environ.get("SEQTRAN_LOG", "off").lower()
    levels = {"off": logging.CRITICAL + 1, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        level = "off"
    logging.basicConfig(level=levels[level], stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _resolve(args):
    """Merge defaults < config file < explicit flags."""
    conf = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from None
        conf.update({k.replace("-", "_"): v for k, v in loaded.items()})
        explicit = {k.replace("-", "_") for k in loaded}
    else:
        explicit = set()
    for k, v in vars(args).items():
        if v is not None:
            conf[k] = v
            explicit.add(k)
    ns = argparse.Namespace(**conf)
    ns.explicit = explicit
    return ns


def _require(conf, *names):
    for n in names:
        if getattr(conf, n, None) is None:
            raise ValidationError(f"--{n.replace('_', '-')} is required")


def _params(conf):
    return AffinityParams(float(conf.alpha), float(conf.beta), conf.mode)


def _metric_config(conf):
    if int(conf.pca_dim) < 1:
        raise ValidationError("--pca-dim must be >= 1")
    if int(conf.jobs) < 1:
        raise ValidationError("--jobs must be >= 1")
    return MetricConfig(int(conf.pca_dim), SsimParams(window=int(conf.ssim_window)),
                        conf.solver, int(conf.jobs))


def _read_graph(path):
    """The graph and the metric settings it was built with (may be empty)."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read graph {path}: {exc}") from None
    return SourceGraph.from_dict(doc), doc.get("metric_config", {})


def cmd_build_graph(conf):
    _require(conf, "manifest", "out")
    catalog = load_manifest(conf.manifest, jobs=int(conf.jobs))
    graph = build_graph(catalog, _params(conf), _metric_config(conf))
    doc = graph.to_dict()
    doc["metric_config"] = {"pca_dim": int(conf.pca_dim), "ssim_window": int(conf.ssim_window),
                            "solver": conf.solver}
    atomic_write(conf.out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return {"out": str(conf.out), "nodes": len(graph.nodes), "edges": len(graph.edges)}


def cmd_cluster(conf):
    _require(conf, "graph", "out")
    graph, _ = _read_graph(conf.graph)
    part = girvan_newman(graph)
    reps = select_representatives(graph, part)
    atomic_write(conf.out, partition_to_json(part, reps))
    return {"out": str(conf.out), "k": part.k, "modularity": part.modularity}


def cmd_select_path(conf):
    _require(conf, "graph", "partition", "manifest", "out")
    graph, built_with = _read_graph(conf.graph)
    # target edges must use the settings the source edges were computed with
    for key in ("pca_dim", "ssim_window", "solver"):
        if key in built_with and key not in conf.explicit:
            setattr(conf, key, built_with[key])
    try:
        part, reps = partition_from_dict(json.loads(Path(conf.partition).read_text()))
    except OSError as exc:
        raise ValidationError(f"cannot read partition {conf.partition}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed partition {conf.partition}: {exc}") from None
    catalog = load_manifest(conf.manifest, jobs=int(conf.jobs))
    if catalog.target is None:
        raise ValidationError("manifest has no target task")
    target_edges = attach_target(graph, catalog.target, catalog.sources, graph.params,
                                 _metric_config(conf))
    l = int(conf.length)
    if l == 2:
        path = ost_l2(graph, part, reps, target_edges)
    else:
        path = ost_general(graph, part, reps, target_edges, l)
    ranked = rank_candidates(graph, part, reps, target_edges, int(conf.top) + 1, l)
    alternatives = [p for p in ranked if p.nodes != path.nodes][:int(conf.top)]
    atomic_write(conf.out, result_to_json(path, alternatives))
    return {"out": str(conf.out), "path": list(path.nodes), "cost": path.cost}


def cmd_calibrate(conf):
    _require(conf, "records", "manifest", "out")
    records = read_records(conf.records)
    catalog = load_manifest(conf.manifest, jobs=int(conf.jobs))
    cache = MetricCache.from_catalog(catalog, records, _metric_config(conf))
    bo = BoConfig(tuple(tuple(b) for b in conf.bounds), int(conf.n_init), int(conf.n_iter),
                  int(conf.seed))
    params, trace = bayes_opt(records, cache, bo, conf.mode)
    atomic_write(conf.out, calibration_to_json(params, trace))
    return {"out": str(conf.out), "alpha": params.alpha, "beta": params.beta}


def _read_mask(path, shape):
    path = Path(path)
    if path.suffix == ".npy":
        try:
            return np.load(path)
        except OSError as exc:
            raise ValidationError(f"cannot read {path}: {exc}") from None
    if shape is None:
        raise ValidationError("--shape is required for raw volumes")
    return read_volume(path, shape, LABEL_DTYPE)


def cmd_eval(conf):
    _require(conf, "pred", "gt")
    shape = tuple(conf.shape) if getattr(conf, "shape", None) else None
    c = confusion(_read_mask(conf.pred, shape), _read_mask(conf.gt, shape))
    out = {"schema_version": 1, "tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn,
           "dice": dice(c), "iou": iou(c)}
    return out


def cmd_make_fixture(conf):
    _require(conf, "out_dir")
    path = write_fixture(conf.out_dir, seed=int(conf.seed), reverse=bool(conf.reverse))
    return {"manifest": str(path)}


class _Parser(argparse.ArgumentParser):
    """Usage errors are reported as JSON like every other failure."""

    def error(self, message):
        sys.stderr.write(json.dumps({"error": "UsageError", "message": message}) + "\n")
        sys.exit(2)


def build_parser():
    p = _Parser(prog="seqtran", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"seqtran {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON file with default option values")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--jobs", type=int)
        sp.add_argument("--out")

    def metric_opts(sp):
        sp.add_argument("--pca-dim", type=int)
        sp.add_argument("--ssim-window", type=int)
        sp.add_argument("--solver", choices=("sinkhorn", "exact"))

    sp = sub.add_parser("build-graph", help="compute the source task graph")
    common(sp)
    metric_opts(sp)
    sp.add_argument("--manifest")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--mode", choices=("one_minus_R", "signed_beta"))
    sp.set_defaults(func=cmd_build_graph)

    sp = sub.add_parser("cluster", help="Girvan-Newman clusters and representatives")
    common(sp)
    sp.add_argument("--graph")
    sp.set_defaults(func=cmd_cluster)

    sp = sub.add_parser("select-path", help="optimal sequential transfer path for the target")
    common(sp)
    metric_opts(sp)
    sp.add_argument("--graph")
    sp.add_argument("--partition")
    sp.add_argument("--manifest")
    sp.add_argument("--length", type=int)
    sp.add_argument("--top", type=int, help="number of alternative paths to report")
    sp.set_defaults(func=cmd_select_path)

    sp = sub.add_parser("calibrate", help="fit alpha/beta by Bayesian optimisation")
    common(sp)
    metric_opts(sp)
    sp.add_argument("--records")
    sp.add_argument("--manifest")
    sp.add_argument("--mode", choices=("one_minus_R", "signed_beta"))
    sp.add_argument("--n-init", type=int)
    sp.add_argument("--n-iter", type=int)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("eval", help="Dice and IoU of a predicted mask")
    sp.add_argument("--pred")
    sp.add_argument("--gt")
    sp.add_argument("--shape", type=int, nargs=3)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("make-fixture", help="write the bundled synthetic catalog")
    sp.add_argument("--out-dir")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--reverse", action="store_true", default=None,
                    help="list tasks in reverse order (for permutation checks)")
    sp.set_defaults(func=cmd_make_fixture)
    return p


def main(argv=None) -> int:
    setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    func = args.func
    del args.func
    try:
        conf = _resolve(args)
        summary = func(conf)
    except SeqtranError as exc:
        sys.stderr.write(json.dumps(exc.to_dict(), sort_keys=True) + "\n")
        return 1
    except (OSError, ValueError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())

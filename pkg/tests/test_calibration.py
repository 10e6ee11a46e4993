import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqtran.affinity import AffinityParams, MetricConfig
from seqtran.calibration import (BoConfig, GaussianProcess, MetricCache, TransferRecord,
                                 bayes_opt, calibration_to_json, expected_improvement, fit_gp,
                                 maximize, objective, path_cost, random_search, read_records,
                                 write_records)
from seqtran.errors import ValidationError
from seqtran.fixtures import synthetic_catalog

from oracles import spearman


def cache_with(pairs):
    return MetricCache({frozenset(k): v for k, v in pairs.items()})


def simple_instance():
    cache = cache_with({("a", "t"): (0.1, 0.9), ("b", "t"): (0.5, 0.5),
                        ("c", "t"): (0.9, 0.2), ("d", "t"): (0.3, 0.8)})
    costs = {s: path_cost(TransferRecord((s,), "t", 0.5), cache, AffinityParams()) for s in "abcd"}
    order = sorted(costs, key=costs.get)
    records = [TransferRecord((s,), "t", acc) for s, acc in zip(order, (0.9, 0.7, 0.5, 0.2))]
    return records, cache


def test_record_validation():
    with pytest.raises(ValidationError):
        TransferRecord((), "t", 0.5)
    with pytest.raises(ValidationError):
        TransferRecord(("a",), "t", 1.5)
    with pytest.raises(ValidationError):
        TransferRecord(("a", "t"), "t", 0.5)
    assert TransferRecord(("a", "b"), "t", 0.5).pairs() == [("a", "t"), ("a", "b"), ("b", "t")]
    assert TransferRecord(("a",), "t", 0.5).pairs() == [("a", "t")]


def test_path_cost_multi_hop():
    cache = cache_with({("a", "t"): (1.0, 0.5), ("a", "b"): (0.5, 1.0), ("b", "t"): (0.25, 0.75)})
    rec = TransferRecord(("a", "b"), "t", 0.5)
    assert path_cost(rec, cache, AffinityParams(2.0, 1.0)) == 2.5 + 1.0 + 0.75


def test_reverse_order_gives_one():
    records, cache = simple_instance()
    assert objective(AffinityParams(), records, cache) == pytest.approx(1.0, abs=1e-12)


def test_constant_and_insufficient_records():
    _, cache = simple_instance()
    with pytest.raises(ValidationError, match="constant records"):
        objective(AffinityParams(), [TransferRecord((s,), "t", 0.5) for s in "abcd"], cache)
    with pytest.raises(ValidationError, match="insufficient records"):
        objective(AffinityParams(), [TransferRecord((s,), "t", 0.5) for s in "ab"], cache)


def test_missing_metrics():
    with pytest.raises(ValidationError, match="no metrics"):
        path_cost(TransferRecord(("x",), "t", 0.3), MetricCache(), AffinityParams())


def _random_records(rng, n_targets=2, per_target=5):
    cache, records = MetricCache(), []
    for t in range(n_targets):
        for s in range(per_target):
            cache[frozenset((f"s{s}", f"t{t}"))] = (float(rng.random()), float(rng.random()))
            records.append(TransferRecord((f"s{s}",), f"t{t}", float(rng.integers(0, 4)) / 4))
    return records, cache


def test_spearman_oracle(rng):
    for _ in range(30):
        records, cache = _random_records(rng, 1, 5)
        if len({r.accuracy for r in records}) < 3:
            continue
        params = AffinityParams(float(rng.random() * 5), float(rng.random() * 5))
        neg = [-path_cost(r, cache, params) for r in records]
        expected = spearman(neg, [r.accuracy for r in records])
        assert objective(params, records, cache) == pytest.approx(expected, abs=1e-12)


def test_objective_averages_targets(rng):
    records, cache = _random_records(rng, 3, 6)
    params = AffinityParams(1.0, 2.0)
    per = []
    for t in ("t0", "t1", "t2"):
        recs = [r for r in records if r.target == t]
        accs = [r.accuracy for r in recs]
        if len(set(accs)) > 1:
            per.append(spearman([-path_cost(r, cache, params) for r in recs], accs))
    assert objective(params, records, cache) == pytest.approx(sum(per) / len(per), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), scale=st.floats(0.05, 1.0))
def test_accuracy_rescaling_invariance(seed, scale):
    rng = np.random.default_rng(seed)
    records, cache = _random_records(rng, 2, 6)
    if len({r.accuracy for r in records}) < 3:
        return
    scaled = [TransferRecord(r.source_path, r.target, r.accuracy * scale) for r in records]
    params = AffinityParams(1.0, 3.0)
    assert objective(params, records, cache) == pytest.approx(objective(params, scaled, cache), abs=1e-12)


def test_objective_bounded(rng):
    for _ in range(20):
        records, cache = _random_records(rng, 2, 6)
        if len({r.accuracy for r in records}) >= 3:
            assert -1.0 <= objective(AffinityParams(2.0, 0.5), records, cache) <= 1.0


# -- GP and acquisition -------------------------------------------------------

def test_ei_zero_at_observed_point():
    assert expected_improvement(np.array([0.4]), np.array([0.0]), best=0.4)[0] == 0.0
    assert expected_improvement(np.array([0.1]), np.array([0.0]), best=0.4)[0] == 0.0
    assert expected_improvement(np.array([0.4]), np.array([0.1]), best=0.4)[0] > 0.0


def test_gp_zero_variance_at_training_points(rng):
    X = rng.random((6, 2))
    gp = GaussianProcess(lengthscale=0.3).fit(X, rng.standard_normal(6))
    mu, sd = gp.predict(X)
    best = float(np.max(mu))
    assert np.all(sd < 1e-4)
    assert np.all(expected_improvement(mu, np.zeros_like(sd), best) == 0.0)


def test_gp_interpolates_within_10_jitter(rng):
    X = np.linspace(0, 1, 7)[:, None]
    y = np.sin(4 * X[:, 0])
    gp = GaussianProcess(lengthscale=0.2).fit(X, y)
    mu, _ = gp.predict(X)
    assert np.max(np.abs(mu - y)) <= 10 * gp.jitter * gp.y_std


def test_gp_jitter_escalation():
    X = np.zeros((5, 1))  # identical inputs: singular kernel without jitter
    gp = GaussianProcess(lengthscale=0.5, jitter=0.0).fit(X, np.arange(5.0))
    assert gp.jitter > 0.0
    assert np.all(np.isfinite(gp.predict(X)[0]))


def test_fit_gp_picks_from_grid(rng):
    X = rng.random((8, 1))
    gp = fit_gp(X, np.sin(3 * X[:, 0]))
    assert np.isfinite(gp.log_marginal_likelihood())


def test_quadratic_budget_20():
    def f(x):
        return -(x[0] - 0.3) ** 2
    for seed in range(10):
        res = maximize(f, [(-1.0, 1.0)], n_init=4, n_iter=16, seed=seed)
        assert len(res.y) == 20
        assert abs(res.best_x[0] - 0.3) <= 1e-2
        assert res.best_y >= random_search(f, [(-1.0, 1.0)], 20, seed=seed).best_y


def test_n_iter_zero_returns_best_initial():
    res = maximize(lambda x: -abs(x[0] - 1), [(0.0, 4.0)], n_init=5, n_iter=0, seed=1)
    assert len(res.y) == 5 and res.best_y == res.y.max()


def test_trace_monotone_and_seeded():
    records, cache = simple_instance()
    cfg = BoConfig(n_init=4, n_iter=6, seed=11)
    p1, t1 = bayes_opt(records, cache, cfg)
    p2, t2 = bayes_opt(records, cache, cfg)
    assert t1 == t2 and p1 == p2
    best = [t["best_so_far"] for t in t1]
    assert best == sorted(best) and len(t1) == 10
    assert max(t["objective"] for t in t1) == pytest.approx(1.0)


def test_bo_config_validation():
    with pytest.raises(ValidationError):
        BoConfig(n_init=1)
    with pytest.raises(ValidationError):
        BoConfig(bounds=((1.0, 1.0), (0.0, 1.0)))


# -- I/O and catalog-backed cache -------------------------------------------------

def test_records_round_trip(tmp_path):
    records, _ = simple_instance()
    path = tmp_path / "records.jsonl"
    write_records(path, records)
    assert read_records(path) == records
    path.write_text('{"source_path": ["a"]}\n')
    with pytest.raises(ValidationError, match="line 1"):
        read_records(path)


def test_calibration_json():
    records, cache = simple_instance()
    params, trace = bayes_opt(records, cache, BoConfig(n_init=3, n_iter=1))
    doc = json.loads(calibration_to_json(params, trace))
    assert set(doc) >= {"alpha", "beta", "objective", "trace"}
    assert doc["objective"] == max(t["objective"] for t in trace)


def test_cache_from_catalog():
    cat = synthetic_catalog(shape=(8, 8, 7))
    records = [TransferRecord(("01-T1ce-NCR", "01-T2-NCR"), "16-T2-NCR", 0.7),
               TransferRecord(("04-T2-ET",), "16-T2-NCR", 0.4)]
    cache = MetricCache.from_catalog(cat, records, MetricConfig())
    assert len(cache) == 4
    with pytest.raises(ValidationError, match="unknown task"):
        MetricCache.from_catalog(cat, [TransferRecord(("zz-T1-ED",), "16-T2-NCR", 0.5)])

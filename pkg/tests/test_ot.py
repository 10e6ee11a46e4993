import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqtran.errors import ConvergenceError, ValidationError
from seqtran.ot import (DiscreteDistribution as D, exact_transport_lp, image_similarity_H,
                        sinkhorn, wasserstein, wasserstein_1d)


def rand_dist(rng, n, d):
    return D(rng.random((n, d)), rng.dirichlet(np.ones(n)))


def test_distribution_validation():
    with pytest.raises(ValidationError):
        D(np.zeros((2, 1)), [0.5, 0.6])
    with pytest.raises(ValidationError):
        D(np.zeros((0, 1)), [])
    with pytest.raises(ValidationError):
        D([[np.inf]], [1.0])
    assert D([0.0, 1.0], [0.5, 0.5]).dim == 1


# -- wasserstein_1d ---------------------------------------------------------------

def test_w1d_identity(rng):
    a = rand_dist(rng, 5, 1)
    assert wasserstein_1d(a, a) == 0.0


def test_w1d_point_masses():
    assert wasserstein_1d(D([[0.0]], [1.0]), D([[1.0]], [1.0])) == 1.0


def test_w1d_uniform_pairs_against_lp():
    a = D.uniform([[0.0], [2.0]])
    b = D.uniform([[1.0], [3.0]])
    assert wasserstein_1d(a, b) == pytest.approx(1.0, abs=1e-12)
    assert exact_transport_lp(a, b).cost == pytest.approx(1.0, abs=1e-9)


def test_w1d_rejects_2d(rng):
    with pytest.raises(ValidationError):
        wasserstein_1d(rand_dist(rng, 3, 2), rand_dist(rng, 3, 2))


# -- sinkhorn -------------------------------------------------------------------

def test_sinkhorn_single_atom():
    v = D([[0.3, -1.0]], [1.0])
    plan = sinkhorn(v, v, 0.1)
    assert plan.cost == 0.0
    np.testing.assert_array_equal(plan.matrix, [[1.0]])


def test_sinkhorn_three_atoms_vs_lp(rng):
    a = D.uniform(rng.random((3, 2)))
    b = D.uniform(rng.random((3, 2)))
    exact = exact_transport_lp(a, b).cost
    assert sinkhorn(a, b, 1e-3, max_iter=20_000, tol=1e-9).cost == pytest.approx(exact, abs=1e-3)


@pytest.mark.parametrize("eps", [1e-3, 0.1, 5.0])
def test_sinkhorn_point_mass_forced_plan(eps):
    u, v = np.array([3.0, 4.0]), np.array([-1.0, 0.0])
    a = D([[0.0, 0.0]], [1.0])
    b = D.uniform([u, v])
    assert sinkhorn(a, b, eps).cost == pytest.approx((5.0 + 1.0) / 2, abs=1e-12)
    assert sinkhorn(b, a, eps).cost == pytest.approx(3.0, abs=1e-12)


def test_sinkhorn_marginals(rng):
    for _ in range(20):
        a, b = rand_dist(rng, 6, 2), rand_dist(rng, 4, 2)
        plan = sinkhorn(a, b, 0.05, tol=1e-9)
        np.testing.assert_allclose(plan.matrix.sum(axis=1), a.weights, atol=1e-6)
        np.testing.assert_allclose(plan.matrix.sum(axis=0), b.weights, atol=1e-6)
        assert np.all(plan.matrix >= 0)


def test_sinkhorn_errors(rng):
    a, b = rand_dist(rng, 4, 2), rand_dist(rng, 4, 2)
    with pytest.raises(ValidationError):
        sinkhorn(a, b, 0.0)
    with pytest.raises(ValidationError):
        sinkhorn(a, rand_dist(rng, 4, 3), 0.1)
    with pytest.raises(ConvergenceError) as info:
        sinkhorn(a, b, 1e-4, max_iter=1, tol=1e-15)
    assert info.value.marginal_error > 0


def test_sinkhorn_never_below_exact(rng):
    for _ in range(30):
        a, b = rand_dist(rng, 5, 2), rand_dist(rng, 6, 2)
        exact = exact_transport_lp(a, b).cost
        for eps in (1.0, 0.1, 0.01):
            assert sinkhorn(a, b, eps, max_iter=20_000, tol=1e-9).cost >= exact - 1e-9


def test_sinkhorn_cost_monotone_in_epsilon():
    rng = np.random.default_rng(7)
    for _ in range(20):
        a, b = rand_dist(rng, 5, 2), rand_dist(rng, 5, 2)
        costs = [sinkhorn(a, b, eps, max_iter=50_000, tol=1e-11).cost
                 for eps in (0.5, 0.2, 0.1, 0.05, 0.02)]
        assert all(x >= y - 1e-7 for x, y in zip(costs, costs[1:]))


def test_sinkhorn_converges_to_exact_as_eps_shrinks(rng):
    a, b = rand_dist(rng, 6, 3), rand_dist(rng, 6, 3)
    exact = exact_transport_lp(a, b).cost
    gaps = [sinkhorn(a, b, eps, max_iter=50_000, tol=1e-10).cost - exact for eps in (0.3, 0.03, 0.003)]
    assert gaps[-1] < 1e-3 and gaps[0] >= gaps[-1]


# -- exact LP -------------------------------------------------------------------

def test_lp_identical():
    a = D.uniform([[0.0, 1.0], [2.0, 0.5]])
    assert exact_transport_lp(a, a).cost == pytest.approx(0.0, abs=1e-12)


def test_lp_zero_cost_matching():
    a = D([[0.0], [1.0]], [0.5, 0.5])
    plan = exact_transport_lp(a, a)
    assert plan.cost == 0.0
    np.testing.assert_allclose(plan.matrix, np.diag([0.5, 0.5]), atol=1e-12)


def test_lp_matches_w1d(rng):
    for _ in range(30):
        a, b = rand_dist(rng, int(rng.integers(1, 9)), 1), rand_dist(rng, int(rng.integers(1, 9)), 1)
        assert exact_transport_lp(a, b).cost == pytest.approx(wasserstein_1d(a, b), abs=1e-9)


def test_lp_size_limit():
    a = D.uniform(np.zeros((101, 1)))
    b = D.uniform(np.zeros((100, 1)))
    with pytest.raises(ValidationError, match="exceeds"):
        exact_transport_lp(a, b)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000), d=st.integers(1, 3))
def test_metric_axioms_lp(seed, d):
    rng = np.random.default_rng(seed)
    a, b = rand_dist(rng, int(rng.integers(1, 7)), d), rand_dist(rng, int(rng.integers(1, 7)), d)
    ab, ba = exact_transport_lp(a, b).cost, exact_transport_lp(b, a).cost
    assert ab >= -1e-12 and abs(ab - ba) < 1e-9
    assert exact_transport_lp(a, a).cost < 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_triangle_1d(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (rand_dist(rng, int(rng.integers(1, 7)), 1) for _ in range(3))
    lp = lambda p, q: exact_transport_lp(p, q).cost  # noqa: E731
    assert lp(a, c) <= lp(a, b) + lp(b, c) + 1e-9


# -- production wrapper and H ---------------------------------------------------

def test_wasserstein_exactly_symmetric(rng):
    for solver in ("sinkhorn", "exact"):
        for _ in range(10):
            a, b = rand_dist(rng, 5, 2), rand_dist(rng, 4, 2)
            assert wasserstein(a, b, solver=solver) == wasserstein(b, a, solver=solver)


def test_wasserstein_unknown_solver(rng):
    with pytest.raises(ValidationError):
        wasserstein(rand_dist(rng, 2, 1), rand_dist(rng, 2, 1), solver="magic")


def test_wasserstein_coincident_supports():
    a = D([[1.0, 1.0], [1.0, 1.0]], [0.3, 0.7])
    assert wasserstein(a, D([[1.0, 1.0]], [1.0])) == 0.0


def test_H_self_zero(rng):
    d = rand_dist(rng, 4, 2)
    assert image_similarity_H([d], [d]) == 0.0


def test_H_two_terms():
    p = D([[0.0]], [1.0])
    q1, q2 = D([[1.0]], [1.0]), D([[3.0]], [1.0])
    assert image_similarity_H([p], [q1, q2], solver="exact") == 2.0


def test_H_double_loop_oracle(rng):
    di = [rand_dist(rng, int(rng.integers(1, 6)), 1) for _ in range(3)]
    dj = [rand_dist(rng, int(rng.integers(1, 6)), 1) for _ in range(3)]
    total = 0.0
    for p in di:
        for q in dj:
            total += wasserstein_1d(p, q)
    assert image_similarity_H(di, dj, solver="exact") == pytest.approx(total / 9, abs=1e-12)


def test_H_symmetric_and_parallel(rng):
    di = [rand_dist(rng, 5, 2) for _ in range(3)]
    dj = [rand_dist(rng, 4, 2) for _ in range(2)]
    h = image_similarity_H(di, dj)
    assert h == image_similarity_H(dj, di)
    assert h == image_similarity_H(di, dj, jobs=4)


def test_H_empty():
    with pytest.raises(ValidationError):
        image_similarity_H([], [D([[0.0]], [1.0])])

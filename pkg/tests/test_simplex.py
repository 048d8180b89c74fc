import numpy as np
import pytest

from presaise.policy_opt import solve_lp_max


def random_master(seed, n_rows=12, n_cols=20, m=3):
    """Random set-partitioning-style master with a slack identity block."""
    rng = np.random.default_rng(seed)
    A_cols = (rng.random((n_rows, n_cols)) < 0.35).astype(float)
    A_cols = np.vstack([A_cols, np.ones(n_cols)])  # cardinality row
    slacks = np.eye(n_rows + 1)
    A = np.hstack([A_cols, slacks])
    b = np.concatenate([np.ones(n_rows), [float(m)]])
    c = np.concatenate([rng.uniform(0.0, 50.0, n_cols),
                        -rng.uniform(10.0, 100.0, n_rows), [0.0]])
    basis = list(range(n_cols, n_cols + n_rows + 1))
    return A, b, c, basis


def test_tiny_known_optimum():
    # max 3x + 2y st. x + y <= 4, x <= 2  ->  x=2, y=2, obj 10
    A = np.array([[1.0, 1.0, 1.0, 0.0],
                  [1.0, 0.0, 0.0, 1.0]])
    b = np.array([4.0, 2.0])
    c = np.array([3.0, 2.0, 0.0, 0.0])
    res = solve_lp_max(A, b, c, basis=[2, 3])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(10.0)
    np.testing.assert_allclose(res.x[:2], [2.0, 2.0], atol=1e-9)


def test_unbounded_detected():
    A = np.array([[1.0, -1.0, 1.0]])
    b = np.array([1.0])
    c = np.array([0.0, 1.0, 0.0])
    res = solve_lp_max(A, b, c, basis=[2])
    assert res.status == "unbounded"


@pytest.mark.parametrize("seed", range(20))
def test_random_masters_satisfy_optimality_certificates(seed):
    A, b, c, basis = random_master(seed)
    res = solve_lp_max(A, b, c, basis)
    assert res.status == "optimal"
    x, y = res.x, res.duals
    # primal feasibility
    assert x.min() >= -1e-9
    np.testing.assert_allclose(A @ x, b, atol=1e-7)
    # dual feasibility: no reduced cost above tolerance
    reduced = c - y @ A
    assert reduced.max() <= 1e-7
    # complementary slackness
    assert np.abs(x * reduced).max() <= 1e-7
    # strong duality certifies optimality independently of the pivot path
    assert y @ b == pytest.approx(c @ x, abs=1e-7)


def test_degenerate_rhs_terminates():
    # duplicate rows and zero rhs entries force degenerate pivots
    A = np.array([
        [1.0, 1.0, 0.0, 1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 1.0, 0.0, 0.0, 1.0],
    ])
    b = np.array([1.0, 1.0, 0.0])
    c = np.array([5.0, 4.0, 1.0, 0.0, 0.0, 0.0])
    res = solve_lp_max(A, b, c, basis=[3, 4, 5])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(5.0)


def test_rejects_negative_rhs():
    with pytest.raises(ValueError):
        solve_lp_max(np.eye(2), np.array([1.0, -1.0]), np.zeros(2), [0, 1])

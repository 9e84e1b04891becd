import numpy as np
import pytest

from silvar import RegularizerSpec, SolverConfig, SolverError
from silvar.conjugate import eval_link
from silvar.isotonic import lmr_exact
from silvar.models import FixedLinkLoss, make_link
from silvar.solver import CalibratedLoss, marginal_gradient, proximal_fit


def test_gradient_vanishes_on_feasible_targets(rng):
    X = rng.normal(size=(3, 6))
    A = rng.normal(size=(2, 3))
    res = marginal_gradient(A @ X, X, A)
    assert np.allclose(res.gradient, 0.0, atol=1e-10)
    assert np.allclose(res.fitted, A @ X)


def test_gradient_two_point_example():
    res = marginal_gradient(np.array([[0.0, 2.0]]), np.eye(2), np.array([[0.0, 1.0]]))
    assert np.allclose(res.fitted, [[0.5, 1.5]])
    assert np.allclose(res.gradient, [[0.25, -0.25]])
    assert res.link.knots.tolist() == [0.0, 1.0]


def test_dykstra_and_exact_gradients_agree(rng):
    X, Y, A = rng.normal(size=(4, 30)), rng.normal(size=(3, 30)), rng.normal(size=(3, 4))
    g1 = marginal_gradient(Y, X, A, SolverConfig(lmr_method="exact")).gradient
    g2 = marginal_gradient(Y, X, A, SolverConfig(lmr_method="dykstra", dykstra_tolerance=1e-12)).gradient
    assert np.allclose(g1, g2, atol=1e-8)


def test_gradient_matches_finite_differences_when_slope_bound_binds(rng):
    # steep targets keep every Lipschitz constraint active, so the calibrated
    # loss is locally the smooth squared loss of theta + c
    X = rng.normal(size=(3, 8))
    A = rng.normal(size=(2, 3))
    Y = 3.0 * (A @ X) + 0.01 * rng.normal(size=(2, 8))
    loss = CalibratedLoss(Y, SolverConfig())
    grad = marginal_gradient(Y, X, A).gradient
    h = 1e-6
    for i in range(2):
        for j in range(3):
            E = np.zeros_like(A)
            E[i, j] = h
            fd = (loss.evaluate((A + E) @ X)[0] - loss.evaluate((A - E) @ X)[0]) / (2 * h)
            assert fd == pytest.approx(grad[i, j], rel=1e-5, abs=1e-8)


def test_fixed_link_loss_gradient_matches_finite_differences(rng):
    X, A = rng.normal(size=(3, 7)), rng.normal(size=(2, 3))
    Y = rng.normal(size=(2, 7))
    for name in ("identity", "softplus", "scaled_logistic"):
        loss = FixedLinkLoss(Y, make_link(name, 1.5))
        _, r, _ = loss.evaluate(A @ X)
        grad = r @ X.T / 7
        h = 1e-6
        for i in range(2):
            for j in range(3):
                E = np.zeros_like(A)
                E[i, j] = h
                fd = (loss.evaluate((A + E) @ X)[0] - loss.evaluate((A - E) @ X)[0]) / (2 * h)
                assert fd == pytest.approx(grad[i, j], rel=1e-5, abs=1e-8)


def test_fixed_link_objective_is_midpoint_convex(rng):
    for _ in range(50):
        X, Y = rng.normal(size=(3, 6)), rng.normal(size=(2, 6))
        loss = FixedLinkLoss(Y, make_link("softplus"))
        P, Q = rng.normal(size=(2, 3)), rng.normal(size=(2, 3))
        f = lambda M: loss.evaluate(M @ X)[0]  # noqa: E731
        assert f((P + Q) / 2) <= (f(P) + f(Q)) / 2 + 1e-8


def test_huge_penalties_give_zero_model(rng):
    X, Y = rng.normal(size=(4, 20)), rng.normal(size=(3, 20)) + 2.0
    model, report = proximal_fit(Y, X, RegularizerSpec("element_l1", "nuclear_norm", 1e6, 1e6))
    assert np.all(model.A == 0) and np.all(model.L == 0)
    assert model.link.knots.size == 1
    assert model.link.values[0] == pytest.approx(Y.mean())
    assert report.converged


def test_identity_data_recovery_and_monotone_trace(rng):
    m, p, n = 4, 6, 300
    A0 = rng.normal(size=(m, p)) * (rng.random((m, p)) < 0.4)
    X = rng.normal(size=(p, n))
    Y = A0 @ X + 0.05 * rng.normal(size=(m, n))
    A_ls = np.linalg.lstsq(X.T, Y.T, rcond=None)[0].T
    bound = np.linalg.norm(A_ls - A0) + np.linalg.norm(Y - A_ls @ X) / np.sqrt(n)
    for ls, ll in [(0.01, 0.1), (0.03, 0.3)]:
        model, report = proximal_fit(Y, X, RegularizerSpec("element_l1", "nuclear_norm", ls, ll))
        trace = np.array(report.objective_trace)
        assert np.all(np.diff(trace) <= 1e-12)
        assert np.linalg.norm(model.A + model.L - A0) < bound
        assert model.link.check(1e-9)


def test_robust_pca_support_recovery():
    rng = np.random.default_rng(7)
    n = 20
    S0 = np.zeros((n, n))
    idx = rng.choice(n * n, size=30, replace=False)
    S0.flat[idx] = rng.choice([-1, 1], size=30) * rng.uniform(2, 4, size=30)
    L0 = np.outer(rng.normal(size=n), rng.normal(size=n))
    Y = S0 + L0 + 0.01 * rng.normal(size=(n, n))
    model, _ = proximal_fit(Y, np.eye(n), RegularizerSpec("element_l1", "nuclear_norm", 0.05, 0.3))
    est = np.abs(model.A) > 1e-3
    truth = S0 != 0
    tp = np.sum(est & truth)
    f1 = 2 * tp / (est.sum() + truth.sum())
    assert f1 >= 0.8


def test_gradient_is_shared_between_parts(rng):
    # one gradient step from zero moves A and L by the same pre-prox amount
    X, Y = rng.normal(size=(3, 10)), rng.normal(size=(2, 10))
    model, _ = proximal_fit(Y, X, RegularizerSpec("none", "none"), SolverConfig(max_iters=1))
    assert np.allclose(model.A, model.L)


def test_freeze_L_and_warm_start(rng):
    X, Y = rng.normal(size=(3, 40)), rng.normal(size=(2, 40))
    reg = RegularizerSpec("element_l1", "nuclear_norm", 0.05, 0.05)
    model, _ = proximal_fit(Y, X, reg, freeze_L=True)
    assert np.all(model.L == 0)
    again, report = proximal_fit(Y, X, reg, init=(model.A, model.L), freeze_L=True)
    assert report.iterations <= 3
    assert np.allclose(again.A, model.A, atol=1e-4)


def test_zero_variance_column_stays_in_deadzone(rng):
    X = rng.normal(size=(4, 50))
    X[2] = 0.0
    Y = np.tanh(rng.normal(size=(2, 4)) @ X)
    model, _ = proximal_fit(Y, X, RegularizerSpec("element_l1", "nuclear_norm", 0.01, 0.1))
    assert np.allclose(model.A[:, 2], 0.0) and np.allclose(model.L[:, 2], 0.0, atol=1e-12)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_objective_raises(rng):
    X = rng.normal(size=(2, 5))
    Y = rng.normal(size=(1, 5)) * 1e200
    with pytest.raises(SolverError):
        proximal_fit(Y, X, RegularizerSpec())


def test_report_fields(rng):
    X, Y = rng.normal(size=(3, 20)), rng.normal(size=(2, 20))
    model, report = proximal_fit(Y, X, RegularizerSpec("element_l1", "nuclear_norm", 0.05, 0.05))
    d = report.to_dict()
    assert d["iterations"] == len(d["objective_trace"]) - 1
    assert np.isfinite(d["pseudo_likelihood"]) and d["pseudo_likelihood"] >= -1e-12
    assert np.allclose(eval_link(model.link, (model.A + model.L) @ X).ravel(),
                       lmr_exact(Y.ravel(), ((model.A + model.L) @ X).ravel()), atol=1e-9)

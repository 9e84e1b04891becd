"""Accelerated proximal gradient learning of the link, sparse and low-rank parts.

The smooth part of the objective is evaluated through a *loss* object with an
``evaluate(Theta)`` method returning ``(value, residual, link)``; the gradient
with respect to both ``A`` and ``L`` is ``residual @ X.T / n``.
"""

from __future__ import annotations

import time
from typing import NamedTuple, Optional

import numpy as np

from . import regularizers
from .conjugate import link_from_fit, objective_value
from .core import (
    FitReport,
    LinkEstimate,
    RegularizerSpec,
    SilvarModel,
    SolverConfig,
    SolverError,
)
from .isotonic import lmr, lmr_exact


class MarginalGradient(NamedTuple):
    gradient: np.ndarray
    link: LinkEstimate
    fitted: np.ndarray


def fit_link_values(y, theta, config: Optional[SolverConfig] = None) -> np.ndarray:
    """LMR of ``y`` against index ``theta`` with the configured method."""
    config = config or SolverConfig()
    if config.lmr_method == "dykstra":
        return lmr(y, theta, config)
    return lmr_exact(y, theta)


def marginal_gradient(Y, X, A_plus_L, config: Optional[SolverConfig] = None) -> MarginalGradient:
    """Gradient of the link-marginalized loss with respect to ``A`` (equal to that for ``L``).

    The link is refit by LMR on ``(vec Y, vec Theta)`` and plugged into the
    residual: ``(g_hat(Theta) - Y) X^T / n``.
    """
    Y = np.asarray(Y, dtype=float)
    X = np.asarray(X, dtype=float)
    Theta = np.asarray(A_plus_L, dtype=float) @ X
    if Theta.shape != Y.shape:
        raise ValueError(f"(A + L) X has shape {Theta.shape}, Y has {Y.shape}")
    ghat = fit_link_values(Y.ravel(), Theta.ravel(), config).reshape(Y.shape)
    grad = (ghat - Y) @ X.T / Y.shape[1]
    return MarginalGradient(grad, link_from_fit(Theta.ravel(), ghat.ravel()), ghat)


class CalibratedLoss:
    """Squared loss of the LMR-calibrated fit, ``||g_hat(Theta) - Y||^2 / (2n)``.

    This is the tight lower bound of the pseudo-likelihood over 1-Lipschitz
    monotone links and is the quantity the line search and trace use.
    """

    def __init__(self, Y, config: SolverConfig):
        self.Y = Y
        self.y = Y.ravel()
        self.n = Y.shape[1]
        self.config = config
        self.lipschitz = 1.0

    def evaluate(self, Theta):
        ghat = fit_link_values(self.y, Theta.ravel(), self.config).reshape(self.Y.shape)
        r = ghat - self.Y
        value = 0.5 * float(np.sum(r * r)) / self.n
        return value, r, None

    def link(self, Theta):
        ghat = fit_link_values(self.y, Theta.ravel(), self.config)
        return link_from_fit(Theta.ravel(), ghat)


def _prox_step(reg, order, freeze_L, A_y, L_y, grad, step):
    pa = regularizers.prox_h1(reg, A_y - step * grad, step, order)
    if freeze_L:
        return pa.argmin, L_y, pa.penalty_value
    pl = regularizers.prox_h2(reg, L_y - step * grad, step, order)
    return pa.argmin, pl.argmin, pa.penalty_value + pl.penalty_value


def proximal_fit(
    Y,
    X,
    reg: RegularizerSpec,
    config: Optional[SolverConfig] = None,
    *,
    order: int = 1,
    mode: str = "multitask",
    freeze_L: bool = False,
    loss=None,
    init: Optional[tuple] = None,
):
    """Minimize ``loss((A + L) X) + h1(A) + h2(L)`` from ``A = L = 0``.

    Accelerated proximal gradient with function-value momentum restart: when a
    momentum step would raise the objective, momentum is dropped and the step
    is retaken from the last iterate, so the recorded trace never increases.
    The plain step starts from ``n / (b ||X||_2^2)`` (``b = 2`` when both parts
    move) and shrinks until the composite objective does not increase.

    ``loss`` defaults to :class:`CalibratedLoss` (link learned by LMR);
    ``freeze_L`` pins ``L`` at zero. Returns ``(SilvarModel, FitReport)``.
    """
    config = config or SolverConfig()
    Y = np.asarray(Y, dtype=float)
    X = np.asarray(X, dtype=float)
    m, n = Y.shape
    p = X.shape[0]
    if X.shape[1] != n:
        raise ValueError("X and Y must have the same number of columns")
    loss = loss or CalibratedLoss(Y, config)
    t0 = time.perf_counter()

    if init is None:
        A = np.zeros((m, p))
        L = np.zeros((m, p))
    else:
        A = np.array(init[0], dtype=float)
        L = np.zeros((m, p)) if freeze_L else np.array(init[1], dtype=float)

    def penalty(A_, L_):
        return regularizers.penalty(reg, A_, L_ if not freeze_L else 0 * L_, order)

    f_x, r_x, _ = loss.evaluate((A + L) @ X)
    F_x = f_x + penalty(A, L)
    if not np.isfinite(F_x):
        raise SolverError("objective is not finite at the starting point; check data scaling")
    report = FitReport(objective_trace=[F_x])
    A_prev, L_prev = A, L
    momentum = 1.0
    # (A, L) enter only through A + L, which doubles the curvature unless L is frozen
    blocks = 1 if freeze_L else 2
    base_step = config.initial_step * n / max(blocks * loss.lipschitz * np.linalg.norm(X, 2) ** 2, 1e-300)
    step = base_step
    growth = 1.0 / np.sqrt(config.backtracking_shrink)

    for it in range(config.max_iters):
        momentum_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * momentum * momentum))
        accepted = False
        restarted = False
        backtracked = False
        if config.accelerate and momentum > 1.0:
            beta = (momentum - 1.0) / momentum_next
            A_y = A + beta * (A - A_prev)
            L_y = L + beta * (L - L_prev)
            f_y, r_y, _ = loss.evaluate((A_y + L_y) @ X)
            grad = r_y @ X.T / n
            A_new, L_new, h_new = _prox_step(reg, order, freeze_L, A_y, L_y, grad, step)
            f_new, r_new, _ = loss.evaluate((A_new + L_new) @ X)
            F_new = f_new + h_new
            accepted = F_new <= F_x
            if accepted and float(np.sum((A_y - A_new) * (A_new - A)) + np.sum((L_y - L_new) * (L_new - L))) > 0:
                # the step opposes the momentum direction: keep it but restart momentum
                restarted = True
                report.restarts += 1
            if not accepted:
                # function-value restart: drop momentum, retake the step from the iterate
                restarted = True
                report.restarts += 1
        if not accepted:
            grad = r_x @ X.T / n
            trial = step
            while trial >= config.min_step:
                A_new, L_new, h_new = _prox_step(reg, order, freeze_L, A, L, grad, trial)
                f_new, r_new, _ = loss.evaluate((A_new + L_new) @ X)
                F_new = f_new + h_new
                if F_new <= F_x:
                    accepted = True
                    break
                report.backtracks += 1
                trial *= config.backtracking_shrink
            if not accepted:
                # no descent from the iterate at any step length: stationary
                report.converged = True
                report.final_step = trial
                break
            backtracked = trial < step
            step = trial
        if not np.isfinite(F_new):
            raise SolverError("objective became non-finite; check data scaling")
        A_prev, L_prev = A, L
        A, L = A_new, L_new
        momentum = 1.0 if restarted else momentum_next
        change = F_x - F_new
        F_x, f_x, r_x = F_new, f_new, r_new
        report.objective_trace.append(F_x)
        report.iterations = it + 1
        report.final_step = step
        if not backtracked:
            step = min(base_step, step * growth)
        if change <= config.objective_tolerance * max(abs(F_x), 1e-12):
            report.converged = True
            break

    Theta = (A + L) @ X
    link = loss.link(Theta)
    report.wall_time = time.perf_counter() - t0
    try:
        report.pseudo_likelihood = objective_value(Y, Theta, link)
    except Exception:  # reporting only
        report.pseudo_likelihood = float("nan")
    model = SilvarModel(
        link=link,
        A=A,
        L=np.zeros_like(A) if freeze_L else L,
        mode=mode,
        order=order,
        lambda_s=reg.lambda_s,
        lambda_l=reg.lambda_l,
    )
    return model, report

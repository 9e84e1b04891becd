"""User-facing fits: multitask and autoregressive models, trend extraction, baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg
from scipy.special import spence

from . import regularizers
from .conjugate import eval_link, link_from_fit
from .core import (
    Dataset,
    DimensionError,
    RegularizerSpec,
    SilvarModel,
    SolverConfig,
    SolverError,
    validate_dataset,
)
from .solver import proximal_fit


# ---------------------------------------------------------------- designs


@dataclass(frozen=True)
class ArDesign:
    """Lagged regression design of an ``N x K`` series for order ``M``.

    ``Y`` holds columns ``M..K-1`` (0-based) and column ``k - M`` of ``X``
    stacks ``x_{k-1}, ..., x_{k-M}`` with the lag-1 block on top.
    """

    series: np.ndarray
    order: int

    def __post_init__(self):
        s = np.asarray(self.series, dtype=float)
        if s.ndim != 2:
            raise DimensionError("series must be an N x K matrix")
        if self.order < 1 or s.shape[1] <= self.order:
            raise DimensionError(f"need K > M >= 1, got K={s.shape[1]}, M={self.order}")
        if not np.all(np.isfinite(s)):
            raise ValueError("series contains non-finite values")
        object.__setattr__(self, "series", s)

    @property
    def Y(self) -> np.ndarray:
        return self.series[:, self.order:]

    @property
    def X(self) -> np.ndarray:
        K = self.series.shape[1]
        M = self.order
        return np.vstack([self.series[:, M - i:K - i] for i in range(1, M + 1)])


@dataclass(frozen=True)
class TrendEstimate:
    L_prime: np.ndarray
    reliable_range: tuple  # 1-based inclusive column range
    ridge: float
    converged: bool = True


def lambda_grid(i_min: int, i_max: int) -> np.ndarray:
    """Regularization values ``10 ** (i / 4)`` for integer ``i`` in ``[i_min, i_max]``."""
    if i_max < i_min:
        raise ValueError("empty exponent range")
    return 10.0 ** (np.arange(i_min, i_max + 1) / 4.0)


# ---------------------------------------------------------------- SILVar fits


def fit_silvar(d: Dataset, reg: RegularizerSpec, config: Optional[SolverConfig] = None, *, init=None):
    """Multitask fit of ``Y ~ g((A + L) X)`` with the link learned jointly."""
    d = validate_dataset(d)
    if reg.h1_kind == "group_l2_across_lags":
        raise ValueError("group sparsity across lags needs autoregressive mode")
    return proximal_fit(d.Y, d.X, reg, config, init=init)


def fit_silvar_ar(series, M: int, reg: RegularizerSpec, config: Optional[SolverConfig] = None, *, init=None):
    """Autoregressive fit on the lagged design of ``series`` (requires ``K > 2M``)."""
    series = np.asarray(series, dtype=float)
    if series.ndim != 2:
        raise DimensionError("series must be an N x K matrix")
    if series.shape[1] <= 2 * M:
        raise DimensionError(f"series length K={series.shape[1]} must exceed 2M={2 * M}")
    design = ArDesign(series, M)
    return proximal_fit(design.Y, design.X, reg, config, order=M, mode="autoregressive", init=init)


def sparse_sim_baseline(d: Dataset, reg: RegularizerSpec, config: Optional[SolverConfig] = None, *, init=None):
    """Sparse single index model: same solver with ``L`` pinned at zero."""
    d = validate_dataset(d)
    reg = RegularizerSpec(reg.h1_kind, "none", reg.lambda_s, 0.0)
    return proximal_fit(d.Y, d.X, reg, config, freeze_L=True, init=init)


def fit_rpca(Y, reg: RegularizerSpec, config: Optional[SolverConfig] = None):
    """Sparse plus low-rank decomposition of ``Y`` through a monotone link (``X = I``)."""
    Y = np.asarray(Y, dtype=float)
    m, n = Y.shape
    if m != n:
        raise DimensionError("with X = I the response must be square")
    return proximal_fit(Y, np.eye(n), reg, config)


# ---------------------------------------------------------------- fixed links


@dataclass(frozen=True)
class FixedLink:
    """Known link ``g`` with antiderivative ``G`` and Lipschitz constant of ``g``."""

    name: str
    g: Callable
    G: Callable
    lipschitz: float


def _softplus_G(x, c):
    # G(x) = -Li2(-e^{cx}) / c, with Li2(z) = spence(1 - z); inversion keeps e^{u} bounded
    u = c * np.asarray(x, dtype=float)
    out = np.empty_like(u)
    neg = u <= 0
    out[neg] = -spence(1.0 + np.exp(u[neg]))
    up = u[~neg]
    out[~neg] = math.pi ** 2 / 6 + 0.5 * up * up + spence(1.0 + np.exp(-up))
    return out / c


def make_link(name: str, c: float = 1.0) -> FixedLink:
    """Named fixed link: ``identity``, ``softplus``, ``scaled_logistic`` or ``log1pexp``."""
    if c <= 0:
        raise ValueError("link scale c must be positive")
    if name == "identity":
        return FixedLink("identity", lambda x: np.asarray(x, dtype=float),
                         lambda x: 0.5 * np.asarray(x, dtype=float) ** 2, 1.0)
    if name == "log1pexp":
        name, c = "softplus", 1.0
    if name == "softplus":
        return FixedLink("softplus", lambda x: np.logaddexp(0.0, c * np.asarray(x, dtype=float)),
                         lambda x: _softplus_G(x, c), c)
    if name in ("scaled_logistic", "logistic"):
        def G(x):
            h = 0.5 * c * np.asarray(x, dtype=float)
            return (2.0 / c) * (np.logaddexp(h, -h) - math.log(2.0))
        return FixedLink("scaled_logistic", lambda x: np.tanh(0.5 * c * np.asarray(x, dtype=float)), G, 0.5 * c)
    raise ValueError(f"unknown link {name!r}")


class FixedLinkLoss:
    """Bregman loss ``(1/n) sum [G(theta) - y theta]`` for a known link (constant ``G*`` dropped)."""

    def __init__(self, Y, link: FixedLink):
        self.Y = Y
        self.n = Y.shape[1]
        self.fixed = link
        self.lipschitz = link.lipschitz

    def evaluate(self, Theta):
        value = float(np.sum(self.fixed.G(Theta) - self.Y * Theta)) / self.n
        return value, self.fixed.g(Theta) - self.Y, None

    def link(self, Theta):
        theta = np.unique(np.asarray(Theta, dtype=float).ravel())
        return link_from_fit(theta, self.fixed.g(theta), self.lipschitz)


def fit_glm_oracle(d: Dataset, link, reg: RegularizerSpec, config: Optional[SolverConfig] = None, *, init=None):
    """Same proximal loop with the link fixed (``link`` is a name or :class:`FixedLink`)."""
    d = validate_dataset(d)
    fixed = make_link(link) if isinstance(link, str) else link
    return proximal_fit(d.Y, d.X, reg, config, loss=FixedLinkLoss(d.Y, fixed), init=init)


# ---------------------------------------------------------------- prediction & readouts


def predict(model: SilvarModel, X_new) -> np.ndarray:
    """``g((A + L) X_new)`` with the model's piecewise-linear link."""
    X_new = np.asarray(X_new, dtype=float)
    if X_new.ndim != 2 or X_new.shape[0] != model.A.shape[1]:
        raise DimensionError(f"X_new must have {model.A.shape[1]} rows, got shape {X_new.shape}")
    return eval_link(model.link, (model.A + model.L) @ X_new)


def rmse(Y, Y_hat) -> float:
    Y = np.asarray(Y, dtype=float)
    Y_hat = np.asarray(Y_hat, dtype=float)
    if Y.shape != Y_hat.shape:
        raise DimensionError(f"shapes {Y.shape} and {Y_hat.shape} differ")
    return float(np.sqrt(np.mean((Y - Y_hat) ** 2)))


def l1_error(A_hat, A_true) -> float:
    A_hat = np.asarray(A_hat, dtype=float)
    A_true = np.asarray(A_true, dtype=float)
    if A_hat.shape != A_true.shape:
        raise DimensionError(f"shapes {A_hat.shape} and {A_true.shape} differ")
    return float(np.abs(A_hat - A_true).sum())


def adjacency(model: SilvarModel) -> np.ndarray:
    """Lag-group weights ``a'_ij = ||(a_ij(1), ..., a_ij(M))||_2``."""
    return regularizers.group_lag_norms(model.A, model.order)


def numerical_rank(V, rel_tol: float = 1e-6) -> int:
    s = np.linalg.svd(np.asarray(V, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


# ---------------------------------------------------------------- trend


def fit_trend(series, model: SilvarModel, lam: float = 1.0, *, tol: float = 1e-8, maxiter: Optional[int] = None):
    """Ridge estimate of the trend ``L'`` from a fitted autoregressive model.

    Minimizes ``sum_k ||l_k - sum_i A(i) l_{k-i} - sum_i L(i) x_{k-i}||^2 + lam ||L'||_F^2``
    over all columns ``l_k`` by conjugate gradients on the normal equations.
    """
    if lam <= 0:
        raise ValueError("ridge weight must be positive")
    if model.mode != "autoregressive":
        raise ValueError("trend extraction needs an autoregressive model")
    series = np.asarray(series, dtype=float)
    N, K = series.shape
    M = model.order
    if model.A.shape != (N, N * M):
        raise DimensionError(f"model is {model.A.shape}, series implies {(N, N * M)}")
    design = ArDesign(series, M)
    blocks = model.blocks("A")
    C = model.L @ design.X  # N x (K - M)

    def T(v):
        Lp = v.reshape(N, K)
        out = Lp[:, M:].copy()
        for i, Ai in enumerate(blocks, start=1):
            out -= Ai @ Lp[:, M - i:K - i]
        return out

    def Tt(R):
        out = np.zeros((N, K))
        out[:, M:] += R
        for i, Ai in enumerate(blocks, start=1):
            out[:, M - i:K - i] -= Ai.T @ R
        return out.ravel()

    size = N * K
    op = LinearOperator((size, size), matvec=lambda v: Tt(T(v)) + lam * v, dtype=float)
    sol, info = cg(op, Tt(C), rtol=tol, atol=0.0, maxiter=maxiter or 10 * size)
    if info < 0:
        raise SolverError("trend solve failed")
    return TrendEstimate(sol.reshape(N, K), (M + 1, K - M), float(lam), info == 0)


# ---------------------------------------------------------------- grid search


class GridCell(NamedTuple):
    lambda_s: float
    lambda_l: float
    metric: float
    iterations: int
    converged: bool


class GridResult(NamedTuple):
    model: SilvarModel
    cells: list
    best: int


def grid_search(
    fit: Callable,
    score: Callable,
    lambdas_s,
    lambdas_l=None,
    *,
    warm_start: bool = True,
) -> GridResult:
    """Fit every ``(lambda_s, lambda_l)`` pair and keep the lowest score.

    ``fit(lambda_s, lambda_l, init)`` returns ``(model, report)`` and
    ``score(model)`` a float. Cells are visited from strong to weak
    regularization, each warm-started from its predecessor; ties go to the
    larger ``(lambda_s, lambda_l)``. ``cells`` follow the input grid order.
    """
    lambdas_s = np.asarray(lambdas_s, dtype=float).ravel()
    lambdas_l = np.array([0.0]) if lambdas_l is None else np.asarray(lambdas_l, dtype=float).ravel()
    if lambdas_s.size == 0 or lambdas_l.size == 0:
        raise ValueError("empty regularization grid")
    cells = [None] * (lambdas_s.size * lambdas_l.size)
    models = [None] * len(cells)
    for b in np.argsort(-lambdas_l, kind="stable"):
        init = None
        for a in np.argsort(-lambdas_s, kind="stable"):
            ls, ll = float(lambdas_s[a]), float(lambdas_l[b])
            model, report = fit(ls, ll, init if warm_start else None)
            init = (model.A, model.L)
            idx = a * lambdas_l.size + b
            cells[idx] = GridCell(ls, ll, float(score(model)), report.iterations, report.converged)
            models[idx] = model
    finite = [i for i, c in enumerate(cells) if np.isfinite(c.metric)]
    if not finite:
        raise SolverError("no grid cell produced a finite score")
    best = min(finite, key=lambda i: (cells[i].metric, -cells[i].lambda_s, -cells[i].lambda_l))
    return GridResult(models[best], cells, best)

"""Penalties and proximal maps for the sparse (h1) and low-rank (h2) parts."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .core import DimensionError, RegularizerSpec


class ProxResult(NamedTuple):
    argmin: np.ndarray
    penalty_value: float


def l1_norm(V) -> float:
    return float(np.abs(V).sum())


def _lag_stack(V, M: int) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    if M < 1 or V.shape[1] % M:
        raise DimensionError(f"column count {V.shape[1]} is not divisible by order {M}")
    N = V.shape[1] // M
    # (M, rows, N): entry [l, i, j] is coefficient a_ij of lag l + 1
    return V.reshape(V.shape[0], M, N).transpose(1, 0, 2)


def group_lag_norms(V, M: int) -> np.ndarray:
    """Matrix of group norms ``||(a_ij^(1), ..., a_ij^(M))||_2``."""
    return np.sqrt((_lag_stack(V, M) ** 2).sum(axis=0))


def group_lag_norm(V, M: int) -> float:
    return float(group_lag_norms(V, M).sum())


def nuclear_norm(V) -> float:
    return float(np.linalg.svd(np.asarray(V, dtype=float), compute_uv=False).sum())


def _check_nonneg(value: float, name: str) -> None:
    if value < 0:
        raise ValueError(f"{name} must be nonnegative, got {value}")


def prox_l1(V, tau: float) -> np.ndarray:
    _check_nonneg(tau, "tau")
    V = np.asarray(V, dtype=float)
    return np.sign(V) * np.maximum(np.abs(V) - tau, 0.0)


def prox_group_lags(V, tau: float, M: int) -> np.ndarray:
    """Block soft threshold of every (i, j) group across the ``M`` lag blocks."""
    _check_nonneg(tau, "tau")
    stack = _lag_stack(V, M)
    norms = np.sqrt((stack ** 2).sum(axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > tau, 1.0 - tau / norms, 0.0)
    out = stack * scale[None]
    return out.transpose(1, 0, 2).reshape(np.shape(V))


def prox_nuclear(V, tau: float, return_rank: bool = False):
    """Singular value soft threshold; optionally also return the resulting rank."""
    _check_nonneg(tau, "tau")
    V = np.asarray(V, dtype=float)
    U, s, Wt = np.linalg.svd(V, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    P = (U * s) @ Wt
    if return_rank:
        return P, int(np.count_nonzero(s))
    return P


def project_simplex(v, radius: float) -> np.ndarray:
    """Euclidean projection onto ``{s >= 0, sum(s) = radius}`` (sorted-threshold method)."""
    v = np.asarray(v, dtype=float)
    if radius <= 0:
        return np.zeros_like(v)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - radius
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def project_nuclear_ball(V, radius: float) -> np.ndarray:
    _check_nonneg(radius, "radius")
    V = np.asarray(V, dtype=float)
    U, s, Wt = np.linalg.svd(V, full_matrices=False)
    if s.sum() <= radius:
        return V.copy()
    return (U * project_simplex(s, radius)) @ Wt


def _blockwise(fn, V, M: int, *args):
    V = np.asarray(V, dtype=float)
    if V.shape[1] % M:
        raise DimensionError(f"column count {V.shape[1]} is not divisible by order {M}")
    N = V.shape[1] // M
    return np.hstack([fn(V[:, i * N:(i + 1) * N], *args) for i in range(M)])


def prox_h1(spec: RegularizerSpec, V, step: float, order: int = 1) -> ProxResult:
    tau = step * spec.lambda_s
    if spec.h1_kind == "element_l1":
        P = prox_l1(V, tau)
        return ProxResult(P, spec.lambda_s * l1_norm(P))
    if spec.h1_kind == "group_l2_across_lags":
        P = prox_group_lags(V, tau, order)
        return ProxResult(P, spec.lambda_s * group_lag_norm(P, order))
    return ProxResult(np.array(V, dtype=float), 0.0)


def prox_h2(spec: RegularizerSpec, V, step: float, order: int = 1) -> ProxResult:
    """Prox of the low-rank penalty; in AR mode it acts on each lag block."""
    if spec.h2_kind == "nuclear_norm":
        P = _blockwise(prox_nuclear, V, order, step * spec.lambda_l)
        return ProxResult(P, spec.lambda_l * _block_nuclear(P, order))
    if spec.h2_kind == "nuclear_ball":
        P = _blockwise(project_nuclear_ball, V, order, spec.lambda_l)
        return ProxResult(P, 0.0)
    return ProxResult(np.array(V, dtype=float), 0.0)


def _block_nuclear(P, order: int) -> float:
    N = P.shape[1] // order
    return sum(nuclear_norm(P[:, i * N:(i + 1) * N]) for i in range(order))


def penalty(spec: RegularizerSpec, A, L, order: int = 1) -> float:
    """``h1(A) + h2(L)``; the ball indicator is taken as satisfied."""
    if spec.h1_kind == "element_l1":
        h1 = spec.lambda_s * l1_norm(A)
    elif spec.h1_kind == "group_l2_across_lags":
        h1 = spec.lambda_s * group_lag_norm(A, order)
    else:
        h1 = 0.0
    h2 = spec.lambda_l * _block_nuclear(np.asarray(L, float), order) if spec.h2_kind == "nuclear_norm" else 0.0
    return float(h1 + h2)

"""Synthetic data: multitask regression with hidden regressors, and VAR series with a trend."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

LINK_KINDS = ("g1_softplus", "g2_scaled_logistic", "identity")


def softplus_link(x, c: float = 1.0):
    """``log(1 + exp(c x))``."""
    return np.logaddexp(0.0, c * np.asarray(x, dtype=float))


def scaled_logistic_link(x, c: float = 1.0):
    """``2 / (1 + exp(-c x)) - 1``, computed as ``tanh(c x / 2)``."""
    return np.tanh(0.5 * c * np.asarray(x, dtype=float))


def link_function(kind: str, c: float = 1.0):
    if kind == "g1_softplus":
        return lambda x: softplus_link(x, c)
    if kind == "g2_scaled_logistic":
        return lambda x: scaled_logistic_link(x, c)
    if kind == "identity":
        return lambda x: np.asarray(x, dtype=float)
    raise ValueError(f"unknown link kind {kind!r}")


@dataclass(frozen=True)
class SynthSpec:
    m: int = 25
    p: int = 25
    h: float = 0.1
    n: int = 200
    link_kind: str = "g1_softplus"
    c: float = 1.0
    noise_sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.h < 1:
            raise ValueError("hidden fraction h must lie in [0, 1)")
        if min(self.m, self.p, self.n) < 1:
            raise ValueError("m, p and n must be positive")
        if self.link_kind not in LINK_KINDS:
            raise ValueError(f"unknown link kind {self.link_kind!r}")

    @property
    def H(self) -> int:
        return int(math.floor(self.h * self.p + 1e-9))

    @property
    def nonzeros(self) -> int:
        return int(math.floor(self.m * math.log10(self.p) + 1e-9)) if self.p > 1 else 0


@dataclass(frozen=True)
class SynthTruth:
    A_true: np.ndarray
    B_true: np.ndarray
    Sigma_half: np.ndarray
    X: np.ndarray
    Z: np.ndarray
    Y: np.ndarray
    spec: SynthSpec


def _draw(spec: SynthSpec, A, B, S, n, rng):
    Xf = S @ rng.standard_normal((spec.p + B.shape[1], n))
    X, Z = Xf[: spec.p], Xf[spec.p:]
    g = link_function(spec.link_kind, spec.c)
    Y = g(A @ X + B @ Z) + spec.noise_sigma * rng.standard_normal((spec.m, n))
    return X, Z, Y


def generate_multitask(spec: SynthSpec) -> SynthTruth:
    """Sparse observed weights, dense weak hidden weights, correlated Gaussian design."""
    rng = np.random.default_rng(spec.seed)
    H = spec.H
    if spec.h > 0 and H == 0:
        warnings.warn(f"h={spec.h} with p={spec.p} leaves no hidden variables", UserWarning)
    Af = rng.standard_normal((spec.m, spec.p + H))
    mask = np.zeros(spec.m * spec.p, dtype=bool)
    mask[rng.choice(spec.m * spec.p, size=min(spec.nonzeros, spec.m * spec.p), replace=False)] = True
    A = Af[:, : spec.p] * mask.reshape(spec.m, spec.p)
    B = Af[:, spec.p:] / (3.0 * math.sqrt(H)) if H else np.zeros((spec.m, 0))
    S = rng.uniform(-0.5, 0.5, size=(spec.p + H, spec.p + H))
    S = np.where(np.abs(S) > 0.35, S, 0.0)
    np.fill_diagonal(S, 1.0)
    X, Z, Y = _draw(spec, A, B, S, spec.n, rng)
    return SynthTruth(A, B, S, X, Z, Y, spec)


def draw_samples(truth: SynthTruth, n: int, seed: int):
    """Fresh ``(X, Z, Y)`` from the same weights, covariance and link (e.g. for validation)."""
    rng = np.random.default_rng(seed)
    return _draw(truth.spec, truth.A_true, truth.B_true, truth.Sigma_half, n, rng)


class ArTruth(NamedTuple):
    series: np.ndarray
    A: np.ndarray
    trend: np.ndarray


def companion_radius(A, M: int) -> float:
    N = A.shape[0]
    C = np.zeros((N * M, N * M))
    C[:N] = A
    if M > 1:
        C[N:, :-N] = np.eye(N * (M - 1))
    return float(np.max(np.abs(np.linalg.eigvals(C))))


def generate_ar_with_trend(
    N: int,
    K: int,
    M: int,
    trend_kind: str = "sinusoid",
    *,
    link_kind: str = "identity",
    c: float = 1.0,
    amplitude: float = 10.0,
    period: float | None = None,
    noise_sigma: float = 1.0,
    density: float = 0.2,
    radius: float = 0.8,
    seed: int = 0,
) -> ArTruth:
    """Simulate ``x_k = g(l_k + sum_i A(i) (x_{k-i} - l_{k-i})) + noise``.

    Lag blocks share one sparse support (group sparsity across lags) and are
    rescaled so the companion matrix has spectral radius ``radius`` (< 0.9).
    The first ``5 M`` steps are burn-in and discarded.
    """
    if not 0 < radius < 0.9:
        raise ValueError("radius must lie in (0, 0.9)")
    if trend_kind not in ("sinusoid", "none"):
        raise ValueError(f"unknown trend kind {trend_kind!r}")
    rng = np.random.default_rng(seed)
    g = link_function(link_kind, c)
    for _ in range(10):
        support = rng.random((N, N)) < density
        np.fill_diagonal(support, True)
        blocks = [rng.standard_normal((N, N)) * support for _ in range(M)]
        A = np.hstack(blocks)
        rho = companion_radius(A, M)
        if np.isfinite(rho) and rho > 1e-8:
            scale = radius / rho
            A = np.hstack([b * scale ** (i + 1) for i, b in enumerate(blocks)])
            if companion_radius(A, M) < 0.9:
                break
    else:
        raise RuntimeError("could not generate a stable autoregressive matrix")

    burn = 5 * M
    T = K + burn
    if trend_kind == "sinusoid":
        period = float(K if period is None else period)
        amp = amplitude * rng.uniform(0.5, 1.5, size=N)
        phase = rng.uniform(0.0, 0.25 * np.pi, size=N)
        k = np.arange(T) - burn
        trend = amp[:, None] * np.sin(2 * np.pi * k[None, :] / period + phase[:, None])
    else:
        trend = np.zeros((N, T))
    x = np.zeros((N, T))
    x[:, :M] = trend[:, :M] + noise_sigma * rng.standard_normal((N, M))
    Ablocks = [A[:, i * N:(i + 1) * N] for i in range(M)]
    for t in range(M, T):
        arg = trend[:, t].copy()
        for i in range(M):
            arg += Ablocks[i] @ (x[:, t - i - 1] - trend[:, t - i - 1])
        x[:, t] = g(arg) + noise_sigma * rng.standard_normal(N)
    return ArTruth(x[:, burn:], A, trend[:, burn:])

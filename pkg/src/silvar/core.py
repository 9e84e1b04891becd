"""Shared data model, validation and model (de)serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

MODES = ("multitask", "autoregressive")
H1_KINDS = ("element_l1", "group_l2_across_lags", "none")
H2_KINDS = ("nuclear_norm", "nuclear_ball", "none")


class SilvarError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(SilvarError, ValueError):
    pass


class NonFiniteError(SilvarError, ValueError):
    def __init__(self, name: str, row: int, col: int):
        super().__init__(f"{name} has a non-finite entry at row {row}, column {col}")
        self.name = name
        self.row = row
        self.col = col


class ModelFormatError(SilvarError, ValueError):
    pass


class SolverError(SilvarError, RuntimeError):
    pass


class ConvergenceWarning(UserWarning):
    pass


def _as_matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2:
        raise DimensionError(f"{name} must be a matrix, got {a.ndim} dimensions")
    return a


@dataclass(frozen=True)
class Dataset:
    """Responses ``Y`` (m x n) and regressors ``X`` (p x n); samples are columns."""

    Y: np.ndarray
    X: np.ndarray
    timestamps: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.Y.shape[1]

    @property
    def m(self) -> int:
        return self.Y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[0]


def validate_dataset(d: Dataset) -> Dataset:
    """Check shapes and finiteness; return ``d`` unchanged."""
    Y = _as_matrix(d.Y, "Y")
    X = _as_matrix(d.X, "X")
    if Y.shape[1] != X.shape[1]:
        raise DimensionError(
            f"Y has {Y.shape[1]} columns but X has {X.shape[1]}; samples must align"
        )
    if d.timestamps is not None and len(d.timestamps) != Y.shape[1]:
        raise DimensionError("timestamps must have one entry per sample")
    for name, a in (("Y", Y), ("X", X)):
        bad = np.argwhere(~np.isfinite(a))
        if bad.size:
            raise NonFiniteError(name, int(bad[0, 0]), int(bad[0, 1]))
    return d


@dataclass(frozen=True)
class LinkEstimate:
    """Monotone Lipschitz link stored as knot/value pairs."""

    knots: np.ndarray
    values: np.ndarray
    lipschitz_bound: float = 1.0

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        if knots.shape != values.shape or knots.size == 0:
            raise DimensionError("link needs equally many (>= 1) knots and values")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("link knots must be strictly ascending")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    def check(self, tol: float = 1e-9) -> bool:
        """True if values are monotone and ``lipschitz_bound``-Lipschitz in knots."""
        dv = np.diff(self.values)
        dk = np.diff(self.knots)
        return bool(np.all(dv >= -tol) and np.all(dv <= self.lipschitz_bound * dk + tol))

    @classmethod
    def identity(cls, knots=(-1.0, 1.0)) -> "LinkEstimate":
        k = np.asarray(knots, dtype=float)
        return cls(k, k.copy())

    @classmethod
    def constant(cls, value: float) -> "LinkEstimate":
        return cls(np.array([0.0]), np.array([float(value)]))


@dataclass(frozen=True)
class SilvarModel:
    link: LinkEstimate
    A: np.ndarray
    L: np.ndarray
    mode: str = "multitask"
    order: int = 1
    lambda_s: float = 0.0
    lambda_l: float = 0.0

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        L = np.asarray(self.L, dtype=float)
        if A.shape != L.shape or A.ndim != 2:
            raise DimensionError(f"A {A.shape} and L {L.shape} must be matrices of equal shape")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.order < 1:
            raise ValueError("order must be positive")
        if self.mode == "autoregressive" and A.shape[1] != A.shape[0] * self.order:
            raise DimensionError("autoregressive parameters must be N x (N * order)")
        if self.mode == "multitask" and self.order != 1:
            raise ValueError("multitask models have order 1")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "L", L)

    @property
    def shape(self) -> tuple:
        return self.A.shape

    def blocks(self, which: str = "A") -> list:
        """Lag blocks ``[P(1), ..., P(M)]`` of ``A`` or ``L``."""
        P = self.A if which == "A" else self.L
        N = P.shape[0]
        return [P[:, i * N:(i + 1) * N] for i in range(self.order)]


@dataclass(frozen=True)
class RegularizerSpec:
    h1_kind: str = "element_l1"
    h2_kind: str = "nuclear_norm"
    lambda_s: float = 0.0
    lambda_l: float = 0.0

    def __post_init__(self):
        if self.h1_kind not in H1_KINDS:
            raise ValueError(f"unknown h1 kind {self.h1_kind!r}")
        if self.h2_kind not in H2_KINDS:
            raise ValueError(f"unknown h2 kind {self.h2_kind!r}")
        if self.lambda_s < 0 or self.lambda_l < 0:
            raise ValueError("regularization weights must be nonnegative")


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the outer proximal loop and the inner LMR solver.

    ``lmr_method`` selects the exact dynamic program (``"exact"``) or the
    accelerated Dykstra iteration (``"dykstra"``) for the link update.
    """

    max_iters: int = 2000
    objective_tolerance: float = 1e-8
    dykstra_tolerance: float = 1e-8
    dykstra_epsilon: float = 1e-9
    backtracking_shrink: float = 0.5
    initial_step: float = 1.0
    seed: int = 0
    lmr_method: str = "exact"
    lmr_max_iters: int = 100_000
    accelerate: bool = True
    min_step: float = 1e-12

    def __post_init__(self):
        if not 0 < self.backtracking_shrink < 1:
            raise ValueError("backtracking_shrink must lie in (0, 1)")
        if min(self.objective_tolerance, self.dykstra_tolerance, self.dykstra_epsilon) <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1 or self.lmr_max_iters < 1:
            raise ValueError("iteration limits must be positive")
        if self.initial_step <= 0:
            raise ValueError("initial_step must be positive")
        if self.lmr_method not in ("exact", "dykstra"):
            raise ValueError(f"unknown lmr_method {self.lmr_method!r}")


@dataclass
class FitReport:
    objective_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    final_step: float = float("nan")
    wall_time: float = 0.0
    restarts: int = 0
    backtracks: int = 0
    pseudo_likelihood: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "objective_trace": [float(v) for v in self.objective_trace],
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "final_step": float(self.final_step),
            "wall_time": float(self.wall_time),
            "restarts": int(self.restarts),
            "backtracks": int(self.backtracks),
            "pseudo_likelihood": float(self.pseudo_likelihood),
        }


def serialize_model(model: SilvarModel) -> bytes:
    doc = {
        "mode": model.mode,
        "order": int(model.order),
        "shape": list(model.A.shape),
        "knots": [float(v) for v in model.link.knots],
        "values": [float(v) for v in model.link.values],
        "lipschitz_bound": float(model.link.lipschitz_bound),
        "A": [float(v) for v in model.A.ravel()],
        "L": [float(v) for v in model.L.ravel()],
        "lambda_s": float(model.lambda_s),
        "lambda_l": float(model.lambda_l),
    }
    # json writes floats with repr, the shortest string that round-trips
    return json.dumps(doc, allow_nan=False).encode("utf-8")


def deserialize_model(data) -> SilvarModel:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8", errors="strict")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model document is not valid JSON: {exc}") from exc
    required = ("mode", "order", "shape", "knots", "values", "A", "L", "lambda_s", "lambda_l")
    if not isinstance(doc, dict) or any(k not in doc for k in required):
        raise ModelFormatError("model document is missing required fields")
    try:
        shape = tuple(int(s) for s in doc["shape"])
        A = np.array(doc["A"], dtype=float).reshape(shape)
        L = np.array(doc["L"], dtype=float).reshape(shape)
        link = LinkEstimate(
            np.array(doc["knots"], dtype=float),
            np.array(doc["values"], dtype=float),
            float(doc.get("lipschitz_bound", 1.0)),
        )
        return SilvarModel(
            link=link,
            A=A,
            L=L,
            mode=str(doc["mode"]),
            order=int(doc["order"]),
            lambda_s=float(doc["lambda_s"]),
            lambda_l=float(doc["lambda_l"]),
        )
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from exc

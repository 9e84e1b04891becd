"""Monotone, gap-constrained monotone, and Lipschitz monotone regression.

Every solver sorts by ``x`` with a stable sort, works on the sorted sequence,
and returns fitted values in the caller's original order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels
from .core import ConvergenceWarning, DimensionError, SolverConfig


@dataclass(frozen=True)
class RegressionInstance:
    y: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        x = np.asarray(self.x, dtype=float).ravel()
        if y.size == 0:
            raise ValueError("empty regression instance")
        if y.shape != x.shape:
            raise DimensionError(f"y has {y.size} entries but x has {x.size}")
        if not np.all(np.isfinite(x)):
            raise ValueError("x must be finite")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @property
    def sort_permutation(self) -> np.ndarray:
        return np.argsort(self.x, kind="stable")

    @property
    def gaps(self) -> np.ndarray:
        """Sorted gaps ``t`` with ``t[0] = 0``."""
        xs = self.x[self.sort_permutation]
        return np.concatenate(([0.0], np.diff(xs)))


class LMRInfo(NamedTuple):
    iterations: int
    converged: bool
    error: float


def _unsort(values_sorted, order):
    out = np.empty_like(values_sorted)
    out[order] = values_sorted
    return out


def cusum(t) -> np.ndarray:
    return np.cumsum(np.asarray(t, dtype=float))


def pav(y, x) -> np.ndarray:
    """Least-squares fit nondecreasing in sorted-``x`` order (pooled adjacent violators)."""
    inst = RegressionInstance(y, x)
    order = inst.sort_permutation
    return _unsort(_kernels.pav_sorted(inst.y[order]), order)


def gpav(y, x, t) -> np.ndarray:
    """Least squares subject to ``g[j+1] - g[j] >= t[j+1]`` in sorted order.

    ``t`` is given in sorted-``x`` order with ``t[0] = 0``; solved exactly by
    shifting the targets by ``cusum(t)`` and running PAV.
    """
    inst = RegressionInstance(y, x)
    t = np.asarray(t, dtype=float).ravel()
    if t.shape != inst.y.shape:
        raise DimensionError(f"t has {t.size} entries, expected {inst.y.size}")
    order = inst.sort_permutation
    s = cusum(t)
    ys = inst.y[order]
    return _unsort(_kernels.pav_sorted(ys - s) + s, order)


def lmr(y, x, config: Optional[SolverConfig] = None, *, full_output: bool = False):
    """Lipschitz monotone regression by accelerated Dykstra alternating PAV projections.

    Projects ``y`` onto ``{g : 0 <= g[j+1] - g[j] <= x[j+1] - x[j]}`` (sorted
    order) by alternating between the monotone set (PAV) and the bounded
    difference set (PAV on the shifted negation). Stops once successive
    accelerated iterates and the two projections both agree within
    ``config.dykstra_tolerance``.

    With ``full_output=True`` returns ``(g, LMRInfo)``. Hitting
    ``config.lmr_max_iters`` is not an error: the last iterate is returned
    and a :class:`ConvergenceWarning` is emitted.
    """
    config = config or SolverConfig()
    inst = RegressionInstance(y, x)
    order = inst.sort_permutation
    s = cusum(inst.gaps)
    z, k, converged, err = _kernels.lmr_dykstra_sorted(
        inst.y[order], s, config.dykstra_tolerance, config.dykstra_epsilon, config.lmr_max_iters
    )
    if not converged:
        warnings.warn(
            f"LMR did not converge in {k} iterations (error {err:.3g})", ConvergenceWarning
        )
    g = _unsort(z, order)
    if full_output:
        return g, LMRInfo(int(k), bool(converged), float(err))
    return g


def lmr_exact(y, x) -> np.ndarray:
    """Lipschitz monotone regression solved exactly by a dynamic program.

    Same problem as :func:`lmr`. Runs in a single forward sweep plus a
    backward clipping pass, so it is the default link update inside the
    fitting loop where ``n`` is in the thousands.
    """
    inst = RegressionInstance(y, x)
    order = inst.sort_permutation
    xs = inst.x[order]
    t = np.concatenate(([0.0], np.diff(xs)))
    return _unsort(_kernels.lmr_dp_sorted(inst.y[order], t), order)

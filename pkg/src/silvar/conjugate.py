"""Link integration, discrete Legendre transform and the pseudo-likelihood value."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import DimensionError, LinkEstimate


@dataclass(frozen=True)
class IntegratedLink:
    knots: np.ndarray
    G_values: np.ndarray
    conjugate_domain: tuple


def cumtrapz(knots, values) -> np.ndarray:
    """Cumulative trapezoid integral anchored at ``G[0] = 0``."""
    knots = np.asarray(knots, dtype=float).ravel()
    values = np.asarray(values, dtype=float).ravel()
    if knots.shape != values.shape:
        raise DimensionError("knots and values must have equal length")
    if knots.size == 0:
        return np.zeros(0)
    dk = np.diff(knots)
    if np.any(dk < 0):
        raise ValueError("knots must be sorted ascending")
    return np.concatenate(([0.0], np.cumsum(0.5 * (values[1:] + values[:-1]) * dk)))


def collapse_knots(knots, values):
    """Sort by knot and merge duplicate knots, averaging their values."""
    knots = np.asarray(knots, dtype=float).ravel()
    values = np.asarray(values, dtype=float).ravel()
    order = np.argsort(knots, kind="stable")
    k = knots[order]
    v = values[order]
    uniq, start, counts = np.unique(k, return_index=True, return_counts=True)
    if uniq.size == k.size:
        return k, v
    sums = np.add.reduceat(v, start)
    return uniq, sums / counts


def link_from_fit(theta, ghat, lipschitz_bound: float = 1.0) -> LinkEstimate:
    """Build the link estimate from fitted values at the index points."""
    k, v = collapse_knots(theta, ghat)
    return LinkEstimate(k, v, lipschitz_bound)


def integrate_link(link: LinkEstimate) -> IntegratedLink:
    G = cumtrapz(link.knots, link.values)
    return IntegratedLink(link.knots, G, (float(link.values.min()), float(link.values.max())))


def dlt(knots, G, y) -> np.ndarray:
    """Discrete convex conjugate ``max_i knots[i] * y - G[i]`` at every query.

    The maximum over the points equals the maximum over their lower convex
    hull, on which the maximising index is nondecreasing in ``y``; queries are
    sorted and swept with a single pointer.
    """
    knots = np.asarray(knots, dtype=float).ravel()
    G = np.asarray(G, dtype=float).ravel()
    y = np.asarray(y, dtype=float)
    if knots.shape != G.shape or knots.size == 0:
        raise DimensionError("knots and G must be nonempty and of equal length")
    if np.any(np.diff(knots) < 0):
        raise ValueError("knots must be sorted ascending")
    flat = y.ravel()
    order = np.argsort(flat, kind="stable")
    hull = _kernels.lower_hull(knots, G)
    vals = _kernels.dlt_sorted_queries(knots, G, hull, flat[order])
    out = np.empty_like(flat)
    out[order] = vals
    return out.reshape(y.shape)


def _segments(link: LinkEstimate, t: np.ndarray):
    """Segment index (0..q-2) covering each ``t``; boundary segments extend outward."""
    k = link.knots
    return np.clip(np.searchsorted(k, t, side="right") - 1, 0, k.size - 2)


def eval_link(link: LinkEstimate, t):
    """Piecewise-linear link value; outside the knots the boundary slope is continued."""
    t = np.asarray(t, dtype=float)
    k, v = link.knots, link.values
    if k.size == 1:
        return np.full_like(t, v[0])
    i = _segments(link, t)
    slope = (v[i + 1] - v[i]) / (k[i + 1] - k[i])
    return v[i] + slope * (t - k[i])


def eval_G(link: LinkEstimate, t, G_values=None):
    """Antiderivative of :func:`eval_link`, consistent with ``cumtrapz`` at the knots."""
    t = np.asarray(t, dtype=float)
    k, v = link.knots, link.values
    G = cumtrapz(k, v) if G_values is None else G_values
    if k.size == 1:
        return G[0] + v[0] * (t - k[0])
    i = _segments(link, t)
    slope = (v[i + 1] - v[i]) / (k[i + 1] - k[i])
    d = t - k[i]
    return G[i] + v[i] * d + 0.5 * slope * d * d


def objective_value(Y, Theta, link: LinkEstimate, G_values=None) -> float:
    """``(1/n) sum_ij [G*(y_ij) + G(theta_ij) - y_ij theta_ij]`` on the link's grid.

    ``G`` is the trapezoid integral of the link over its knots and ``G*`` the
    discrete conjugate over the same knots, so the value does not depend on
    the integration constant. ``G_values`` overrides the integral at the
    knots (any constant shift of it leaves the value unchanged).
    """
    Y = np.asarray(Y, dtype=float)
    Theta = np.asarray(Theta, dtype=float)
    if Y.shape != Theta.shape:
        raise DimensionError(f"Y {Y.shape} and Theta {Theta.shape} differ in shape")
    n = Y.shape[1] if Y.ndim == 2 else Y.size
    G = cumtrapz(link.knots, link.values) if G_values is None else np.asarray(G_values, float)
    Gstar = dlt(link.knots, G, Y.ravel())
    Gtheta = eval_G(link, Theta.ravel(), G)
    return float(np.sum(Gstar + Gtheta - Y.ravel() * Theta.ravel()) / n)

"""Composite Gauss-Legendre quadrature with dyadic refinement.

All integrators here work on vectorized callables: ``f(x)`` receives a 1-d
array of abscissae and returns either a matching 1-d array or a 2-d array
``(len(x), channels)``.  Panels are laid down between caller-supplied
breakpoints (used to isolate kinks of piecewise-smooth integrands) and then
refined dyadically until two successive composite estimates agree.
"""

from __future__ import annotations

import numpy as np

__all__ = ["ToleranceError", "gauss_legendre", "integrate", "l2_error"]


class ToleranceError(RuntimeError):
    """Refinement hit the panel cap before converging.

    Carries the best available estimate in ``best_estimate``.
    """

    def __init__(self, message, best_estimate):
        super().__init__(message)
        self.best_estimate = best_estimate


_RULE_CACHE: dict = {}


def _newton_refine_longdouble(nodes64, order):
    # Legendre recurrence in extended precision; 3 Newton steps from the
    # float64 seeds are enough for ~1e-19 node accuracy.
    x = nodes64.astype(np.longdouble)
    one = np.longdouble(1)
    for _ in range(3):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for k in range(2, order + 1):
            p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / np.longdouble(k)
        dp = order * (x * p1 - p0) / (x * x - one)
        x = x - p1 / dp
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, order + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / np.longdouble(k)
    dp = order * (x * p1 - p0) / (x * x - one)
    w = 2 / ((one - x * x) * dp * dp)
    return x, w


def gauss_legendre(order: int, dtype=np.float64):
    """Nodes and weights on [-1, 1], cached per (order, dtype)."""
    key = (order, np.dtype(dtype).name)
    if key not in _RULE_CACHE:
        x64, w64 = np.polynomial.legendre.leggauss(order)
        if np.dtype(dtype) == np.longdouble:
            _RULE_CACHE[key] = _newton_refine_longdouble(x64, order)
        else:
            _RULE_CACHE[key] = (x64.astype(dtype), w64.astype(dtype))
    return _RULE_CACHE[key]


def _panel_edges(a, b, breakpoints, dtype):
    pts = [np.asarray(a, dtype), np.asarray(b, dtype)]
    for p in breakpoints:
        p = np.asarray(p, dtype)
        if a < p < b:
            pts.append(p)
    edges = np.unique(np.array(pts, dtype=dtype))
    return edges


def _composite(f, edges, depth, order, dtype):
    nodes, weights = gauss_legendre(order, dtype)
    sub = np.concatenate(
        [np.linspace(edges[i], edges[i + 1], 2**depth + 1, dtype=dtype)
         for i in range(len(edges) - 1)]
    )
    lo = np.concatenate([sub[i * (2**depth + 1):(i + 1) * (2**depth + 1) - 1]
                         for i in range(len(edges) - 1)])
    hi = np.concatenate([sub[i * (2**depth + 1) + 1:(i + 1) * (2**depth + 1)]
                         for i in range(len(edges) - 1)])
    half = (hi - lo) / 2
    mid = (hi + lo) / 2
    xs = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    vals = np.asarray(f(xs))
    if vals.ndim == 1:
        vals = vals.reshape(len(lo), len(nodes))
        return np.sum(vals * weights[None, :] * half[:, None])
    vals = vals.reshape(len(lo), len(nodes), -1)
    return np.sum(vals * weights[None, :, None] * half[:, None, None], axis=(0, 1))


def integrate(f, a, b, *, breakpoints=(), rtol=1e-9, atol=0.0, order=16,
              max_depth=12, dtype=np.float64):
    """Integrate a vectorized callable over [a, b].

    Dyadic refinement stops once two successive composite estimates differ by
    less than ``max(atol, rtol * |estimate|)``; exceeding ``max_depth``
    raises :class:`ToleranceError` carrying the best estimate.
    """
    if not b > a:
        raise ValueError("need b > a")
    edges = _panel_edges(a, b, breakpoints, dtype)
    prev = _composite(f, edges, 0, order, dtype)
    for depth in range(1, max_depth + 1):
        cur = _composite(f, edges, depth, order, dtype)
        scale = np.max(np.abs(cur)) if np.ndim(cur) else abs(cur)
        diff = np.max(np.abs(cur - prev)) if np.ndim(cur) else abs(cur - prev)
        if diff <= max(atol, rtol * float(scale)):
            return cur
        prev = cur
    raise ToleranceError(
        f"quadrature did not reach rtol={rtol} within {max_depth} refinements",
        prev,
    )


def l2_error(f, g, interval=(0.0, 1.0), *, breakpoints=(), rtol=1e-9,
             order=16, max_depth=12, dtype=np.float64):
    """L2 distance between two vectorized callables on a subinterval of [0,1].

    Returns ``sqrt(int_a^b |f - g|^2)``.  ``f`` and ``g`` may return complex
    arrays of shape ``(n,)`` or ``(n, channels)``; channels are summed.
    """
    a, b = interval
    if not a < b:
        raise ValueError("need a < b")

    def sq(x):
        d = np.asarray(f(x)) - np.asarray(g(x))
        d = np.abs(d) ** 2
        if d.ndim == 2:
            d = d.sum(axis=1)
        return d.astype(dtype)

    # |f-g|^2 can vanish identically; the atol floor keeps refinement from
    # chasing pure roundoff in that case.
    val = integrate(sq, a, b, breakpoints=breakpoints, rtol=rtol,
                    atol=float(np.finfo(np.float64).tiny), order=order,
                    max_depth=max_depth, dtype=dtype)
    return float(np.sqrt(max(float(val), 0.0)))

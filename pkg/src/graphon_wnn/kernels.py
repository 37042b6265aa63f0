"""Sampling function, periodic Gaussian regularizer, and reconstruction.

The reconstruction operator studied here replaces the exact interpolation
series (sampling function s_N alone) with the product ``s_N * G_{r,sigma}``
where ``G_{r,sigma}`` is a normalized periodic Gaussian truncated to
``[-r, r]`` modulo 1.  Truncation radius and variance follow the schedule

    r = c1 / (N - m)**alpha,        sigma = (N - m)**beta / c2,

with defaults c1 = 3*pi and c2 = sqrt(6)*pi.  All kernel arguments are
reduced to [-1/2, 1/2) before evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .quadrature import integrate
from .signals import SampleVector

__all__ = [
    "InvalidParams",
    "RegularizerParams",
    "PlanReport",
    "plan_params",
    "reduce_mod1",
    "eval_sn",
    "sn_derivative",
    "PeriodicGaussian",
    "SamplingKernel",
    "eval_g_sigma",
    "eval_regularizer_deriv",
    "eval_product_deriv",
    "reconstruct",
    "reconstruct_exact",
    "verify_integration_by_parts",
]

_DEFAULT_C1 = 3.0 * np.pi
_DEFAULT_C2 = math.sqrt(6.0) * np.pi


class InvalidParams(ValueError):
    pass


def reduce_mod1(x):
    """Reduce to the fundamental domain [-1/2, 1/2)."""
    return np.mod(np.asarray(x, dtype=float) + 0.5, 1.0) - 0.5


def mills_tail(x: float) -> float:
    """Upper bound on int_x^inf exp(-t^2/2) dt for x > 0 (Mills' ratio)."""
    return math.pi * math.exp(-x * x / 2.0) / (
        math.sqrt((math.pi - 2.0) ** 2 * x * x + 2.0 * math.pi) + 2.0 * x
    )


# ---------------------------------------------------------------------------
# parameters and planning


@dataclass(frozen=True)
class RegularizerParams:
    """Bandwidth, sample rate and the (r, sigma) regularizer pair."""

    m_frak: int
    n_half: int          # the half sample count N; sample grid is j/2N
    alpha: float
    beta: float
    r: float
    sigma: float
    c1: float = _DEFAULT_C1
    c2: float = _DEFAULT_C2
    series_tol: float = 1e-16

    def __post_init__(self):
        if self.n_half <= self.m_frak:
            raise InvalidParams("need N > m_frak")
        if not (0.0 < self.alpha < self.beta < 1.0):
            raise InvalidParams("need 0 < alpha < beta < 1")
        if not (0.0 < self.r < 0.5):
            raise InvalidParams("truncation radius exceeds half-period")
        if self.sigma <= 0:
            raise InvalidParams("sigma must be positive")

    @classmethod
    def from_schedule(cls, m_frak: int, n_half: int, alpha: float = 0.96,
                      beta: float = 0.98, c1: float | None = None,
                      c2: float | None = None,
                      series_tol: float = 1e-16) -> "RegularizerParams":
        if n_half <= m_frak:
            raise InvalidParams("need N > m_frak")
        c1 = _DEFAULT_C1 if c1 is None else c1
        c2 = _DEFAULT_C2 if c2 is None else c2
        gap = n_half - m_frak
        return cls(m_frak, n_half, alpha, beta,
                   r=c1 / gap**alpha, sigma=gap**beta / c2,
                   c1=c1, c2=c2, series_tol=series_tol)

    @property
    def zone(self) -> tuple[float, float]:
        """The predictable zone [r, 1-r]."""
        return (self.r, 1.0 - self.r)

    def sample_grid(self) -> np.ndarray:
        return np.arange(2 * self.n_half) / (2 * self.n_half)


@dataclass(frozen=True)
class PlanReport:
    """Planner output for a target tolerance epsilon."""

    epsilon: float
    m_frak: int
    alpha: float
    beta: float
    n_half: int
    weight_count: int
    n_min: int
    r: float
    sigma: float
    valid: bool
    reasons: tuple[str, ...] = ()

    def params(self) -> RegularizerParams:
        if not self.valid:
            raise InvalidParams("; ".join(self.reasons) or "invalid plan")
        return RegularizerParams(self.m_frak, self.n_half, self.alpha,
                                 self.beta, self.r, self.sigma)


def plan_params(epsilon: float, m_frak: int, alpha: float = 0.96,
                beta: float = 0.98, c1: float | None = None,
                c2: float | None = None) -> PlanReport:
    """Network-size planning: N = ceil(eps^(-10/9)), n_min = ceil(eps^(-13/3)).

    The report is always returned; a truncation radius at or above 1/2 only
    flags it invalid.  N <= m_frak is a hard error.
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidParams("epsilon must lie in (0,1)")
    if m_frak < 1:
        raise InvalidParams("m_frak must be a positive integer")
    n_half = math.ceil(epsilon ** (-10.0 / 9.0))
    if n_half <= m_frak:
        raise InvalidParams(f"planned N={n_half} does not exceed bandwidth {m_frak}")
    n_min = math.ceil(epsilon ** (-13.0 / 3.0))
    c1v = _DEFAULT_C1 if c1 is None else c1
    c2v = _DEFAULT_C2 if c2 is None else c2
    gap = n_half - m_frak
    r = c1v / gap**alpha
    sigma = gap**beta / c2v
    reasons = []
    if r >= 0.5:
        reasons.append("truncation radius exceeds half-period")
    return PlanReport(epsilon, m_frak, alpha, beta, n_half, 2 * n_half,
                      n_min, r, sigma, valid=not reasons,
                      reasons=tuple(reasons))


# ---------------------------------------------------------------------------
# sampling function s_N


def _sn_direct(x, n_half):
    ks = np.arange(-n_half, n_half)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    return np.exp(2j * np.pi * np.outer(xa, ks)).sum(axis=1) / (2 * n_half)


def eval_sn(x, n_half: int):
    """s_N(x), the normalized exponential sum, via its closed form.

    Near the removable singularities (x integer) the closed form loses to
    cancellation and the direct 2N-term sum is used instead.
    """
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    sin_pix = np.sin(np.pi * xa)
    near = np.abs(sin_pix) < 1e-8
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp(-1j * np.pi * xa) * np.sin(2 * np.pi * n_half * xa) / (
            2 * n_half * sin_pix)
    if np.any(near):
        out[near] = _sn_direct(xa[near], n_half)
    return out[0] if scalar else out


_CHUNK = 8192


def sn_derivative(x, n_half: int, order: int):
    """Order-``order`` derivative of s_N by termwise differentiation."""
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if order == 0:
        out = eval_sn(xa, n_half)
        return out[0] if scalar else out
    ks = np.arange(-n_half, n_half)
    coeff = (2j * np.pi * ks) ** order / (2 * n_half)
    out = np.empty(xa.shape, dtype=complex)
    for lo in range(0, len(xa), _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        out[sl] = np.exp(2j * np.pi * np.outer(xa[sl], ks)) @ coeff
    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# periodic Gaussian


class PeriodicGaussian:
    """Normalized periodic Gaussian with Fourier and Poisson-comb routes.

    Fourier route:  c(sigma) * sum_k exp(-k^2/(2 sigma^2)) exp(i 2 pi k x).
    Poisson route:  sum_l g(x + l) with g(u) = d(sigma) exp(-2 pi^2 sigma^2 u^2).

    The normalization c(sigma) makes the value at 0 equal to 1; series are
    truncated so the omitted tail is below ``series_tol`` (Mills-ratio
    bound).  The Poisson route converges fastest for sigma >= 1, the Fourier
    route below; ``method='auto'`` picks accordingly.
    """

    def __init__(self, sigma: float, series_tol: float = 1e-16):
        if sigma <= 0:
            raise InvalidParams("sigma must be positive")
        self.sigma = float(sigma)
        self.series_tol = float(series_tol)

        # normalization: c = 1 / sum_k exp(-k^2 / (2 sigma^2))
        total = 1.0
        k = 0
        while True:
            k += 1
            term = 2.0 * math.exp(-k * k / (2.0 * self.sigma**2))
            total += term
            if self.sigma * mills_tail(k / self.sigma) < self.series_tol * total:
                break
            if k > 2_000_000:
                raise RuntimeError("normalization series failed to converge")
        self.c_sigma = 1.0 / total
        self.d_sigma = self.sigma * self.c_sigma * math.sqrt(2.0 * math.pi)

        # cutoffs certified for derivative orders up to 3
        kf = max(4, int(math.ceil(self.sigma)))
        while 2 * self.c_sigma * (2 * math.pi * kf) ** 3 * math.exp(
                -kf * kf / (2 * self.sigma**2)) > self.series_tol:
            kf += 1
            if kf > 5_000_000:
                raise RuntimeError("Fourier cutoff failed to converge")
        self.fourier_cutoff = kf

        a = 2.0 * math.pi**2 * self.sigma**2
        lc = 1
        while True:
            u = lc - 0.5
            bound = self.d_sigma * max(1.0, 12 * a**2 * u + 8 * a**3 * u**3) \
                * math.exp(-a * u * u)
            if bound < self.series_tol:
                break
            lc += 1
            if lc > 100_000:
                raise RuntimeError("comb cutoff failed to converge")
        self.comb_cutoff = lc

    def _pick(self, method: str) -> str:
        if method == "auto":
            return "poisson" if self.sigma >= 1.0 else "fourier"
        if method not in ("fourier", "poisson"):
            raise ValueError(f"unknown method {method!r}")
        return method

    def deriv(self, x, order: int = 0, method: str = "auto"):
        """G_sigma^(order)(x) for order 0..3, 1-periodic, real."""
        if order not in (0, 1, 2, 3):
            raise ValueError("derivative order must be 0..3")
        xa = np.asarray(x, dtype=float)
        scalar = xa.ndim == 0
        xa = reduce_mod1(np.atleast_1d(xa))
        route = self._pick(method)
        if route == "fourier":
            out = self._deriv_fourier(xa, order)
        else:
            out = self._deriv_poisson(xa, order)
        return float(out[0]) if scalar else out

    def value(self, x, method: str = "auto"):
        return self.deriv(x, 0, method)

    def _deriv_fourier(self, xa, order):
        ks = np.arange(1, self.fourier_cutoff + 1)
        weights = 2.0 * self.c_sigma * (2 * np.pi * ks) ** order \
            * np.exp(-ks**2 / (2 * self.sigma**2))
        out = np.zeros(xa.shape)
        trig = {0: np.cos, 1: np.sin, 2: np.cos, 3: np.sin}[order]
        sign = {0: 1.0, 1: -1.0, 2: -1.0, 3: 1.0}[order]
        for lo in range(0, len(xa), _CHUNK):
            sl = slice(lo, lo + _CHUNK)
            out[sl] = sign * (trig(2 * np.pi * np.outer(xa[sl], ks)) @ weights)
        if order == 0:
            out += self.c_sigma
        return out

    def _deriv_poisson(self, xa, order):
        a = 2.0 * np.pi**2 * self.sigma**2
        out = np.zeros(xa.shape)
        for l in range(-self.comb_cutoff, self.comb_cutoff + 1):
            u = xa + l
            g = self.d_sigma * np.exp(-a * u * u)
            if order == 0:
                out += g
            elif order == 1:
                out += -2 * a * u * g
            elif order == 2:
                out += (4 * a**2 * u * u - 2 * a) * g
            else:
                out += (12 * a**2 * u - 8 * a**3 * u**3) * g
        return out


@lru_cache(maxsize=32)
def _gaussian_for(sigma: float, series_tol: float) -> PeriodicGaussian:
    return PeriodicGaussian(sigma, series_tol)


def eval_g_sigma(x, sigma: float, method: str = "auto",
                 series_tol: float = 1e-16):
    """Normalized periodic Gaussian value, either evaluation route."""
    return _gaussian_for(float(sigma), float(series_tol)).value(x, method)


# ---------------------------------------------------------------------------
# product kernel s_N * G_{r,sigma}


_BINOM = {0: (1,), 1: (1, 1), 2: (1, 2, 1), 3: (1, 3, 3, 1)}


class SamplingKernel:
    """The product x -> s_N(x) G_{r,sigma}(x) and its derivatives to order 3.

    Identically zero for x mod 1 outside [-r, r].
    """

    def __init__(self, params: RegularizerParams):
        self.params = params
        self.gaussian = _gaussian_for(params.sigma, params.series_tol)

    def product_deriv(self, x, order: int = 0, method: str = "auto"):
        """(s_N G_{r,sigma})^(order)(x), Leibniz combination, complex."""
        if order not in (0, 1, 2, 3):
            raise ValueError("derivative order must be 0..3")
        xa = np.asarray(x, dtype=float)
        scalar = xa.ndim == 0
        t = reduce_mod1(np.atleast_1d(xa))
        out = np.zeros(t.shape, dtype=complex)
        mask = np.abs(t) <= self.params.r
        if np.any(mask):
            tm = t[mask]
            acc = np.zeros(tm.shape, dtype=complex)
            for l, b in enumerate(_BINOM[order]):
                s_part = (eval_sn(tm, self.params.n_half) if l == 0
                          else sn_derivative(tm, self.params.n_half, l))
                g_part = self.gaussian.deriv(tm, order - l, method)
                acc += b * s_part * g_part
            out[mask] = acc
        return out[0] if scalar else out

    def regularizer_deriv(self, x, order: int = 0, method: str = "auto"):
        """G_{r,sigma}^(order)(x): the Gaussian derivative inside [-r, r], else 0."""
        if order not in (0, 1, 2, 3):
            raise ValueError("derivative order must be 0..3")
        xa = np.asarray(x, dtype=float)
        scalar = xa.ndim == 0
        t = reduce_mod1(np.atleast_1d(xa))
        out = np.zeros(t.shape)
        mask = np.abs(t) <= self.params.r
        if np.any(mask):
            out[mask] = self.gaussian.deriv(t[mask], order, method)
        return float(out[0]) if scalar else out


class ProductInterpolant:
    """Piecewise-Chebyshev surrogate of (s_N G_{r,sigma})'' on [-r, r].

    The exact Fourier-sum evaluation costs O(N) per point; filter
    quadratures call the second derivative at ~1e5 abscissae, so a degree-20
    interpolant on panels an eighth of an oscillation wide (absolute
    accuracy ~1e-10 relative to the peak) stands in for it there.  The
    exact route stays available for caches and verification.
    """

    _DEG = 20

    def __init__(self, kernel: "SamplingKernel", order: int = 2):
        p = kernel.params
        self.r = p.r
        self.order = order
        n_panels = max(16, int(math.ceil(2.0 * p.r * 8 * p.n_half)))
        self.edges = np.linspace(-p.r, p.r, n_panels + 1)
        self.width = self.edges[1] - self.edges[0]
        deg = self._DEG
        i = np.arange(deg + 1)
        theta = np.pi * (2 * i + 1) / (2 * (deg + 1))
        ref = np.cos(theta)
        mids = (self.edges[:-1] + self.edges[1:]) / 2
        nodes = mids[:, None] + (self.width / 2) * ref[None, :]
        vals = kernel.product_deriv(nodes.ravel(), order).reshape(nodes.shape)
        basis = np.cos(np.outer(i, theta))          # T_k at the Chebyshev nodes
        coeffs = (2.0 / (deg + 1)) * vals @ basis.T
        coeffs[:, 0] /= 2.0
        self.coeffs = coeffs

    def __call__(self, t):
        ta = reduce_mod1(t)
        out = np.zeros(ta.shape, dtype=complex)
        mask = np.abs(ta) <= self.r
        if not np.any(mask):
            return out
        tm = ta[mask]
        idx = np.clip(((tm + self.r) / self.width).astype(int), 0,
                      len(self.edges) - 2)
        mids = (self.edges[idx] + self.edges[idx + 1]) / 2
        u = (tm - mids) / (self.width / 2)
        c = self.coeffs[idx]
        b1 = np.zeros_like(tm, dtype=complex)
        b2 = np.zeros_like(tm, dtype=complex)
        for k in range(c.shape[1] - 1, 0, -1):
            b1, b2 = c[:, k] + 2 * u * b1 - b2, b1
        out[mask] = c[:, 0] + u * b1 - b2
        return out


def eval_regularizer_deriv(x, order: int, params: RegularizerParams,
                           method: str = "auto"):
    return SamplingKernel(params).regularizer_deriv(x, order, method)


def eval_product_deriv(x, order: int, params: RegularizerParams,
                       method: str = "auto"):
    return SamplingKernel(params).product_deriv(x, order, method)


# ---------------------------------------------------------------------------
# reconstruction


def reconstruct(samples: SampleVector, params: RegularizerParams, x):
    """Regularized sampling series sum_j f(j/2N) (s_N G_{r,sigma})(x - j/2N).

    Only the <= ceil(2 r N) + 2 samples inside the truncation window
    contribute; arguments are reduced mod 1.
    """
    if samples.half_count != params.n_half:
        raise ValueError("params.n_half must match samples.half_count")
    kernel = SamplingKernel(params)
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    grid = samples.grid()
    out = np.zeros((len(xa), samples.channels), dtype=complex)
    for lo in range(0, len(xa), 512):
        sl = slice(lo, min(lo + 512, len(xa)))
        t = reduce_mod1(xa[sl, None] - grid[None, :])
        w = np.zeros(t.shape, dtype=complex)
        mask = np.abs(t) <= params.r
        if np.any(mask):
            w[mask] = kernel.product_deriv(t[mask], 0)
        out[sl] = w @ samples.values
    return out[0] if scalar else out


def reconstruct_exact(samples: SampleVector, x):
    """Untruncated, unregularized series; exact on signals with bandwidth <= N."""
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    grid = samples.grid()
    out = np.empty((len(xa), samples.channels), dtype=complex)
    for lo in range(0, len(xa), 512):
        sl = slice(lo, min(lo + 512, len(xa)))
        w = eval_sn(xa[sl, None] - grid[None, :], samples.half_count)
        out[sl] = w @ samples.values
    return out[0] if scalar else out


def verify_integration_by_parts(params: RegularizerParams, x: float, j: int,
                                rtol: float = 1e-11) -> float:
    """Residual of the exact ramp identity for the product kernel.

    Both sides of

        (sG)(x - j/2N) = (x + r - j/2N) (sG)'(-r) + (sG)(-r)
                         + int_{x-r}^{x+r} relu(y - j/2N) (sG)''(x - y) dy

    are evaluated (the quadrature split at the ramp kink y = j/2N) and the
    absolute difference returned.  Preconditions: x in [r, 1-r] and
    x - j/2N in [-r, r).
    """
    r = params.r
    if not (r <= x <= 1.0 - r):
        raise ValueError("x must lie in the predictable zone [r, 1-r]")
    c = j / (2 * params.n_half)
    t = x - c
    if not (-r <= t < r):
        raise ValueError("x - j/2N must lie in [-r, r)")
    kernel = SamplingKernel(params)
    left = kernel.product_deriv(t, 0)

    def integrand(y):
        ramp = np.maximum(y - c, 0.0)
        return ramp * kernel.product_deriv(x - y, 2)

    quad = integrate(integrand, x - r, x + r, breakpoints=(c,), rtol=rtol,
                     atol=1e-13, order=32)
    right = (x + r - c) * kernel.product_deriv(-r, 1) \
        + kernel.product_deriv(-r, 0) + quad
    return float(abs(left - right))

"""The explicit two-layer graphon network.

Layer 1 applies ReLU ramp features rho_j(y) = relu(y - j/2N) followed by the
graphon filter with kernel

    K(x, y) = (d^2/dy^2)(s_N G_{r,sigma})(x - y) * W(x, y) / W_x,

layer 2 contracts the filtered features with the 2N sampled signal values.
A feature only contributes where its ramp onset j/2N lies inside the kernel
window around x: outside the window the filter sees a plain affine tail
whose response is not controlled for non-constant W, and the network locality
contract requires those weights to have exactly no influence.  The windowed
sum is evaluated as one quadrature of f_sharp minus a per-window affine
correction obtained from prefix sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphons import Graphon, RegularityCertificate, local_average
from .kernels import ProductInterpolant, RegularizerParams, SamplingKernel, reduce_mod1
from .quadrature import _composite, gauss_legendre, integrate, l2_error
from .signals import BandlimitedSignal, SampleVector, sample_uniform

__all__ = [
    "WnnKernel",
    "WnnModel",
    "build_wnn",
    "kernel_eval",
    "graphon_filter",
    "wnn_forward",
    "wnn_forward_many",
    "wnn_zone_error",
]

_WX_FLOOR = 1e-12


@dataclass
class WnnKernel:
    """Filter kernel state: sampling kernel, graphon, window averages."""

    sampling_kernel: SamplingKernel
    graphon: Graphon
    certificate: RegularityCertificate | None = None
    exact_second_deriv: bool = False
    _wx_cache: dict = field(default_factory=dict, repr=False)
    _interp: ProductInterpolant | None = field(default=None, repr=False)

    @property
    def params(self) -> RegularizerParams:
        return self.sampling_kernel.params

    def wx(self, x: float) -> float:
        """Window average of the graphon at x, cached per evaluation point."""
        key = float(x)
        val = self._wx_cache.get(key)
        if val is None:
            val = local_average(self.graphon, key, self.params.r)
            self._wx_cache[key] = val
        if val < _WX_FLOOR:
            raise ZeroDivisionError(
                f"window average {val:.3e} at x={x} is degenerate")
        return val

    def second_deriv(self, t):
        """(s_N G_{r,sigma})''(t): Chebyshev surrogate or the exact sum."""
        if self.exact_second_deriv:
            return self.sampling_kernel.product_deriv(t, 2)
        if self._interp is None:
            self._interp = ProductInterpolant(self.sampling_kernel, 2)
        return self._interp(t)

    def row(self, x: float, y) -> np.ndarray:
        """K(x, y) for an array of y at fixed x."""
        ya = np.atleast_1d(np.asarray(y, dtype=float))
        g2 = self.second_deriv(x - ya)
        out = np.zeros(ya.shape, dtype=complex)
        mask = g2 != 0
        if np.any(mask):
            w = np.asarray(self.graphon(x, ya[mask]), dtype=float)
            out[mask] = g2[mask] * w / self.wx(x)
        return out


def kernel_eval(kernel: WnnKernel, x: float, y: float) -> complex:
    """Pointwise kernel value; zero outside the truncation band."""
    t = float(reduce_mod1(x - y))
    if abs(t) > kernel.params.r:
        return 0.0 + 0.0j
    g2 = complex(kernel.sampling_kernel.product_deriv(t, 2))
    w = float(kernel.graphon(x, y))
    return g2 * w / kernel.wx(x)


def _support_pieces(x: float, r: float):
    """Support window [x-r, x+r] mod 1, clipped into [0,1] pieces."""
    if x - r >= 0.0 and x + r <= 1.0:
        return [(x - r, x + r)]
    if x - r < 0.0:
        return [(0.0, x + r), (x - r + 1.0, 1.0)]
    return [(x - r, 1.0), (0.0, x + r - 1.0)]


def _piece_breakpoints(kernel: WnnKernel, x: float, a: float, b: float,
                       extra=()):
    pts = [p for p in extra if a < p < b]
    if kernel.graphon.diagonal_kink and a < x < b:
        pts.append(x)
    for p in kernel.graphon.kink_lines:
        if a < p < b:
            pts.append(p)
    return pts


def graphon_filter(kernel: WnnKernel, g, x: float, rtol: float = 1e-9):
    """T_K g(x) = int K(x,y) g(y) dy over the kernel support window.

    ``g`` is a vectorized callable on [0,1] returning (n,) or (n, channels).
    Quadrature panels split at the sample-grid points inside the window, at
    declared graphon kinks, and at the window edges.
    """
    two_n = 2 * kernel.params.n_half
    grid = np.arange(two_n) / two_n

    def integrand(y):
        row = kernel.row(x, y)
        gv = np.asarray(g(y))
        return row * gv if gv.ndim == 1 else row[:, None] * gv

    total = None
    for a, b in _support_pieces(x, kernel.params.r):
        if b <= a:
            continue
        bps = _piece_breakpoints(kernel, x, a, b,
                                 extra=grid[(grid > a) & (grid < b)])
        val = integrate(integrand, a, b, breakpoints=bps, rtol=rtol,
                        atol=1e-15, order=16)
        total = val if total is None else total + val
    return total


@dataclass
class WnnModel:
    """Two-layer network: 2N linear weights (sampled values) plus the kernel."""

    weights: SampleVector
    kernel: WnnKernel

    def __post_init__(self):
        if self.weights.half_count != self.kernel.params.n_half:
            raise ValueError("weight count must be 2N for the kernel's N")
        # prefix sums over (f_j, f_j * j/2N) drive the affine tail correction
        c = self.weights.grid()
        vals = self.weights.values
        self._cum_f = np.concatenate(
            [np.zeros((1, vals.shape[1]), complex), np.cumsum(vals, axis=0)])
        self._cum_cf = np.concatenate(
            [np.zeros((1, vals.shape[1]), complex),
             np.cumsum(vals * c[:, None], axis=0)])

    @property
    def params(self) -> RegularizerParams:
        return self.kernel.params

    def _range_sums(self, lo: float, hi: float, lo_open: bool, hi_open: bool):
        """Sums of f_j and f_j * c_j over grid points c_j in the interval."""
        c = self.weights.grid()
        i0 = np.searchsorted(c, lo, side="right" if lo_open else "left")
        i1 = np.searchsorted(c, hi, side="left" if hi_open else "right")
        if i1 <= i0:
            z = np.zeros(self.weights.channels, dtype=complex)
            return z, z
        return (self._cum_f[i1] - self._cum_f[i0],
                self._cum_cf[i1] - self._cum_cf[i0])


def build_wnn(signal: BandlimitedSignal, graphon: Graphon,
              certificate: RegularityCertificate | None,
              params: RegularizerParams, **kernel_opts) -> WnnModel:
    weights = sample_uniform(signal, params.n_half)
    kern = WnnKernel(SamplingKernel(params), graphon, certificate, **kernel_opts)
    return WnnModel(weights, kern)


def wnn_forward(model: WnnModel, x: float, rtol: float = 1e-9) -> np.ndarray:
    """Network output at x: windowed features contracted with the weights.

    Equals sum over j with |x - j/2N| mod 1 <= r of f(j/2N) T_K rho_j(x);
    per support piece the integrand is f_sharp minus the affine tail of the
    ramps whose onsets fall outside the window.
    """
    kern = model.kernel
    p = model.params
    r = p.r
    grid = model.weights.grid()
    vals = model.weights.values
    out = np.zeros(model.weights.channels, dtype=complex)
    for a, b in _support_pieces(float(x), r):
        if b <= a:
            continue
        # ramps with onset below the piece but outside the window are affine
        # on the piece; remove them via the prefix sums
        if x - r >= 0.0 and x + r <= 1.0:
            s1, s2 = model._range_sums(0.0, x - r, False, True)
        elif x - r < 0.0:
            if a == 0.0:
                s1 = s2 = np.zeros(model.weights.channels, dtype=complex)
            else:
                s1, s2 = model._range_sums(x + r, x - r + 1.0, True, True)
        else:
            if a == 0.0:
                s1 = s2 = np.zeros(model.weights.channels, dtype=complex)
            else:
                s1, s2 = model._range_sums(x + r - 1.0, x - r, True, True)

        bps = _piece_breakpoints(kern, float(x), a, b,
                                 extra=grid[(grid > a) & (grid < b)])

        def integrand(y, s1=s1, s2=s2):
            ramp = np.maximum(y[:, None] - grid[None, :], 0.0)
            fs = ramp.astype(complex) @ vals
            fs -= y[:, None] * s1[None, :] - s2[None, :]
            return kern.row(float(x), y)[:, None] * fs

        # panels already isolate every kink: two fixed Gauss orders agree to
        # machine level, with a fall back to full dyadic refinement if not
        edges = np.unique(np.array([a, b] + list(bps)))
        v16 = _composite(integrand, edges, 0, 16, np.float64)
        v24 = _composite(integrand, edges, 0, 24, np.float64)
        if np.max(np.abs(v24 - v16)) > max(rtol * np.max(np.abs(v24)), 1e-15):
            v24 = integrate(integrand, a, b, breakpoints=bps, rtol=rtol,
                            atol=1e-15, order=24)
        out = out + v24
    return out


def wnn_forward_many(model: WnnModel, xs, rtol: float = 1e-9) -> np.ndarray:
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    return np.stack([wnn_forward(model, float(x), rtol=rtol) for x in xs])


def wnn_zone_error(model: WnnModel, reference, rtol: float = 1e-6) -> float:
    """L2 error against a vectorized reference over the predictable zone.

    Quadrature panels split where the network output has kinks (window-edge
    crossings j/2N +- r) and at the sample grid points.
    """
    p = model.params
    lo, hi = p.zone
    grid = model.weights.grid()
    bps = np.concatenate([grid, grid + p.r, grid - p.r])
    bps = np.unique(bps[(bps > lo) & (bps < hi)])
    return l2_error(lambda x: wnn_forward_many(model, x),
                    reference, (lo, hi), breakpoints=bps, rtol=rtol,
                    order=8, max_depth=6)

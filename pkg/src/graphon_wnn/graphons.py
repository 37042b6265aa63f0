"""Graphons, regularity certificates, local averages, and generated graphs.

A graphon is an evaluable symmetric kernel W on [0,1]^2 with values in
[0,1].  The built-in fixtures satisfy the diagonal regularity assumption
(nonvanishing and locally Lipschitz on a band |x-y| <= kappa) with
analytically declared constants, except the two-block model which is
included deliberately as a negative fixture.
"""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .quadrature import gauss_legendre
from .rng import pair_uniform

__all__ = [
    "Graphon",
    "RegularityCertificate",
    "VertexGrid",
    "AdjacencyMatrix",
    "StepGraphon",
    "StepSignal",
    "builtin_graphon",
    "estimate_regularity",
    "local_average",
    "local_average_batch",
    "deterministic_graph",
    "random_graph",
    "step_graphon",
    "step_signal",
    "save_adjacency_csv",
    "load_adjacency_csv",
    "save_adjacency_binary",
    "load_adjacency_binary",
]


@dataclass(frozen=True)
class Graphon:
    """Symmetric kernel W(x, y) on [0,1]^2 -> [0,1].

    ``kernel`` must accept broadcastable arrays.  ``kink_lines`` lists y
    offsets (absolute, or None for the moving diagonal kink at y = x) where
    W(x, .) is not smooth; quadratures split panels there.
    """

    name: str
    kernel: Callable = field(repr=False)
    diagonal_kink: bool = False
    kink_lines: tuple = ()
    regularity_caveat: str | None = None

    def __call__(self, x, y):
        return self.kernel(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


@dataclass(frozen=True)
class RegularityCertificate:
    """Constants (kappa, eta, K) certifying diagonal-band regularity."""

    kappa: float
    eta: float
    lipschitz_k: float
    method: str = "declared"          # declared | grid-estimated
    grid_resolution: int = 0

    def __post_init__(self):
        if not (0.0 < self.kappa < 1.0):
            raise ValueError("kappa must lie in (0,1)")
        if not (0.0 < self.eta < 1.0 or math.isclose(self.eta, 1.0)):
            raise ValueError("eta must lie in (0,1]")
        if self.lipschitz_k < 0:
            raise ValueError("Lipschitz constant must be nonnegative")


def builtin_graphon(name: str, **kwargs):
    """Built-in graphon fixtures.

    Returns (graphon, certificate); the two-block model ('sbm') returns
    certificate None and a caveat, since its block boundary violates the
    diagonal regularity assumption.
    """
    if name.startswith("constant"):
        p = float(kwargs.get("p", 0.7))
        if not 0.0 < p <= 1.0:
            raise ValueError("constant graphon needs p in (0,1]")

        def const(x, y, _p=p):
            shape = np.broadcast_shapes(np.shape(x), np.shape(y))
            return np.full(shape, _p)

        return Graphon(f"constant({p})", const), RegularityCertificate(0.49, p, 0.0)
    if name == "ring":
        kappa = float(kwargs.get("kappa", 0.1))
        if not 0.0 < kappa < 0.5:
            raise ValueError("ring certificate needs kappa in (0, 1/2)")
        g = Graphon("ring", lambda x, y: (1.0 + np.cos(2 * np.pi * (x - y))) / 2.0)
        eta = (1.0 + math.cos(2 * math.pi * kappa)) / 2.0
        return g, RegularityCertificate(kappa, eta, math.pi)
    if name == "tent":
        eta0 = float(kwargs.get("eta0", 0.5))
        if not 0.0 < eta0 < 1.0:
            raise ValueError("tent graphon needs eta0 in (0,1)")
        g = Graphon(f"tent({eta0})",
                    lambda x, y: np.maximum(eta0, 1.0 - np.abs(x - y)),
                    diagonal_kink=True)
        return g, RegularityCertificate(0.49, eta0, 1.0)
    if name == "sbm":
        p_in = float(kwargs.get("p_in", 0.8))
        p_out = float(kwargs.get("p_out", 0.15))

        def sbm(x, y):
            same = (np.asarray(x) < 0.5) == (np.asarray(y) < 0.5)
            return np.where(same, p_in, p_out)

        g = Graphon(f"sbm({p_in},{p_out})", sbm, kink_lines=(0.5,),
                    regularity_caveat="assumption violated at block boundary")
        return g, None
    raise ValueError(f"unknown builtin graphon {name!r}")


def estimate_regularity(graphon: Graphon, kappa: float,
                        grid_resolution: int = 256) -> RegularityCertificate:
    """Grid-estimated certificate: empirical eta and Lipschitz proxies.

    eta_hat is the minimum of W over grid pairs inside the diagonal band;
    K_hat the largest adjacent difference quotient there.  Both are
    empirical proxies, labeled 'grid-estimated'.
    """
    if not 0.0 < kappa <= 0.5:
        raise ValueError("kappa must lie in (0, 1/2]")
    if grid_resolution < 64:
        raise ValueError("grid_resolution must be at least 64")
    xs = np.linspace(0.0, 1.0, grid_resolution)
    w = np.asarray(graphon(xs[:, None], xs[None, :]), dtype=float)
    band = np.abs(xs[:, None] - xs[None, :]) <= kappa
    eta_hat = float(np.min(np.where(band, w, np.inf)))
    if eta_hat <= 0.0:
        raise ValueError("nonvanishing condition violated on the diagonal band")
    h = xs[1] - xs[0]
    quot = np.abs(np.diff(w, axis=1)) / h
    both = band[:, 1:] & band[:, :-1]
    k_hat = float(np.max(np.where(both, quot, 0.0)))
    return RegularityCertificate(kappa, eta_hat, k_hat,
                                 method="grid-estimated",
                                 grid_resolution=grid_resolution)


def _window_breakpoints(graphon: Graphon, x: float, lo: float, hi: float):
    pts = []
    if graphon.diagonal_kink and lo < x < hi:
        pts.append(x)
    for p in graphon.kink_lines:
        if lo < p < hi:
            pts.append(p)
    return pts


def local_average(graphon: Graphon, x: float, r: float) -> float:
    """Window average W_x = (1/|I_x|) int_{I_x} W(x,y) dy, I_x = [0,1] n [x-r, x+r].

    Composite 64-point Gauss-Legendre with panels split at declared kinks.
    """
    if not 0.0 < r < 0.5:
        raise ValueError("r must lie in (0, 1/2)")
    lo, hi = max(0.0, x - r), min(1.0, x + r)
    edges = sorted({lo, hi, *_window_breakpoints(graphon, x, lo, hi)})
    nodes, weights = gauss_legendre(64)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        ys = (a + b) / 2 + (b - a) / 2 * nodes
        total += (b - a) / 2 * float(np.sum(weights * np.asarray(graphon(x, ys))))
    return total / (hi - lo)


def local_average_batch(graphon: Graphon, xs: np.ndarray, r: float) -> np.ndarray:
    """Vectorized ``local_average`` over many evaluation points.

    Builds the full ragged panel list (window clipping and kink splits per
    point) and evaluates one stacked Gauss-Legendre pass.
    """
    xs = np.asarray(xs, dtype=float)
    panels_a, panels_b, owner = [], [], []
    for i, x in enumerate(xs):
        lo, hi = max(0.0, x - r), min(1.0, x + r)
        edges = sorted({lo, hi, *_window_breakpoints(graphon, float(x), lo, hi)})
        for a, b in zip(edges[:-1], edges[1:]):
            panels_a.append(a)
            panels_b.append(b)
            owner.append(i)
    a = np.array(panels_a)
    b = np.array(panels_b)
    owner = np.array(owner)
    nodes, weights = gauss_legendre(64)
    ys = (a[:, None] + b[:, None]) / 2 + (b - a)[:, None] / 2 * nodes[None, :]
    vals = np.asarray(graphon(xs[owner][:, None], ys))
    per_panel = (b - a) / 2 * (vals @ weights)
    out = np.zeros(len(xs))
    np.add.at(out, owner, per_panel)
    width = np.minimum(1.0, xs + r) - np.maximum(0.0, xs - r)
    return out / width


@dataclass(frozen=True)
class VertexGrid:
    """Vertex coordinates x_k = (k-1)/n and cells I_k = [(k-1)/n, k/n)."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one vertex")

    def points(self) -> np.ndarray:
        return np.arange(self.n) / self.n

    def cell_of(self, x) -> np.ndarray:
        """Index of the half-open cell containing x; x = 1 maps to the last."""
        idx = np.floor(np.asarray(x, dtype=float) * self.n).astype(int)
        return np.clip(idx, 0, self.n - 1)


@dataclass(frozen=True)
class AdjacencyMatrix:
    n: int
    entries: np.ndarray = field(repr=False)
    kind: str = "deterministic"       # deterministic | random-realized
    seed: int | None = None

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.shape != (self.n, self.n):
            raise ValueError(f"entries must be {self.n}x{self.n}")
        if self.kind not in ("deterministic", "random-realized"):
            raise ValueError("kind must be 'deterministic' or 'random-realized'")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)


def deterministic_graph(graphon: Graphon, n: int) -> AdjacencyMatrix:
    """Weighted graph with entries W(x_k, x_l), zero diagonal.

    The upper triangle is mirrored so the matrix is exactly symmetric even
    for kernels that are only symmetric up to rounding.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    xs = VertexGrid(n).points()
    w = np.asarray(graphon(xs[:, None], xs[None, :]), dtype=float).copy()
    upper = np.triu(w, k=1)
    entries = upper + upper.T
    return AdjacencyMatrix(n, entries, kind="deterministic")


def random_graph(graphon: Graphon, n: int, seed: int) -> AdjacencyMatrix:
    """Simple random graph: edge (k,l) ~ Bernoulli(W(x_k, x_l)), k > l.

    Draws come from the stateless counter stream keyed by (seed, k, l), so
    entry (k, l) is reproducible independently of n and of evaluation order.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    xs = VertexGrid(n).points()
    kk, ll = np.tril_indices(n, k=-1)
    probs = np.asarray(graphon(xs[kk], xs[ll]), dtype=float)
    edges = (pair_uniform(seed, kk, ll) < probs).astype(float)
    entries = np.zeros((n, n))
    entries[kk, ll] = edges
    entries[ll, kk] = edges
    return AdjacencyMatrix(n, entries, kind="random-realized", seed=seed)


@dataclass(frozen=True)
class StepGraphon:
    """Piecewise-constant lift of an adjacency matrix to [0,1]^2."""

    n: int
    values: np.ndarray = field(repr=False)

    def __call__(self, x, y):
        grid = VertexGrid(self.n)
        return self.values[grid.cell_of(x), grid.cell_of(y)]


@dataclass(frozen=True)
class StepSignal:
    """Piecewise-constant signal on the vertex cells; shape (n,) or (n, m)."""

    n: int
    channels: int
    values: np.ndarray = field(repr=False)

    def __call__(self, x):
        return self.values[VertexGrid(self.n).cell_of(x)]


def step_graphon(adj: AdjacencyMatrix) -> StepGraphon:
    return StepGraphon(adj.n, np.asarray(adj.entries))


def step_signal(values, n: int) -> StepSignal:
    v = np.asarray(values)
    if v.shape[0] != n:
        raise ValueError("need one value row per cell")
    channels = 1 if v.ndim == 1 else v.shape[1]
    return StepSignal(n, channels, v)


# ---------------------------------------------------------------------------
# adjacency import/export


def save_adjacency_csv(adj: AdjacencyMatrix, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{adj.n}\n")
        for row in adj.entries:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def load_adjacency_csv(path, kind: str = "deterministic") -> AdjacencyMatrix:
    with open(path) as fh:
        n = int(fh.readline().strip())
        rows = [[float(v) for v in fh.readline().split(",")] for _ in range(n)]
    return AdjacencyMatrix(n, np.array(rows), kind=kind)


_MAGIC = b"GWADJ1"


def save_adjacency_binary(adj: AdjacencyMatrix, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", adj.n))
        fh.write(np.ascontiguousarray(adj.entries, dtype="<f8").tobytes())


def load_adjacency_binary(path, kind: str = "deterministic") -> AdjacencyMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(6)
        if magic != _MAGIC:
            raise ValueError("not an adjacency file (bad magic)")
        (n,) = struct.unpack("<I", fh.read(4))
        data = np.frombuffer(fh.read(8 * n * n), dtype="<f8").reshape(n, n)
    return AdjacencyMatrix(int(n), data.copy(), kind=kind)

"""Fourier-bandlimited vector signals on [0,1] and their uniform samples.

A bandlimited signal is stored densely as its Fourier coefficients on the
asymmetric integer band ``{-m_frak, ..., m_frak - 1}`` (2*m_frak modes).
Evaluation, uniform sampling, coefficient recovery by DFT, and the energy
identities live here.  All types are immutable after construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AliasingError",
    "IndexBand",
    "BandlimitedSignal",
    "SampleVector",
    "sample_uniform",
    "coeffs_from_samples",
    "energy",
    "sample_energy",
    "random_signal",
    "random_real_signal",
]


class AliasingError(ValueError):
    """Requested band is wider than the sample rate supports."""


@dataclass(frozen=True)
class IndexBand:
    """The integer band {-half_width, ..., half_width - 1}."""

    half_width: int

    def __post_init__(self):
        if self.half_width < 1:
            raise ValueError("band half-width must be a positive integer")

    @property
    def size(self) -> int:
        return 2 * self.half_width

    def indices(self) -> np.ndarray:
        return np.arange(-self.half_width, self.half_width)


@dataclass(frozen=True)
class BandlimitedSignal:
    """Coefficients f_hat(k) for k in the band; shape (2*m_frak, channels)."""

    band: IndexBand
    channels: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.band.size, self.channels):
            raise ValueError(
                f"coeffs must have shape {(self.band.size, self.channels)}, got {c.shape}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def m_frak(self) -> int:
        return self.band.half_width

    def coeff(self, k: int) -> np.ndarray:
        """f_hat(k); zero for k outside the band."""
        if -self.m_frak <= k < self.m_frak:
            return self.coeffs[k + self.m_frak]
        return np.zeros(self.channels, dtype=complex)

    def evaluate(self, x):
        """Evaluate at x in [0,1]; accepts scalars or arrays.

        Returns shape (channels,) for scalar x, else (len(x), channels).
        Exactly 1-periodic at the endpoints.
        """
        xa = np.asarray(x, dtype=float)
        if np.any(xa < 0.0) or np.any(xa > 1.0):
            raise ValueError("evaluation point outside [0,1]")
        scalar = xa.ndim == 0
        xa = np.atleast_1d(xa)
        ks = self.band.indices()
        phases = np.exp(2j * np.pi * np.outer(xa, ks))
        out = phases @ self.coeffs
        return out[0] if scalar else out

    def __call__(self, x):
        return self.evaluate(x)

    def to_json(self) -> str:
        # channel-major flat list of [re, im] pairs, k = -m..m-1 within each channel
        flat = self.coeffs.T.reshape(-1)
        return json.dumps({
            "m_frak": self.m_frak,
            "channels": self.channels,
            "coeffs": [[float(z.real), float(z.imag)] for z in flat],
        })

    @classmethod
    def from_json(cls, text: str) -> "BandlimitedSignal":
        obj = json.loads(text)
        m_frak, channels = int(obj["m_frak"]), int(obj["channels"])
        flat = np.array([complex(re, im) for re, im in obj["coeffs"]])
        if flat.size != 2 * m_frak * channels:
            raise ValueError("coefficient count does not match m_frak and channels")
        coeffs = flat.reshape(channels, 2 * m_frak).T
        return cls(IndexBand(m_frak), channels, coeffs)


@dataclass(frozen=True)
class SampleVector:
    """Values f(j/2N), j = 0..2N-1; shape (2N, channels)."""

    half_count: int
    channels: int
    values: np.ndarray = field(repr=False)
    source_bandwidth: int | None = None

    def __post_init__(self):
        if self.half_count < 1:
            raise ValueError("half_count must be a positive integer")
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (2 * self.half_count, self.channels):
            raise ValueError(
                f"values must have shape {(2 * self.half_count, self.channels)}, got {v.shape}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def sub_nyquist(self) -> bool:
        """True when the originating signal had bandwidth above N."""
        return self.source_bandwidth is not None and self.source_bandwidth > self.half_count

    def grid(self) -> np.ndarray:
        return np.arange(2 * self.half_count) / (2 * self.half_count)

    def to_json(self) -> str:
        flat = self.values.T.reshape(-1)
        return json.dumps({
            "N": self.half_count,
            "channels": self.channels,
            "values": [[float(z.real), float(z.imag)] for z in flat],
        })

    @classmethod
    def from_json(cls, text: str) -> "SampleVector":
        obj = json.loads(text)
        n_half, channels = int(obj["N"]), int(obj["channels"])
        flat = np.array([complex(re, im) for re, im in obj["values"]])
        values = flat.reshape(channels, 2 * n_half).T
        return cls(n_half, channels, values)


def sample_uniform(signal: BandlimitedSignal, n_half: int) -> SampleVector:
    """Sample at j/2N, j = 0..2N-1.  Sub-Nyquist rates are permitted but the
    result is flagged via ``source_bandwidth``."""
    values = signal.evaluate(np.arange(2 * n_half) / (2 * n_half))
    return SampleVector(n_half, signal.channels, values,
                        source_bandwidth=signal.m_frak)


def coeffs_from_samples(samples: SampleVector, band: IndexBand) -> BandlimitedSignal:
    """Recover coefficients on the band by the 2N-point DFT.

    Requires band half-width <= N; below that rate recovery is not
    guaranteed and an :class:`AliasingError` is raised.
    """
    n_half = samples.half_count
    if band.half_width > n_half:
        raise AliasingError(
            f"band half-width {band.half_width} exceeds sample half-count {n_half}"
        )
    j = np.arange(2 * n_half)
    ks = band.indices()
    dft = np.exp(-2j * np.pi * np.outer(ks, j) / (2 * n_half))
    coeffs = (dft @ samples.values) / (2 * n_half)
    return BandlimitedSignal(band, samples.channels, coeffs)


def energy(signal: BandlimitedSignal) -> float:
    """Squared L2 norm, sum_k |f_hat(k)|^2 (Parseval)."""
    return float(np.sum(np.abs(signal.coeffs) ** 2))


def sample_energy(samples: SampleVector) -> float:
    """Discrete energy (1/2N) sum_j |f(j/2N)|^2.

    Equals ``energy`` of the originating signal whenever N is at or above
    the Nyquist rate.
    """
    return float(np.sum(np.abs(samples.values) ** 2) / (2 * samples.half_count))


def random_signal(m_frak: int, channels: int, seed: int,
                  normalize: bool = False) -> BandlimitedSignal:
    """Coefficients drawn i.i.d. standard complex normal; deterministic per seed."""
    rng = np.random.default_rng(seed)
    shape = (2 * m_frak, channels)
    coeffs = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    if normalize:
        coeffs = coeffs / np.sqrt(np.sum(np.abs(coeffs) ** 2))
    return BandlimitedSignal(IndexBand(m_frak), channels, coeffs)


def random_real_signal(m_frak: int, channels: int, seed: int,
                       normalize: bool = False) -> BandlimitedSignal:
    """Random signal with exactly real evaluations.

    The band {-m, ..., m-1} is asymmetric, so real signals put Hermitian
    coefficients on {-(m-1), ..., m-1} and leave f_hat(-m) = 0.
    """
    rng = np.random.default_rng(seed)
    coeffs = np.zeros((2 * m_frak, channels), dtype=complex)
    coeffs[m_frak] = rng.standard_normal(channels)  # k = 0 real
    for k in range(1, m_frak):
        z = (rng.standard_normal(channels) + 1j * rng.standard_normal(channels)) / np.sqrt(2)
        coeffs[m_frak + k] = z
        coeffs[m_frak - k] = np.conj(z)
    if normalize:
        coeffs = coeffs / np.sqrt(np.sum(np.abs(coeffs) ** 2))
    return BandlimitedSignal(IndexBand(m_frak), channels, coeffs)

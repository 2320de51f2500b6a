"""Functions on the discrete torus Z/N sampled at x_k = k/N.

Frequencies are the integers in [-N/2, N/2). The forward transform carries
the 1/N factor so that a single exponential has unit coefficient.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def _check_power_of_two(n: int) -> None:
    if n < 8 or n & (n - 1):
        raise ValueError(f"grid size must be a power of two >= 8, got {n}")


def frequencies(n: int) -> np.ndarray:
    """Integer frequencies -N/2, ..., N/2 - 1 in storage order."""
    return np.arange(-n // 2, n // 2)


def points(n: int) -> np.ndarray:
    return np.arange(n) / n


@dataclass(frozen=True)
class GridFunction:
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        _check_power_of_two(s.shape[0])
        if s.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    def __add__(self, other: GridFunction) -> GridFunction:
        return GridFunction(self.samples + other.samples)

    def __mul__(self, c) -> GridFunction:
        if isinstance(c, GridFunction):
            return GridFunction(self.samples * c.samples)
        return GridFunction(self.samples * c)

    __rmul__ = __mul__

    def abs(self) -> GridFunction:
        return GridFunction(np.abs(self.samples))

    def l2(self) -> float:
        return float(np.sqrt(np.mean(np.abs(self.samples) ** 2)))

    def l1(self) -> float:
        return float(np.mean(np.abs(self.samples)))


@dataclass(frozen=True)
class Spectrum:
    """Coefficients indexed by xi in [-N/2, N/2); coefficients[i] is xi = i - N/2."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        _check_power_of_two(c.shape[0])
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def n(self) -> int:
        return self.coefficients.shape[0]

    @property
    def freqs(self) -> np.ndarray:
        return frequencies(self.n)

    def at(self, xi: int) -> complex:
        return complex(self.coefficients[xi + self.n // 2])

    @classmethod
    def from_modes(cls, n: int, modes: dict[int, complex]) -> Spectrum:
        c = np.zeros(n, dtype=complex)
        for xi, val in modes.items():
            if not -n // 2 <= xi < n // 2:
                raise ValueError(f"frequency {xi} outside grid of size {n}")
            c[xi + n // 2] = val
        return cls(c)


@dataclass(frozen=True)
class CutoffFunction:
    """Integer frequency cutoff N(x_k) per grid point, each in [-N/2, N/2]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if not np.issubdtype(v.dtype, np.integer):
            if not np.all(v == np.round(v)):
                raise ValueError("cutoff values must be integers")
            v = v.astype(np.int64)
        n = v.shape[0]
        _check_power_of_two(n)
        if v.min() < -n // 2 or v.max() > n // 2:
            raise ValueError("cutoff values must lie in [-N/2, N/2]")
        v = v.astype(np.int64)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @classmethod
    def constant(cls, n: int, value: int) -> CutoffFunction:
        return cls(np.full(n, value, dtype=np.int64))

    def in_interval(self, lo, hi) -> np.ndarray:
        """Boolean mask of {x : lo <= N(x) < hi}; exact for rational endpoints."""
        return (self.values >= math.ceil(lo)) & (self.values < math.ceil(hi))


def forward_transform(f: GridFunction) -> Spectrum:
    n = f.n
    return Spectrum(np.fft.fftshift(np.fft.fft(f.samples)) / n)


def inverse_transform(s: Spectrum) -> GridFunction:
    n = s.n
    return GridFunction(np.fft.ifft(np.fft.ifftshift(s.coefficients)) * n)


def direct_forward(f: GridFunction) -> Spectrum:
    """O(N^2) transform by explicit summation; used as an oracle for the FFT path."""
    n = f.n
    x = points(n)
    kernel = np.exp(-2j * np.pi * np.outer(frequencies(n), x))
    return Spectrum(kernel @ f.samples / n)


def inner_product(f: GridFunction, g: GridFunction) -> complex:
    """<f, g> = (1/N) sum f conj(g); linear in f, conjugate-linear in g."""
    if f.n != g.n:
        raise ValueError(f"dimension mismatch: {f.n} vs {g.n}")
    return complex(np.vdot(g.samples, f.samples) / f.n)


def dyadic_intervals(n: int):
    """All (start, length) index ranges of the standard dyadic grid on Z/N, coarsest first."""
    length = n
    while length >= 1:
        for start in range(0, n, length):
            yield start, length
        length //= 2


def dyadic_maximal(f: GridFunction) -> GridFunction:
    """Dyadic Hardy-Littlewood maximal function of |f|, down to single cells."""
    a = np.abs(f.samples)
    n = a.shape[0]
    out = np.zeros(n)
    length = n
    while length >= 1:
        avg = a.reshape(-1, length).mean(axis=1)
        out = np.maximum(out, np.repeat(avg, length))
        length //= 2
    return GridFunction(out)


def measure(mask: np.ndarray) -> float:
    """Lebesgue measure of a grid subset of the unit torus."""
    return float(np.count_nonzero(mask)) / mask.shape[0]

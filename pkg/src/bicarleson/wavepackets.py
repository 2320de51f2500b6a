"""Wave packets adapted to tiles, coefficient sequences, and Walsh packets.

A Fourier packet on I x omega has coefficients

    c(xi) = A b((xi - c(omega)) / |omega|) e(-xi c(I))

where b is a bump supported in |s| < 0.45, so the spectrum vanishes exactly
outside (9/10) omega. A normalizes sum |c|^2 = 1, which is the L^2(torus)
norm. Different families differ in the bump profile. The default sharpness
puts the peak of d^5 |phi| within a few |I| of the center, so the measured
decay constants do not depend on how much torus lies beyond it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .grid import CutoffFunction, GridFunction, Spectrum, frequencies, inverse_transform, points
from .tiles import BiTile, Tile, TriTile

MIN_WIDTH = 8
EDGE = 0.45


class ResolutionError(ValueError):
    pass


@dataclass(frozen=True)
class PacketFamily:
    """Bump b(s) = exp(-p / (1 - t^2)) with t = max(|s| - flat, 0) / (0.45 - flat), zero for |t| >= 1.

    flat > 0 gives a plateau on |s| <= flat; larger p sharpens the frequency profile.
    """

    name: str
    sharpness: float
    flat: float = 0.0

    def bump(self, s) -> np.ndarray:
        s = np.abs(np.asarray(s, dtype=float))
        t = np.maximum(s - self.flat, 0.0) / (EDGE - self.flat)
        out = np.zeros_like(t)
        m = t < 1
        out[m] = np.exp(-self.sharpness / (1 - t[m] ** 2) + self.sharpness)
        return out


PHI = PacketFamily("phi", 6.5)
PHI_TILDE = PacketFamily("phi_tilde", 7.0)
PHI_TILDE2 = PacketFamily("phi_tilde2", 6.75)
FLAT = PacketFamily("flat", 1.0, 0.3)
FAMILIES = {f.name: f for f in (PHI, PHI_TILDE, PHI_TILDE2, FLAT)}


def chi_tilde(x: np.ndarray, center: float, length: float) -> np.ndarray:
    """(1 + (d / |I|)^2)^(-1/2) with d the distance to the center on the unit torus."""
    d = np.abs(np.asarray(x, dtype=float) - center) % 1.0
    d = np.minimum(d, 1.0 - d)
    return (1.0 + (d / length) ** 2) ** -0.5


@dataclass(frozen=True)
class WavePacket:
    n: int
    I: tuple  # (lo, length) as floats
    omega: tuple  # (lo, hi) as floats
    family: PacketFamily
    spectrum: Spectrum = field(repr=False)
    samples: GridFunction = field(repr=False)

    @property
    def center(self) -> float:
        return self.I[0] + self.I[1] / 2

    def decay_constant(self, M: int) -> float:
        return verify_decay(self, M)


def _intervals(tile, j: int | None):
    if isinstance(tile, Tile):
        return (float(tile.I.lo), float(tile.I.length)), (float(tile.omega.lo), float(tile.omega.hi))
    if isinstance(tile, TriTile):
        if j is None:
            raise ValueError("tri-tile packets need a component index")
        return _intervals(tile.tile(j - 1), None)
    if isinstance(tile, BiTile):
        lo, hi = tile.I_float()
        return (lo, hi - lo), tile.omega_float(1 if j is None else j)
    if isinstance(tile, tuple) and len(tile) == 2:
        (a, b), (c, d) = tile
        return (float(a), float(b) - float(a)), (float(c), float(d))
    raise TypeError(f"cannot build a packet on {type(tile).__name__}")


@lru_cache(maxsize=4096)
def _packet(n: int, I: tuple, omega: tuple, family: PacketFamily) -> WavePacket:
    width = omega[1] - omega[0]
    if width < MIN_WIDTH - 1e-9:
        raise ResolutionError(f"frequency width {width} below the minimum {MIN_WIDTH}")
    c = (omega[0] + omega[1]) / 2
    if c - EDGE * width < -n // 2 or c + EDGE * width > n // 2:
        raise ResolutionError(f"frequency support of {omega} leaves the grid of size {n}")
    xi = frequencies(n)
    coef = family.bump((xi - c) / width) * np.exp(-2j * np.pi * xi * (I[0] + I[1] / 2))
    coef /= np.sqrt(np.sum(np.abs(coef) ** 2))
    spec = Spectrum(coef)
    return WavePacket(n, I, omega, family, spec, inverse_transform(spec))


def make_wave_packet(tile, n: int, family: PacketFamily = PHI, j: int | None = None) -> WavePacket:
    """Packet on a tile, a tri-tile component j, or a bi-tile half j (default the left half)."""
    I, omega = _intervals(tile, j)
    return _packet(n, I, omega, family)


def verify_decay(packet: WavePacket, M: int) -> float:
    """C_M = sup_x |phi(x)| |I|^(1/2) chi~_I(x)^(-M) over the grid."""
    if not 0 <= M <= 5:
        raise ValueError("decay orders are checked for 0 <= M <= 5")
    x = points(packet.n)
    chi = chi_tilde(x, packet.center, packet.I[1])
    return float(np.max(np.abs(packet.samples.samples) * packet.I[1] ** 0.5 * chi ** (-M)))


def spectral_leakage(packet: WavePacket) -> float:
    """Spectral mass (squared) outside (9/10) omega."""
    lo, hi = packet.omega
    c, h = (lo + hi) / 2, 0.45 * (hi - lo)
    xi = frequencies(packet.n)
    out = (xi <= c - h) | (xi >= c + h)
    return float(np.sum(np.abs(packet.spectrum.coefficients[out]) ** 2))


# ---------------------------------------------------------------- coefficients

@dataclass(frozen=True)
class CoefficientSequence:
    tiles: tuple
    values: np.ndarray
    kind: str = "a"

    def __post_init__(self):
        if self.kind not in ("a", "b"):
            raise ValueError("kind is 'a' or 'b'")
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (len(self.tiles),):
            raise ValueError("one value per tile")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "tiles", tuple(self.tiles))

    def __getitem__(self, tile) -> complex:
        return complex(self.values[self.tiles.index(tile)])

    def as_dict(self) -> dict:
        return dict(zip(self.tiles, self.values))


def _pair_spectral(f: GridFunction, packet: WavePacket) -> complex:
    # <f, phi> = sum_xi f^(xi) conj(phi^(xi))
    fh = np.fft.fftshift(np.fft.fft(f.samples)) / f.n
    return complex(np.vdot(packet.spectrum.coefficients, fh))


def coefficients(f: GridFunction, tiles, j: int | None = None, family: PacketFamily = PHI) -> CoefficientSequence:
    """a_P = <f, phi_P> for each tile (tri-tile component j, bi-tile half j)."""
    fh = np.fft.fftshift(np.fft.fft(f.samples)) / f.n
    vals = [np.vdot(make_wave_packet(t, f.n, family, j).spectrum.coefficients, fh) for t in tiles]
    return CoefficientSequence(tuple(tiles), np.array(vals, dtype=complex), "a")


def cutoff_mask(cutoff: CutoffFunction, tile: BiTile, j: int = 2) -> np.ndarray:
    """Exact indicator of {x : N(x) in omega_{P_j}} (j = 0 for the whole omega)."""
    if tile.exact:
        w = tile.omega_exact(j)
        return cutoff.in_interval(w.lo, w.hi)
    vals = np.unique(cutoff.values)
    inside = {int(v): tile.in_omega(int(v), j) for v in vals}
    return np.array([inside[int(v)] for v in cutoff.values])


def modulated_coefficients(
    G: GridFunction, cutoff: CutoffFunction, bitiles, family: PacketFamily = PHI
) -> CoefficientSequence:
    """b_{P_2} = <G chi_{N(x) in omega_{P_2}}, phi_{P_1}>."""
    vals = []
    for t in bitiles:
        g = GridFunction(G.samples * cutoff_mask(cutoff, t, 2))
        vals.append(_pair_spectral(g, make_wave_packet(t, G.n, family, 1)))
    return CoefficientSequence(tuple(bitiles), np.array(vals, dtype=complex), "b")


def gram_matrix(tiles, n: int, j: int | None = None, family: PacketFamily = PHI) -> np.ndarray:
    S = np.array([make_wave_packet(t, n, family, j).spectrum.coefficients for t in tiles])
    return S.conj() @ S.T


# ---------------------------------------------------------------- Walsh model

def _bitrev(x: np.ndarray, bits: int) -> np.ndarray:
    out = np.zeros_like(x)
    for b in range(bits):
        out |= ((x >> b) & 1) << (bits - 1 - b)
    return out


def walsh_signs(tile: Tile, n: int) -> np.ndarray:
    """Integer array in {-1, 0, 1}: the Walsh packet divided by |I|^(-1/2).

    I = [kx, kx + 1) 2^-m and omega = [l 2^m, (l + 1) 2^m) with 0 <= l 2^m < N.
    """
    if tile.shift != 0:
        raise ValueError("Walsh packets live on unshifted dyadic tiles")
    m, k, l = tile.m, tile.kx, tile.kf
    width = 2**m
    if l < 0 or (l + 1) * width > n or width > n:
        raise ValueError("Walsh frequency interval must lie in [0, N)")
    cells = n // width  # grid points per spatial interval
    bits = cells.bit_length() - 1
    out = np.zeros(n, dtype=np.int64)
    j = np.arange(cells)
    # Paley-ordered Walsh function W_l(y) at y = j / cells
    parity = np.array([bin(v).count("1") & 1 for v in (l & _bitrev(j, bits))], dtype=np.int64)
    out[k * cells:(k + 1) * cells] = 1 - 2 * parity
    return out


def walsh_packet(tile: Tile, n: int) -> GridFunction:
    return GridFunction(walsh_signs(tile, n) * 2.0 ** (tile.m / 2))


def walsh_inner_exact(p: Tile, q: Tile, n: int) -> tuple:
    """<w_P, w_Q> = S 2^((m_P + m_Q)/2) / N returned as (S, m_P + m_Q, N) with integer S."""
    s = int(np.dot(walsh_signs(p, n), walsh_signs(q, n)))
    return s, p.m + q.m, n


def walsh_transform(f: GridFunction) -> np.ndarray:
    """Walsh-Paley coefficients (1/N) sum_x f(x) W_k(x) for k = 0..N-1."""
    n = f.n
    bits = n.bit_length() - 1
    x = np.arange(n)
    rev = _bitrev(x, bits)
    W = np.array([[1 - 2 * (bin(k & r).count("1") & 1) for r in rev] for k in range(n)])
    return W @ f.samples / n


def walsh_tiles(n: int) -> list[Tile]:
    """Every unshifted dyadic tile of area 1 in [0, 1) x [0, N)."""
    out = []
    m = 0
    while 2**m <= n:
        for k in range(2**m):
            for l in range(n // 2**m):
                out.append(Tile(m, k, l))
        m += 1
    return out


def tiles_disjoint(p: Tile, q: Tile) -> bool:
    return not (p.I.intersects(q.I) and p.omega.intersects(q.omega))

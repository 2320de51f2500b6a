"""Discretized trilinear model forms and their inner operators.

Pairings are <f, g> = (1/N) sum f conj(g), linear in the first slot. With this
convention each form is linear in f1 and f2 and conjugate-linear in f3.

Packet roles follow the forms: `p` pairs against the inner operator or f1,
`p_tilde` carries the cutoff mask against f3, `q` holds the three tri-tile
packets (or, for bi-tile collections Q, the analysis packet in slot 0), and
`q_out` is the synthesis packet of C_{P_2, Q}.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import CutoffFunction, GridFunction, inner_product
from .tiles import (
    DESK,
    BiTile,
    Dilations,
    PreconditionError,
    Tree,
    TriTile,
    check_rank1,
    freq_contains,
    freq_intersects,
    freq_shorter,
    frequency_ends,
    is_sparse_tritiles,
    reflect_third,
)
from .wavepackets import PHI, PacketFamily, cutoff_mask, make_wave_packet


@dataclass(frozen=True)
class Packets:
    p: PacketFamily = PHI
    p_tilde: PacketFamily = PHI
    q: tuple = (PHI, PHI, PHI)
    q_out: PacketFamily = PHI


DEFAULT_PACKETS = Packets()


def _spec(f: GridFunction) -> np.ndarray:
    return np.fft.fftshift(np.fft.fft(f.samples)) / f.n


def _pair(f: GridFunction, tile, family: PacketFamily, j=None) -> complex:
    """<f, phi> through Parseval."""
    return complex(np.vdot(make_wave_packet(tile, f.n, family, j).spectrum.coefficients, _spec(f)))


def _samples(tile, n: int, family: PacketFamily, j=None) -> np.ndarray:
    return make_wave_packet(tile, n, family, j).samples.samples


def _weight(q: TriTile) -> float:
    # |I_Q|^(-1/2) with |I_Q| = 2^-m
    return 2.0 ** (q.m / 2)


def _q3_in_p1(q: TriTile, p: BiTile) -> bool:
    return freq_contains(frequency_ends(p, 1), frequency_ends(q.tile(2)))


def _require_rank1(Q, dil: Dilations) -> None:
    ok, witness = check_rank1(list(Q), dil)
    if not ok:
        raise PreconditionError("tri-tile collection is not of rank 1", witness)


# ---------------------------------------------------------------- Lambda'

def b_inner(P1: BiTile, Q, f1: GridFunction, f2: GridFunction, packets: Packets = DEFAULT_PACKETS) -> GridFunction:
    """B_{P_1,Q}(f1, f2) = sum over omega_{Q_3} in omega_{P_1} of |I_Q|^(-1/2) <f1, phi_Q1><f2, phi_Q2> phi_Q3."""
    n = f1.n
    out = np.zeros(n, dtype=complex)
    for q in Q:
        if not _q3_in_p1(q, P1):
            continue
        c = _weight(q) * _pair(f1, q, packets.q[0], 1) * _pair(f2, q, packets.q[1], 2)
        out += c * _samples(q, n, packets.q[2], 3)
    return GridFunction(out)


def lambda_prime(
    P, Q, f1, f2, f3, cutoff: CutoffFunction, packets: Packets = DEFAULT_PACKETS, dil: Dilations = DESK
) -> complex:
    """sum_P <B_{P_1,Q}(f1, f2), phi_{P_1}> <phi~_{P_1} chi_{N in omega_{P_2}}, f3>, summed directly."""
    Q = list(Q)
    _require_rank1(Q, dil)
    n = f1.n
    terms = []
    for p in P:
        b = b_inner(p, Q, f1, f2, packets)
        if not np.any(b.samples):
            continue
        g = GridFunction(_samples(p, n, packets.p_tilde, 1) * cutoff_mask(cutoff, p, 2))
        terms.append(_pair(b, p, packets.p, 1) * inner_product(g, f3))
    return complex(np.sum(np.array(terms, dtype=complex))) if terms else 0j


def carleson_adjoint(
    P, f: GridFunction, cutoff: CutoffFunction, analysis: PacketFamily = PHI, synthesis: PacketFamily = PHI
) -> GridFunction:
    """C*_P(f) = sum_P <f chi_{N in omega_{P_2}}, phi_{P_1}> phi_{P_1}."""
    out = np.zeros(f.n, dtype=complex)
    for p in P:
        g = GridFunction(f.samples * cutoff_mask(cutoff, p, 2))
        out += _pair(g, p, analysis, 1) * _samples(p, f.n, synthesis, 1)
    return GridFunction(out)


def third_coefficients(Q, P, f3, cutoff: CutoffFunction, packets: Packets = DEFAULT_PACKETS) -> np.ndarray:
    """a_{Q_3} = <C*_{P_Q}(f3), phi_{Q_3}> with P_Q the bi-tiles whose omega_{P_1} contains omega_{Q_3}."""
    P = list(P)
    n = f3.n
    b = {p: _pair(GridFunction(f3.samples * cutoff_mask(cutoff, p, 2)), p, packets.p_tilde, 1) for p in P}
    out = []
    for q in Q:
        spec_q = make_wave_packet(q, n, packets.q[2], 3).spectrum.coefficients
        a = 0j
        for p in P:
            if _q3_in_p1(q, p):
                spec_p = make_wave_packet(p, n, packets.p, 1).spectrum.coefficients
                a += b[p] * np.vdot(spec_q, spec_p)
        out.append(a)
    return np.array(out, dtype=complex)


def lambda_prime_reversed(
    Q, P, f1, f2, f3, cutoff: CutoffFunction, packets: Packets = DEFAULT_PACKETS, dil: Dilations = DESK
) -> complex:
    """sum_Q |I_Q|^(-1/2) a1_{Q_1} a2_{Q_2} conj(a3_{Q_3}).

    The conjugate on a3 is what the sesquilinear pairing leaves after moving
    the P sum inside; it makes this equal to `lambda_prime` term for term.
    """
    Q = list(Q)
    _require_rank1(Q, dil)
    if not Q:
        return 0j
    a3 = third_coefficients(Q, P, f3, cutoff, packets)
    terms = [
        _weight(q) * _pair(f1, q, packets.q[0], 1) * _pair(f2, q, packets.q[1], 2) * np.conj(a)
        for q, a in zip(Q, a3)
    ]
    return complex(np.sum(np.array(terms, dtype=complex)))


def lambda_prime_conjugated(
    P, Q, f1, f2, f3, cutoff: CutoffFunction, packets: Packets = DEFAULT_PACKETS, dil: Dilations = DESK
) -> complex:
    """The form before the reflection Q_3 -> -Q_3: conj(phi_{Q_3}) in B and the gate -omega_{Q_3} in omega_{P_1}.

    Equal to `lambda_prime` on the collection with every third tile reflected.
    """
    Q = list(Q)
    _require_rank1([reflect_third(q) for q in Q], dil)
    n = f1.n
    total = []
    for p in P:
        b = np.zeros(n, dtype=complex)
        for q in Q:
            if not _q3_in_p1(reflect_third(q), p):
                continue
            c = _weight(q) * _pair(f1, q, packets.q[0], 1) * _pair(f2, q, packets.q[1], 2)
            b += c * np.conj(_samples(q, n, packets.q[2], 3))
        if not np.any(b):
            continue
        g = GridFunction(_samples(p, n, packets.p_tilde, 1) * cutoff_mask(cutoff, p, 2))
        total.append(_pair(GridFunction(b), p, packets.p, 1) * inner_product(g, f3))
    return complex(np.sum(np.array(total, dtype=complex))) if total else 0j


# ---------------------------------------------------------------- decoupling

@dataclass
class DecoupleResult:
    ok: bool
    tile: TriTile | None = None
    residue: float = 0.0
    residues: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def decouple_check(
    T: Tree,
    P,
    f: GridFunction,
    cutoff: CutoffFunction,
    packets: Packets = DEFAULT_PACKETS,
    dil: Dilations = DESK,
    tol: float = 1e-8,
    collection=None,
    require_sparse: bool = True,
) -> DecoupleResult:
    """<C*_{P_Q}(f), phi_{Q_3}> = <C*_{P_T}(f), phi_{Q_3}> for every Q in the i-tree T (i = 1, 2).

    The sparseness precondition is checked on `collection` (default the tree itself);
    `require_sparse=False` skips it so counterexamples can be recorded. On failure the result names the first offending tri-tile and the size of the extra terms.
    """
    if T.mode != "relaxed" or T.j == 3:
        raise ValueError("decoupling is stated for 1- and 2-trees of tri-tiles")
    coll = list(T.members if collection is None else collection)
    ok, witness = is_sparse_tritiles(coll, dil)
    if require_sparse and not ok:
        raise PreconditionError("tri-tile collection is not sparse", witness)
    P = list(P)
    members = list(T.members)
    P_T = [p for p in P if any(_q3_in_p1(q, p) for q in members)]
    adj_T = carleson_adjoint(P_T, f, cutoff, packets.p_tilde, packets.p)
    res = DecoupleResult(True)
    for q in members:
        P_q = [p for p in P if _q3_in_p1(q, p)]
        phi = make_wave_packet(q, f.n, packets.q[2], 3).samples
        lhs = inner_product(carleson_adjoint(P_q, f, cutoff, packets.p_tilde, packets.p), phi)
        rhs = inner_product(adj_T, phi)
        r = abs(rhs - lhs)
        res.residues.append(r)
        if r > tol and res.ok:
            res.ok, res.tile, res.residue = False, q, r
    if res.ok:
        res.residue = max(res.residues, default=0.0)
    return res


# ---------------------------------------------------------------- Lambda''

def _q2_gate(q: BiTile, p: BiTile) -> bool:
    a, b = frequency_ends(q, 2), frequency_ends(p, 2)
    return freq_shorter(a, b) and freq_intersects(a, b)


def c_inner(P2: BiTile, Q, f2: GridFunction, cutoff: CutoffFunction, packets: Packets = DEFAULT_PACKETS) -> GridFunction:
    """C_{P_2,Q}(f2) = sum over the gated Q of <f2, phi_{Q_1}> phi'_{Q_1} chi_{N in omega_{Q_2}}."""
    out = np.zeros(f2.n, dtype=complex)
    for q in Q:
        if _q2_gate(q, P2):
            out += _pair(f2, q, packets.q[0], 1) * _samples(q, f2.n, packets.q_out, 1) * cutoff_mask(cutoff, q, 2)
    return GridFunction(out)


def lambda_doubleprime(P, Q, f1, f2, f3, cutoff: CutoffFunction, packets: Packets = DEFAULT_PACKETS) -> complex:
    """sum_P <f1, phi_{P_1}> <phi~_{P_1} chi_{N in omega_{P_2}} C_{P_2,Q}(f2), f3>."""
    Q = list(Q)
    n = f1.n
    terms = []
    for p in P:
        c = c_inner(p, Q, f2, cutoff, packets)
        if not np.any(c.samples):
            continue
        g = GridFunction(_samples(p, n, packets.p_tilde, 1) * cutoff_mask(cutoff, p, 2) * c.samples)
        terms.append(_pair(f1, p, packets.p, 1) * inner_product(g, f3))
    return complex(np.sum(np.array(terms, dtype=complex))) if terms else 0j


def lambda_doubleprime_rewritten(Q, P, f1, f2, f3, cutoff: CutoffFunction, packets: Packets = DEFAULT_PACKETS) -> complex:
    """The same sum with Q outside: sum_Q <f2, phi_{Q_1}> <phi'_{Q_1} chi_{Q_2} sum_P <f1, phi_{P_1}> phi~_{P_1} chi_{P_2}, f3>."""
    P = list(P)
    n = f1.n
    a = {p: _pair(f1, p, packets.p, 1) for p in P}
    terms = []
    for q in Q:
        inner = np.zeros(n, dtype=complex)
        for p in P:
            if _q2_gate(q, p):
                inner += a[p] * _samples(p, n, packets.p_tilde, 1) * cutoff_mask(cutoff, p, 2)
        if not np.any(inner):
            continue
        g = GridFunction(_samples(q, n, packets.q_out, 1) * cutoff_mask(cutoff, q, 2) * inner)
        terms.append(_pair(f2, q, packets.q[0], 1) * inner_product(g, f3))
    return complex(np.sum(np.array(terms, dtype=complex))) if terms else 0j


def lambda_carleson(P, f1, f2, cutoff: CutoffFunction, packets: Packets = DEFAULT_PACKETS) -> complex:
    """sum_P <f1, phi_{P_1}> <f2 chi_{N in omega_{P_2}}, phi~_{P_1}>."""
    terms = [
        _pair(f1, p, packets.p, 1) * _pair(GridFunction(f2.samples * cutoff_mask(cutoff, p, 2)), p, packets.p_tilde, 1)
        for p in P
    ]
    return complex(np.sum(np.array(terms, dtype=complex))) if terms else 0j


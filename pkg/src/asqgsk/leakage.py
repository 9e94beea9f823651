"""Mutual information between node 1's CSRs and the public broadcast.

Two independent routes: exact enumeration over the ring model given CSR
priors, and plug-in estimation from simulated symbols with a bias floor
taken from shuffled controls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import Constellation, Pmf, make_quantizer, pam_to_index
from .errors import DomainError, InsufficientData
from .protocol import simulate


def _entropy_bits(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def _mi_from_joint(P) -> float:
    """``I(X; Y)`` in bits from a joint probability matrix."""
    P = np.asarray(P, dtype=float)
    px = P.sum(axis=1, keepdims=True)
    py = P.sum(axis=0, keepdims=True)
    nz = P > 0
    return float(np.sum(P[nz] * np.log2(P[nz] / (px @ py)[nz])))


def empirical_mi(x, y, sizes=None, miller_madow: bool = False, min_per_cell: int = 100) -> float:
    """Plug-in estimate of ``I(X; Y)`` in bits from paired integer codes.

    Parameters
    ----------
    x, y : array_like of int
        Paired observations coded ``0 .. size - 1``.
    sizes : (int, int), optional
        Alphabet sizes; inferred from the data when omitted.
    miller_madow : bool
        Apply the Miller-Madow correction to each entropy term.
    min_per_cell : int
        Required samples per joint-alphabet cell.
    """
    x = np.asarray(x, dtype=np.int64).ravel()
    y = np.asarray(y, dtype=np.int64).ravel()
    if x.size != y.size:
        raise DomainError("x and y must be paired")
    if sizes is None:
        sizes = (int(x.max()) + 1 if x.size else 1, int(y.max()) + 1 if y.size else 1)
    kx, ky = sizes
    if x.size and (x.min() < 0 or x.max() >= kx or y.min() < 0 or y.max() >= ky):
        raise DomainError("codes fall outside the stated alphabet sizes")
    n = x.size
    if n < min_per_cell * kx * ky:
        raise InsufficientData(f"{n} samples for a {kx}x{ky} alphabet; need {min_per_cell * kx * ky}")
    counts = np.bincount(x * ky + y, minlength=kx * ky).reshape(kx, ky)
    P = counts / n
    mi = _entropy_bits(P.sum(axis=1)) + _entropy_bits(P.sum(axis=0)) - _entropy_bits(P)
    if miller_madow:
        occupied = [np.count_nonzero(counts.sum(axis=1)), np.count_nonzero(counts.sum(axis=0)),
                    np.count_nonzero(counts)]
        mi += (occupied[0] + occupied[1] - occupied[2] - 1) / (2 * n * np.log(2))
    return max(mi, 0.0)


def shuffled_floor(x, y, sizes=None, n_shuffles: int = 5, seed=0, miller_madow: bool = False) -> float:
    """Mean plug-in MI after independently permuting ``y``."""
    rng = np.random.default_rng(seed)
    y = np.asarray(y)
    vals = [empirical_mi(x, rng.permutation(y), sizes, miller_madow) for _ in range(n_shuffles)]
    return float(np.mean(vals))


def _ring_index(points, c: Constellation) -> np.ndarray:
    pts = np.asarray(points, dtype=complex)
    pts = np.round(pts.real) + 1j * np.round(pts.imag)
    return pam_to_index(pts.real, c) * c.levels + pam_to_index(pts.imag, c)


def exact_mi_ring(prior12: Pmf, prior13: Pmf, c: Constellation) -> dict:
    """Exact MI between node 1's CSRs and the ring sum it broadcasts.

    Priors are PMFs over the QAM points (any order).  Returns
    ``mi_single_12``, ``mi_single_13`` and ``mi_joint`` in bits.
    """
    M = c.levels
    n = M * M
    p12 = np.zeros(n)
    p13 = np.zeros(n)
    p12[_ring_index(prior12.support, c)] = prior12.mass
    p13[_ring_index(prior13.support, c)] = prior13.mass
    idx = np.arange(n)
    re, im = idx // M, idx % M
    s = ((re[:, None] + re[None, :]) % M) * M + (im[:, None] + im[None, :]) % M
    joint_ab = p12[:, None] * p13[None, :]
    # P(a, s) and P(b, s): scatter the product mass into the sum index
    p_as = np.zeros((n, n))
    p_bs = np.zeros((n, n))
    rows = np.broadcast_to(idx[:, None], s.shape)
    cols = np.broadcast_to(idx[None, :], s.shape)
    np.add.at(p_as, (rows, s), joint_ab)
    np.add.at(p_bs, (cols, s), joint_ab)
    # (a, b) determines s, so I(a, b; s) = H(s)
    return {
        "mi_single_12": _mi_from_joint(p_as),
        "mi_single_13": _mi_from_joint(p_bs),
        "mi_joint": _entropy_bits(p_as.sum(axis=0)),
    }


def uniform_prior(c: Constellation) -> Pmf:
    return Pmf(c.qam_points, np.full(c.qam_points.size, 1.0 / c.qam_points.size), c.levels)


def csr_symbol_prior(c: Constellation, gamma: float, quantizer="nearest") -> Pmf:
    """Marginal PMF of one quantized CSR symbol."""
    qz = make_quantizer(quantizer, c, gamma) if isinstance(quantizer, str) else quantizer
    pr = qz.masses(0.0, (1.0 + gamma) / 2.0)
    return Pmf(c.qam_points, np.outer(pr, pr).ravel(), c.levels)


@dataclass(frozen=True)
class LeakageReport:
    mi_single_12: float
    mi_single_13: float
    mi_joint: float
    floor_single_12: float
    floor_single_13: float
    floor_joint: float
    n: int


def protocol_leakage(n_rounds: int, m: int, snr_db: float, gamma: float | None = None,
                     quantizer="equiprobable", seed=0, n_shuffles: int = 5,
                     miller_madow: bool = False) -> LeakageReport:
    """Plug-in MI between simulated CSR symbols and the realized broadcast.

    Each estimate comes with the mean MI of the same estimator on shuffled
    pairs, which measures its bias at this sample size.
    """
    c = Constellation(m)
    _, rnd, _ = simulate(n_rounds, snr_db, c, gamma, quantizer, seed)
    n1 = rnd.nodes[0]
    a = _ring_index(n1.csr12, c)
    b = _ring_index(n1.csr13, c)
    s = _ring_index(rnd.broadcast * np.sqrt(c.e_avg), c)
    K = c.levels ** 2
    base = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    # shuffle streams sit beside the four simulation streams
    ss = [np.random.SeedSequence(base.entropy, spawn_key=base.spawn_key + (4 + i,)) for i in range(3)]
    ab = a * K + b
    mi12 = empirical_mi(a, s, (K, K), miller_madow)
    mi13 = empirical_mi(b, s, (K, K), miller_madow)
    try:
        mij = empirical_mi(ab, s, (K * K, K), miller_madow)
        fj = shuffled_floor(ab, s, (K * K, K), n_shuffles, ss[2], miller_madow)
    except InsufficientData:
        mij = fj = float("nan")
    return LeakageReport(
        mi_single_12=mi12,
        mi_single_13=mi13,
        mi_joint=mij,
        floor_single_12=shuffled_floor(a, s, (K, K), n_shuffles, ss[0], miller_madow),
        floor_single_13=shuffled_floor(b, s, (K, K), n_shuffles, ss[1], miller_madow),
        floor_joint=fj,
        n=n_rounds,
    )

"""Soft information on node 1's key bits.

A node holding a sample of a CSR produces ``log(P(bit 0) / P(bit 1))`` for
the bit node 1 extracted from the same index.  At the reciprocal node the
ratio comes from the joint PMF of the two quantized estimates; at the
decoding node from a mixture over node 1's possible samples, each pushed
through the phase-4 broadcast and the ring subtraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, roots_hermitenorm, roots_legendre

from .algebra import Constellation, CsrQuantizer, Pmf, pam_to_index
from .consensus import GuardBandQuantizer
from .errors import DomainError, UndefinedLLR
from .selection import broadcast_noise

LLR_CLAMP = 30.0
_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class JointPmfTable:
    """``P(X = p[s], Y = p[t])`` for node 1 (X) and the reciprocal node (Y)."""

    matrix: np.ndarray
    points: np.ndarray
    snr_db: float
    gamma: float
    m: int
    method: str = "quadrature"

    def __post_init__(self):
        P = np.asarray(self.matrix, dtype=float)
        if P.shape != (self.points.size,) * 2 or np.any(P < 0) or abs(P.sum() - 1) > 1e-9:
            raise DomainError("joint table must be a non-negative square matrix summing to one")


def build_joint_pmf(snr_db: float, gamma: float | None, c: Constellation,
                    quantizer: CsrQuantizer | None = None, method: str = "quadrature",
                    n_samples: int = 10**6, seed=0) -> JointPmfTable:
    """Joint PMF of the two endpoints' quantized samples of one real dimension.

    Per dimension the gain is ``N(0, 1/2)`` and each estimate adds an
    independent ``N(0, gamma/2)`` error.  ``quadrature`` integrates the
    closed-form conditional cell probabilities over the gain with composite
    Gauss-Legendre panels; ``montecarlo`` samples ``n_samples`` pairs.
    """
    sigma2 = 10.0 ** (-snr_db / 10.0)
    gamma = sigma2 if gamma is None else float(gamma)
    qz = quantizer if quantizer is not None else CsrQuantizer.nearest(c)
    sd_h = np.sqrt(0.5)
    sd_e = np.sqrt(gamma / 2.0)
    M = c.levels
    if method == "montecarlo":
        rng = np.random.default_rng(seed)
        h = sd_h * rng.standard_normal(n_samples)
        x = pam_to_index(qz.quantize_pam(h + sd_e * rng.standard_normal(n_samples)), c)
        y = pam_to_index(qz.quantize_pam(h + sd_e * rng.standard_normal(n_samples)), c)
        P = np.bincount(x * M + y, minlength=M * M).reshape(M, M) / n_samples
    elif method == "quadrature":
        span = 9.0 * sd_h
        width = min(sd_h, sd_e) / 2.0 if sd_e > 0 else sd_h / 8.0
        n_panels = int(np.ceil(2 * span / width))
        panel_edges = np.linspace(-span, span, n_panels + 1)
        if sd_e == 0:
            panel_edges = np.union1d(panel_edges, qz.edges[np.abs(qz.edges) < span])
        t, w = roots_legendre(8)
        a, b = panel_edges[:-1, None], panel_edges[1:, None]
        nodes = (0.5 * (b - a) * t + 0.5 * (a + b)).ravel()
        weights = (0.5 * (b - a) * w).ravel()
        dens = np.exp(-0.5 * (nodes / sd_h) ** 2) / (sd_h * np.sqrt(2 * np.pi))
        cond = qz.masses(nodes, np.full(nodes.shape, sd_e ** 2))
        P = (cond * (weights * dens)[:, None]).T @ cond
        P /= P.sum()
    else:
        raise DomainError(f"unknown method {method!r}")
    return JointPmfTable(P, c.pam_points, snr_db, gamma, c.m, method)


def _clamped_log_ratio(p0, p1):
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    if np.any((p0 <= 0) & (p1 <= 0)):
        raise UndefinedLLR("both bit hypotheses have zero mass")
    with np.errstate(divide="ignore"):
        llr = np.log(p0) - np.log(p1)
    out = np.clip(llr, -LLR_CLAMP, LLR_CLAMP)
    return float(out) if out.ndim == 0 else out


def llr_reciprocal(p, table: JointPmfTable, q: GuardBandQuantizer):
    """LLR of node 1's bit from the reciprocal node's PAM sample ``p``."""
    c = Constellation(table.m)
    neg, pos = q.out_of_band_points(c)
    cols = pam_to_index(p, c)
    P = np.asarray(table.matrix)
    rows_neg = pam_to_index(neg, c)
    rows_pos = pam_to_index(pos, c)
    p0 = P[rows_neg][:, cols].sum(axis=0)
    p1 = P[rows_pos][:, cols].sum(axis=0)
    return _clamped_log_ratio(p0, p1)


def csr_prior(c: Constellation, q: GuardBandQuantizer, gamma: float,
              quantizer: CsrQuantizer | None = None) -> Pmf:
    """Marginal PMF of node 1's quantized sample restricted to out-of-band points."""
    qz = quantizer if quantizer is not None else CsrQuantizer.nearest(c)
    mass = qz.masses(0.0, (1.0 + gamma) / 2.0)
    mass = np.where(q.in_consensus(c.pam_points), mass, 0.0)
    if mass.sum() == 0:
        raise DomainError("guard band leaves no PAM point")
    return Pmf(c.pam_points, mass / mass.sum(), c.levels)


def _cell_mass(mean, var, cell, edges):
    """Probability that ``N(mean, var)`` lands in PAM decision cell ``cell``."""
    lo = np.concatenate(([-np.inf], edges))[cell]
    hi = np.concatenate((edges, [np.inf]))[cell]
    sd = np.sqrt(var)
    zlo = (lo - mean) / sd
    zhi = (hi - mean) / sd
    upper = 0.5 * (erfc(zlo / _SQRT2) - erfc(zhi / _SQRT2))
    lower = 0.5 * (erfc(-zhi / _SQRT2) - erfc(-zlo / _SQRT2))
    return np.where(zlo >= 0, upper, lower)


def decoding_bit_probs(own, own_other, var, prior: Pmf, c: Constellation, q: GuardBandQuantizer,
                       shrink: float = 1.0, reference=None):
    """``(Prob_0, Prob_1)`` at a decoding node.

    Parameters
    ----------
    own : array_like
        The node's recovered PAM sample of the CSR (e.g. node 2's ``h13`` part).
    own_other : array_like
        The node's own PAM sample of the link it decoded over.
    var : array_like
        Per-dimension variance of the equalized broadcast.
    prior : Pmf
        Prior over node 1's PAM sample, zero inside the guard band.
    shrink : float
        Mean scaling of the equalized broadcast.
    reference : array_like, optional
        ``(n, levels)`` PMF of node 1's sample of the link.  When omitted,
        node 1 is assumed to hold ``own_other``.
    """
    own = np.atleast_1d(np.asarray(own, dtype=float))
    other = np.atleast_1d(np.asarray(own_other, dtype=float))
    var = np.broadcast_to(np.asarray(var, dtype=float), own.shape)
    M = c.levels
    edges = c.decision_boundaries
    other_idx = pam_to_index(other, c)
    theta_idx = (pam_to_index(own, c) + other_idx) % M
    neg, pos = q.out_of_band_points(c)
    sign = {int(i): 0 for i in pam_to_index(neg, c)}
    sign.update({int(i): 1 for i in pam_to_index(pos, c)})
    probs = [np.zeros(own.shape), np.zeros(own.shape)]
    if reference is None:
        links = [(other_idx, None)]
    else:
        ref = np.asarray(reference, dtype=float).reshape(own.shape + (M,))
        links = []
        for d in range(-(M - 1), M):
            y = other_idx + d
            ok = (y >= 0) & (y < M)
            w = np.where(ok, ref[np.arange(own.size), np.clip(y, 0, M - 1)], 0.0)
            if np.any(w > 1e-15):
                links.append((np.clip(y, 0, M - 1), w))
    for u, bit in sign.items():
        pu = prior.mass[u]
        if pu == 0:
            continue
        lik = np.zeros(own.shape)
        for y, w in links:
            mu = 2.0 * ((u + y) % M) - M + 1
            cell = _cell_mass(shrink * mu, var, theta_idx, edges)
            lik += cell if w is None else w * cell
        probs[bit] += pu * lik
    return probs[0], probs[1]


def llr_decoding(own_csr, own_other_csr, channel_est, sigma2: float, prior: Pmf, c: Constellation,
                 q: GuardBandQuantizer, gamma: float | None = None, energy=None, reference=None):
    """LLR of node 1's bit at the decoding node.

    ``channel_est`` is the node's complex estimate of the link the broadcast
    came over; ``energy`` optionally gives ``|theta_hat|**2`` per sample.
    """
    est = np.asarray(channel_est, dtype=complex)
    if np.any(est == 0):
        raise UndefinedLLR("zero channel estimate")
    shrink, var = broadcast_noise(est, sigma2, c, gamma, energy)
    p0, p1 = decoding_bit_probs(own_csr, own_other_csr, var, prior, c, q, shrink, reference)
    out = _clamped_log_ratio(p0, p1)
    return out[0] if np.ndim(own_csr) == 0 else out


def llr_decoding_joint(theta_hat, part, channel_est, sigma2: float, prior: Pmf, c: Constellation,
                       q: GuardBandQuantizer, quantizer: CsrQuantizer | None = None,
                       gamma: float | None = None, n_quad: int = 5, chunk: int = 32768):
    """Decoding-node LLR with the estimation error of the link modelled jointly.

    Given its estimate ``h_hat`` of the link, the node's uncertainty about
    the true gain, ``h = h_hat / (1 + gamma) + d`` with ``d ~ CN(0, gamma /
    (1 + gamma))``, moves both node 1's quantized sample of the link and the
    equalized broadcast.  ``d`` is integrated out with a ``n_quad``-point
    Gauss-Hermite rule per dimension; the other PAM part of the broadcast,
    which leaks in through ``d``, is taken at its decided value.

    Parameters
    ----------
    theta_hat : array_like of complex
        The node's decided broadcast QAM point.
    part : array_like of int
        0 for the real, 1 for the imaginary PAM part of each sample.
    channel_est : array_like of complex
        The node's estimate of the link the broadcast came over.
    """
    th = np.atleast_1d(np.asarray(theta_hat, dtype=complex))
    part = np.broadcast_to(np.atleast_1d(np.asarray(part)), th.shape)
    est = np.broadcast_to(np.atleast_1d(np.asarray(channel_est, dtype=complex)), th.shape)
    if np.any(est == 0):
        raise UndefinedLLR("zero channel estimate")
    qz = quantizer if quantizer is not None else CsrQuantizer.nearest(c)
    gamma = sigma2 if gamma is None else float(gamma)
    M = c.levels
    pts = c.pam_points
    c0 = 1.0 / (1.0 + gamma)
    sd = np.sqrt(gamma * c0 / 2.0)
    t, w = roots_hermitenorm(n_quad) if sd > 0 else (np.zeros(1), np.ones(1))
    w = w / w.sum()

    # circ[b][s, y] = prior mass of u with (u + y) mod M == s, restricted to bit b
    neg, pos = q.out_of_band_points(c)
    circ = []
    for pts_b in (neg, pos):
        pi = np.zeros(M)
        u = pam_to_index(pts_b, c)
        pi[u] = prior.mass[u]
        s_idx, y_idx = np.meshgrid(np.arange(M), np.arange(M), indexing="ij")
        circ.append(pi[(s_idx - y_idx) % M])

    re = part == 0
    own = np.where(re, th.real, th.imag)
    cross = np.where(re, -th.imag, th.real)
    est_p = np.where(re, est.real, est.imag)
    cell = pam_to_index(own, c)
    edges = np.concatenate(([-np.inf], c.decision_boundaries, [np.inf]))
    lo_edge, hi_edge = edges[cell], edges[cell + 1]
    var_n = c.e_avg * sigma2 / (2.0 * np.abs(est) ** 2)

    p0 = np.zeros(th.shape)
    p1 = np.zeros(th.shape)
    for start in range(0, th.size, chunk):
        sl = slice(start, start + chunk)
        sdn = np.sqrt(var_n[sl])[:, None]
        for i, (ti, wi) in enumerate(zip(t, w)):
            for tj, wj in zip(t, w):
                d = sd * (ti + 1j * tj)
                rho = d / est[sl]
                dp = np.where(re[sl], d.real, d.imag)
                py = qz.masses(est_p[sl] * c0 + dp, np.full(dp.shape, gamma / 2.0))
                mean = pts[None, :] * (c0 + rho.real)[:, None] + (cross[sl] * rho.imag)[:, None]
                zlo = (lo_edge[sl, None] - mean) / sdn
                zhi = (hi_edge[sl, None] - mean) / sdn
                cm = np.where(zlo >= 0, 0.5 * (erfc(zlo / _SQRT2) - erfc(zhi / _SQRT2)),
                              0.5 * (erfc(-zhi / _SQRT2) - erfc(-zlo / _SQRT2)))
                p0[sl] += wi * wj * np.sum((cm @ circ[0]) * py, axis=1)
                p1[sl] += wi * wj * np.sum((cm @ circ[1]) * py, axis=1)
    out = _clamped_log_ratio(p0, p1)
    return out[0] if np.ndim(theta_hat) == 0 else out

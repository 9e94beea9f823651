"""Choice of CSR on blocks where both channels are in consensus.

Node 1 predicts, from its own estimates alone, how likely node 2 is to
recover a wrong-signed ``h13`` sample and node 3 a wrong-signed ``h12``
sample, and keeps the channel with the smaller predicted error.  The
channel-strength rule is the simple baseline.
"""

from __future__ import annotations

import numpy as np

from .algebra import (
    Constellation,
    CsrQuantizer,
    interval_masses,
    pam_to_index,
    ring_add_pam,
    shift_rows,
)
from .consensus import GuardBandQuantizer
from .errors import DomainError
from .protocol import NodeState, unfold


def broadcast_noise(channel_est, sigma2: float, c: Constellation, gamma: float | None = None,
                    energy=None):
    """Per-dimension model of an equalized phase-4 observation.

    Returns ``(shrink, var)`` such that the equalized observation of a
    transmitted point ``s`` behaves like ``N(shrink * s, var)`` in each
    dimension.  ``energy`` is ``|s|**2`` when known (``E_avg`` otherwise).
    With ``gamma == sigma2`` and ``energy == E_avg`` the variance reduces to
    ``E_avg * sigma2 / |channel_est|**2``.
    """
    gamma = sigma2 if gamma is None else gamma
    energy = c.e_avg if energy is None else np.asarray(energy, dtype=float)
    g2 = np.abs(np.asarray(channel_est, dtype=complex)) ** 2
    with np.errstate(divide="ignore"):
        var = (c.e_avg * sigma2 + energy * gamma / (1.0 + gamma)) / (2.0 * g2)
    return 1.0 / (1.0 + gamma), var


def reference_pmf(own_est_part, gamma: float, quantizer: CsrQuantizer) -> np.ndarray:
    """PMF of the other endpoint's quantized sample given this node's estimate.

    Both endpoints of a reciprocal link see the same gain through independent
    CN(0, gamma) estimation errors.  Rows follow PAM (ring) order.
    """
    x = np.asarray(own_est_part, dtype=float)
    mean = x / (1.0 + gamma)
    var = (gamma / (1.0 + gamma) + gamma) / 2.0
    return quantizer.masses(mean, np.full_like(mean, var))


def _opposite_set(c: Constellation, q: GuardBandQuantizer, ref_values) -> np.ndarray:
    """Boolean mask over PAM points of the out-of-band set opposite to ``ref``."""
    neg, pos = q.out_of_band_points(c)
    p = c.pam_points
    is_neg = np.isin(p, neg)
    is_pos = np.isin(p, pos)
    ref = np.asarray(ref_values, dtype=float)[..., None]
    return np.where(ref > 0, is_neg, is_pos)


def decoding_error_prob(ref_own, ref_other, est_link, sigma2, c, q, gamma=None, energy=None):
    """Probability that a decoding node recovers the opposite sign.

    All arguments are per PAM part.  ``ref_own`` is node 1's sample of the
    CSR being recovered, ``ref_other`` its sample of the channel the decoding
    node observes directly and ``est_link`` node 1's complex estimate of that
    link.  The decoding node's own sample of the link is taken to equal
    ``ref_other``.
    """
    ref_own = np.asarray(ref_own, dtype=float)
    ref_other = np.asarray(ref_other, dtype=float)
    est_link = np.asarray(est_link, dtype=complex)
    if np.any(est_link == 0):
        raise DomainError("zero channel estimate")
    gamma = sigma2 if gamma is None else gamma
    mu = ring_add_pam(ref_other, ref_own, c)
    shrink, var = broadcast_noise(est_link, sigma2, c, gamma, energy)
    pmf = interval_masses(shrink * mu, var, c.decision_boundaries)
    wrong = _opposite_set(c, q, ref_own)
    shifted = shift_rows(pmf, pam_to_index(ref_other, c))
    return np.sum(shifted * wrong, axis=-1)


def decoding_error_prob_uncertain(ref_own, ref_other, est_link_part, est_link, sigma2, c, q,
                                  quantizer: CsrQuantizer, gamma=None, energy=None):
    """As :func:`decoding_error_prob`, averaging over the decoding node's own sample.

    ``est_link_part`` is the matching real or imaginary part of node 1's link
    estimate; it drives the distribution of the decoding node's quantized
    sample of the link.
    """
    ref_own = np.asarray(ref_own, dtype=float)
    ref_other = np.asarray(ref_other, dtype=float)
    gamma = sigma2 if gamma is None else gamma
    mu = ring_add_pam(ref_other, ref_own, c)
    shrink, var = broadcast_noise(est_link, sigma2, c, gamma, energy)
    pmf = interval_masses(shrink * mu, var, c.decision_boundaries)
    wrong = _opposite_set(c, q, ref_own)
    ref = reference_pmf(est_link_part, gamma, quantizer)
    out = np.zeros(ref_own.shape)
    for y in range(c.levels):
        w = ref[..., y]
        if not np.any(w > 1e-15):
            continue
        shifted = shift_rows(pmf, np.full(ref_own.shape, y))
        out += w * np.sum(shifted * wrong, axis=-1)
    return np.clip(out, 0.0, 1.0)


def _parts(node1: NodeState):
    r12 = unfold(np.atleast_1d(node1.csr12)).reshape(-1, 2)
    r13 = unfold(np.atleast_1d(node1.csr13)).reshape(-1, 2)
    e12 = np.atleast_1d(node1.est12)
    e13 = np.atleast_1d(node1.est13)
    return r12, r13, e12, e13


def _error_prob(node1, c, q, sigma2, gamma, quantizer, swap):
    r12, r13, e12, e13 = _parts(node1)
    if swap:
        # node 3 recovers h12 through the h13 link
        ref_own, ref_other, est = r12, r13, e13
    else:
        ref_own, ref_other, est = r13, r12, e12
    bcast = ring_add_pam(r12, r13, c)
    energy = np.sum(bcast ** 2, axis=-1, keepdims=True)
    est2 = np.repeat(est[:, None], 2, axis=1)
    if quantizer is None:
        return decoding_error_prob(ref_own, ref_other, est2, sigma2, c, q, gamma, energy=energy)
    est_parts = np.stack([est.real, est.imag], axis=-1)
    return decoding_error_prob_uncertain(ref_own, ref_other, est_parts, est2, sigma2, c, q,
                                         quantizer, gamma, energy)


def error_prob_at_node2(node1: NodeState, c: Constellation, q: GuardBandQuantizer, sigma2: float,
                        gamma: float | None = None, quantizer: CsrQuantizer | None = None):
    """Predicted probability that node 2's ``h13`` sample has the wrong sign.

    Returns an ``(n_blocks, 2)`` array (real, imaginary part).  Pass the CSR
    ``quantizer`` to account for node 2 quantizing ``h12`` differently.
    """
    return _error_prob(node1, c, q, sigma2, gamma, quantizer, swap=False)


def error_prob_at_node3(node1: NodeState, c: Constellation, q: GuardBandQuantizer, sigma2: float,
                        gamma: float | None = None, quantizer: CsrQuantizer | None = None):
    """Mirror of :func:`error_prob_at_node2` for node 3 recovering ``h12``."""
    return _error_prob(node1, c, q, sigma2, gamma, quantizer, swap=True)


def _combine(use_h12_part, p2, p3, in_v):
    """Per-symbol decision where both parts of a block are in V."""
    if in_v is None:
        return use_h12_part
    in_v = np.asarray(in_v, dtype=bool).reshape(use_h12_part.shape)
    both = in_v.all(axis=1)
    per_block = p2.sum(axis=1) >= p3.sum(axis=1)
    out = use_h12_part.copy()
    out[both] = per_block[both, None]
    return out


def select_csr(node1: NodeState, c: Constellation, q: GuardBandQuantizer, sigma2: float,
               gamma: float | None = None, quantizer: CsrQuantizer | None = None, in_v=None):
    """Likelihood rule: ``True`` (use h12) where node 2's predicted error is at least node 3's.

    ``in_v`` marks which ``(block, part)`` samples lie in V; blocks with both
    parts in V get one decision for the whole symbol.
    """
    p2 = error_prob_at_node2(node1, c, q, sigma2, gamma, quantizer)
    p3 = error_prob_at_node3(node1, c, q, sigma2, gamma, quantizer)
    return _combine(p2 >= p3, p2, p3, in_v)


def select_csr_by_strength(node1: NodeState):
    """Baseline: keep the CSR of the weaker channel (ties keep h12).

    The weaker link carries the broadcast used to recover the other CSR, so
    the other CSR is the one at risk.
    """
    _, _, e12, e13 = _parts(node1)
    use = np.abs(e12) <= np.abs(e13)
    return np.repeat(use[:, None], 2, axis=1)

"""Phases 1-4 of the algebraic group key protocol.

Node 1 quantizes its estimates of ``h12`` and ``h13``, broadcasts their ring
sum, and nodes 2 and 3 each decode the broadcast and subtract their own
quantized channel to recover the CSR they cannot observe directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .algebra import (
    Constellation,
    CsrQuantizer,
    Pmf,
    make_quantizer,
    quantize,
    ring_add_qam,
    ring_sub_qam,
)
from .channel import CoherenceBlock, draw_blocks
from .errors import DecodeFailure

CHANNELS = ("h12", "h13")
PARTS = ("re", "im")


@dataclass(frozen=True, eq=False)
class NodeState:
    """What one node knows, batched over coherence blocks.

    ``est12``/``est13`` are the node's own estimates of ``h12``/``h13``
    (``None`` where the node has none).  ``rx`` and ``theta_hat`` are the
    phase-4 observation and its MAP decision at nodes 2 and 3.
    """

    node: int
    csr12: Optional[np.ndarray] = None
    csr13: Optional[np.ndarray] = None
    csr23: Optional[np.ndarray] = None
    est12: Optional[np.ndarray] = None
    est13: Optional[np.ndarray] = None
    rx: Optional[np.ndarray] = None
    theta_hat: Optional[np.ndarray] = None

    def replace(self, **kw) -> "NodeState":
        d = dict(self.__dict__)
        d.update(kw)
        return NodeState(**d)


@dataclass(frozen=True)
class CsrSample:
    value: float
    source_channel: str
    part: str
    node: int
    block_index: int


@dataclass(frozen=True, eq=False)
class Round:
    """Outcome of the protocol over a batch of blocks.

    ``samples[j, ch, k]`` is node ``j+1``'s PAM value for channel ``ch``
    (0 = h12, 1 = h13) at sample index ``k = 2 * block + part`` with part 0
    the real and 1 the imaginary component.
    """

    nodes: tuple
    broadcast: np.ndarray
    samples: np.ndarray

    @property
    def n_blocks(self) -> int:
        return self.broadcast.size

    def csr_samples(self) -> Iterator[CsrSample]:
        for j in range(3):
            for ch in range(2):
                for k, v in enumerate(self.samples[j, ch]):
                    yield CsrSample(float(v), CHANNELS[ch], PARTS[k % 2], j + 1, k // 2)


def unfold(symbols) -> np.ndarray:
    """Interleave real and imaginary parts: ``[re0, im0, re1, im1, ...]``."""
    s = np.asarray(symbols, dtype=complex)
    return np.stack([s.real, s.imag], axis=-1).reshape(*s.shape[:-1], -1)


def _quantizer(c, quantizer):
    return quantizer if quantizer is not None else CsrQuantizer.nearest(c)


def run_phases_1_to_3(block: CoherenceBlock, c: Constellation, quantizer: CsrQuantizer | None = None):
    """Quantize every node's inherent observations.

    Returns node states 1, 2, 3.  ``h23`` is quantized at nodes 2 and 3 but
    never used as key material.
    """
    q = _quantizer(c, quantizer)
    node1 = NodeState(1, csr12=q.quantize(block.est1_12), csr13=q.quantize(block.est1_13),
                      est12=block.est1_12, est13=block.est1_13)
    node2 = NodeState(2, csr12=q.quantize(block.est2_12), csr23=q.quantize(block.est2_23),
                      est12=block.est2_12)
    node3 = NodeState(3, csr13=q.quantize(block.est3_13), csr23=q.quantize(block.est3_23),
                      est13=block.est3_13)
    return node1, node2, node3


def phase4_broadcast(node1: NodeState, c: Constellation):
    """Unit-energy transmit symbol ``phi_inv(phi(C12) + phi(C13)) / sqrt(E_avg)``."""
    return ring_add_qam(node1.csr12, node1.csr13, c) / np.sqrt(c.e_avg)


def map_decode_broadcast(rx, channel_est, sigma2: float, c: Constellation, prior: Pmf | None = None):
    """MAP estimate of the broadcast QAM point.

    With the default uniform prior this is the nearest QAM point to the
    equalized observation.  A non-uniform ``prior`` over the QAM grid scores
    every hypothesis with the Gaussian likelihood.
    """
    rx = np.asarray(rx, dtype=complex)
    est = np.asarray(channel_est, dtype=complex)
    if np.any(est == 0):
        raise DecodeFailure("zero channel estimate")
    z = rx * np.sqrt(c.e_avg) / est
    if prior is None or sigma2 == 0:
        return quantize(z, c)
    logp = np.log(np.maximum(prior.mass, 1e-300))
    pts = c.qam_points
    zf = np.atleast_1d(z)
    gain = np.atleast_1d(np.abs(est) ** 2 / c.e_avg)
    out = np.empty(zf.shape, dtype=complex)
    for lo in range(0, zf.size, 4096):
        sl = slice(lo, lo + 4096)
        d2 = np.abs(zf[sl, None] - pts[None, :]) ** 2
        out[sl] = pts[np.argmax(logp - gain[sl, None] * d2 / sigma2, axis=1)]
    return complex(out[0]) if z.ndim == 0 else out


def recover_csr(theta_hat, own_csr, c: Constellation):
    """``phi_inv(phi(theta_hat) - phi(own_csr))`` over the ring."""
    out = ring_sub_qam(theta_hat, own_csr, c)
    return complex(out) if out.ndim == 0 else out


def broadcast_prior(csr_pmf_re: np.ndarray, c: Constellation) -> Pmf:
    """Distribution of the ring sum of two independent CSR symbols.

    ``csr_pmf_re`` is the per-dimension PMF (ring order) of each quantized
    CSR component; both CSRs and both components share it.
    """
    M = c.levels
    p = np.asarray(csr_pmf_re, dtype=float)
    s = np.zeros(M)
    for a in range(M):
        s += p[a] * np.roll(p, a)
    s /= s.sum()
    return Pmf(c.qam_points, np.outer(s, s).ravel(), M)


def run_round(block: CoherenceBlock, c: Constellation, quantizer: CsrQuantizer | None = None,
              map_prior: Pmf | None = None) -> Round:
    """Full four-phase round over a batch of blocks."""
    node1, node2, node3 = run_phases_1_to_3(block, c, quantizer)
    x = phase4_broadcast(node1, c)
    rx2 = block.h12 * x + block.noise2
    rx3 = block.h13 * x + block.noise3
    theta2 = map_decode_broadcast(rx2, node2.est12, block.sigma2, c, map_prior)
    theta3 = map_decode_broadcast(rx3, node3.est13, block.sigma2, c, map_prior)
    node2 = node2.replace(rx=rx2, theta_hat=theta2, csr13=recover_csr(theta2, node2.csr12, c))
    node3 = node3.replace(rx=rx3, theta_hat=theta3, csr12=recover_csr(theta3, node3.csr13, c))
    nodes = (node1, node2, node3)
    samples = np.stack([np.stack([unfold(np.atleast_1d(n.csr12)), unfold(np.atleast_1d(n.csr13))])
                        for n in nodes])
    return Round(nodes, np.atleast_1d(x), samples)


def resolve_quantizer(quantizer, c: Constellation, gamma: float) -> CsrQuantizer:
    """Accept a :class:`CsrQuantizer` or a kind name understood by ``make_quantizer``."""
    if quantizer is None:
        return CsrQuantizer.nearest(c)
    if isinstance(quantizer, CsrQuantizer):
        return quantizer
    return make_quantizer(quantizer, c, gamma)


def simulate(n_blocks: int, snr_db: float, c: Constellation, gamma: float | None = None,
             quantizer="nearest", seed=0, map_prior: Pmf | None = None):
    """Draw ``n_blocks`` blocks and run the protocol on them.

    Returns ``(block, round, csr_quantizer)``.
    """
    block = draw_blocks(n_blocks, snr_db, gamma, seed)
    q = resolve_quantizer(quantizer, c, block.gamma)
    return block, run_round(block, c, q, map_prior), q

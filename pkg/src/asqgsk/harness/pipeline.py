"""One operating point end to end: protocol, consensus, selection, keys, LLRs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..algebra import Constellation, CsrQuantizer
from ..channel import CoherenceBlock
from ..consensus import ConsensusOutcome, GuardBandQuantizer, exchange_indices
from ..llr import build_joint_pmf, csr_prior, llr_decoding_joint, llr_reciprocal
from ..protocol import CHANNELS, Round
from ..selection import select_csr, select_csr_by_strength

MODES = ("likelihood", "strength", "fixed_h12")


@dataclass(frozen=True, eq=False)
class KeyMaterial:
    """Key positions and every node's bits.

    ``indices[i]`` is a sample index and ``channels[i]`` (0 = h12, 1 = h13)
    the CSR it was taken from; ``bits[j, i]`` is node ``j + 1``'s bit.
    """

    indices: np.ndarray
    channels: np.ndarray
    bits: np.ndarray
    outcome: ConsensusOutcome


def selection_mask(rnd: Round, outcome: ConsensusOutcome, mode: str, c: Constellation,
                   q: GuardBandQuantizer, sigma2: float, gamma: float) -> np.ndarray:
    """``(2 * n_blocks,)`` boolean: True where the h12 sample is kept on V."""
    node1 = rnd.nodes[0]
    if mode == "strength":
        use = select_csr_by_strength(node1)
    elif mode == "likelihood":
        in_v = np.zeros(2 * rnd.n_blocks, dtype=bool)
        in_v[outcome.V] = True
        use = select_csr(node1, c, q, sigma2, gamma, None, in_v)
    elif mode == "fixed_h12":
        use = np.ones((rnd.n_blocks, 2), dtype=bool)
    else:
        raise ValueError(f"unknown selection mode {mode!r}")
    return use.reshape(-1)


def assemble_keys(rnd: Round, q: GuardBandQuantizer, mode: str, c: Constellation,
                  sigma2: float, gamma: float, outcome: ConsensusOutcome | None = None) -> KeyMaterial:
    """Key positions under a selection mode.

    ``fixed_h12`` keys only on ``R_h12``.  The other modes key on every
    index in ``R_h12`` or ``R_h13``, taking the selected channel on V.
    """
    outcome = exchange_indices(rnd.samples, q) if outcome is None else outcome
    if mode == "fixed_h12":
        idx = outcome.R_h12
        ch = np.zeros(idx.size, dtype=np.int64)
    else:
        use12 = selection_mask(rnd, outcome, mode, c, q, sigma2, gamma)
        V = outcome.V
        outcome = outcome.with_selection(V, [CHANNELS[0] if u else CHANNELS[1] for u in use12[V]])
        idx = np.union1d(outcome.R_h12, outcome.R_h13)
        in12 = np.isin(idx, outcome.R_h12)
        in13 = np.isin(idx, outcome.R_h13)
        ch = np.where(in12 & in13, np.where(use12[idx], 0, 1), np.where(in12, 0, 1)).astype(np.int64)
    vals = rnd.samples[:, ch, idx]
    return KeyMaterial(idx, ch, (vals > 0).astype(np.uint8), outcome)


def key_llrs(block: CoherenceBlock, rnd: Round, keys: KeyMaterial, c: Constellation,
             q: GuardBandQuantizer, quantizer: CsrQuantizer, snr_db: float) -> np.ndarray:
    """``(2, L)`` LLRs of node 1's key bits at nodes 2 and 3."""
    gamma = block.gamma
    table = build_joint_pmf(snr_db, gamma, c, quantizer)
    prior = csr_prior(c, q, gamma, quantizer)
    idx, ch = keys.indices, keys.channels
    blk, part = idx // 2, idx % 2
    out = np.zeros((2, idx.size))
    # node 2 observes h12 directly, node 3 observes h13
    for row, (j, direct, est) in enumerate(((2, 0, rnd.nodes[1].est12), (3, 1, rnd.nodes[2].est13))):
        node = rnd.nodes[j - 1]
        recip = ch == direct
        if recip.any():
            out[row, recip] = llr_reciprocal(rnd.samples[j - 1, direct, idx[recip]], table, q)
        dec = ~recip
        if dec.any():
            b = blk[dec]
            out[row, dec] = llr_decoding_joint(node.theta_hat[b], part[dec], est[b], block.sigma2,
                                               prior, c, q, quantizer, gamma)
    return out

"""Simulation of algebraic group secret-key generation among three nodes.

Node 1 shares a reciprocal fading channel with each of nodes 2 and 3 and
broadcasts the ring sum of its two quantized channel observations, letting
each peer recover the observation it lacks.  Guard-band consensus, CSR
selection, soft information and LDPC syndrome reconciliation turn those
observations into a common key.
"""

from .algebra import Constellation, CsrQuantizer, Pmf, RingElement, make_quantizer
from .channel import CoherenceBlock, draw_block, draw_blocks
from .consensus import ConsensusOutcome, GuardBandQuantizer, exchange_indices
from .protocol import Round, run_round, simulate

__version__ = "0.1.0"

__all__ = [
    "CoherenceBlock", "ConsensusOutcome", "Constellation", "CsrQuantizer", "GuardBandQuantizer", "Pmf",
    "RingElement", "Round", "draw_block", "draw_blocks", "exchange_indices", "make_quantizer",
    "run_round", "simulate",
]

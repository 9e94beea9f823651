"""Guard-band consensus among the three nodes.

Samples are addressed by integer index ``k = 2 * block + part`` within each
channel.  Only index sets travel over the public channel, never sample
values or signs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .algebra import Constellation
from .errors import CalibrationError, ContractViolation, DomainError
from .protocol import simulate

NO_CONSENSUS = -1


@dataclass(frozen=True)
class GuardBandQuantizer:
    """Two-level quantizer with dead zone ``[q_minus, q_plus]``."""

    q_plus: float = 0.0
    q_minus: float = 0.0

    def __post_init__(self):
        if not (self.q_minus <= 0 <= self.q_plus):
            raise DomainError(f"need q_minus <= 0 <= q_plus, got ({self.q_minus}, {self.q_plus})")

    @classmethod
    def symmetric(cls, q: float) -> "GuardBandQuantizer":
        return cls(float(q), -float(q))

    def in_consensus(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        return (v > self.q_plus) | (v < self.q_minus)

    def out_of_band_points(self, c: Constellation):
        """PAM points kept on the negative and positive side."""
        p = c.pam_points
        return p[p < self.q_minus], p[p > self.q_plus]


def two_level_quantize(alpha, q: GuardBandQuantizer):
    """1 above ``q_plus``, 0 below ``q_minus``, ``NO_CONSENSUS`` otherwise."""
    a = np.asarray(alpha, dtype=float)
    out = np.full(a.shape, NO_CONSENSUS, dtype=np.int8)
    out[a > q.q_plus] = 1
    out[a < q.q_minus] = 0
    return int(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class ConsensusOutcome:
    """Index sets agreed by all three nodes.

    ``R_h12``/``R_h13`` hold the indices in consensus for each channel,
    ``V`` their intersection and ``exclusive_*`` the rest of each set.
    ``transcript`` records the public messages in order; ``selection`` maps
    indices in ``V`` to the channel node 1 announced (filled in later).
    """

    R_h12: np.ndarray
    R_h13: np.ndarray
    n_samples: int
    transcript: tuple = ()
    selection: dict = field(default_factory=dict)

    @property
    def V(self) -> np.ndarray:
        return np.intersect1d(self.R_h12, self.R_h13)

    @property
    def exclusive_h12(self) -> np.ndarray:
        return np.setdiff1d(self.R_h12, self.R_h13)

    @property
    def exclusive_h13(self) -> np.ndarray:
        return np.setdiff1d(self.R_h13, self.R_h12)

    def with_selection(self, indices, channels) -> "ConsensusOutcome":
        sel = {int(i): str(ch) for i, ch in zip(indices, channels)}
        # JSON object keys are strings; keep the transcript in that form
        msg = {"from": 1, "to": "all", "kind": "selection", "choices": {str(k): v for k, v in sel.items()}}
        return ConsensusOutcome(self.R_h12, self.R_h13, self.n_samples,
                                self.transcript + (msg,), sel)

    def to_json(self) -> str:
        return json.dumps({
            "n_samples": self.n_samples,
            "R_h12": self.R_h12.tolist(),
            "R_h13": self.R_h13.tolist(),
            "transcript": list(self.transcript),
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ConsensusOutcome":
        d = json.loads(text)
        transcript = tuple(d["transcript"])
        sel = {}
        for msg in transcript:
            if msg.get("kind") == "selection":
                sel = {int(k): v for k, v in msg["choices"].items()}
        return cls(np.asarray(d["R_h12"], dtype=np.int64), np.asarray(d["R_h13"], dtype=np.int64),
                   d["n_samples"], transcript, sel)


def exchange_indices(samples, q: GuardBandQuantizer) -> ConsensusOutcome:
    """Run the node-2 -> node-1 -> node-3 index exchange.

    Parameters
    ----------
    samples : array_like, shape (3, 2, L)
        PAM values per node, channel (h12, h13) and sample index.
    q : GuardBandQuantizer
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 3 or samples.shape[:2] != (3, 2):
        raise DomainError(f"expected samples of shape (3, 2, L), got {samples.shape}")
    keep = q.in_consensus(samples)

    def own(j, ch):
        return np.flatnonzero(keep[j - 1, ch])

    msg2 = [own(2, ch) for ch in range(2)]
    msg1 = [np.intersect1d(msg2[ch], own(1, ch)) for ch in range(2)]
    msg3 = [np.intersect1d(msg1[ch], own(3, ch)) for ch in range(2)]
    transcript = tuple(
        {"from": src, "to": dst, "kind": "indices",
         "h12": m[0].tolist(), "h13": m[1].tolist()}
        for src, dst, m in ((2, 1, msg2), (1, "all", msg1), (3, "all", msg3))
    )
    return ConsensusOutcome(msg3[0], msg3[1], samples.shape[2], transcript)


def exchange_indices_streams(stream1, stream2, stream3, q: GuardBandQuantizer) -> ConsensusOutcome:
    """Same as :func:`exchange_indices` with one ``(2, L)`` array per node."""
    shapes = {np.shape(s) for s in (stream1, stream2, stream3)}
    if len(shapes) != 1:
        raise DomainError(f"sample streams differ in shape: {sorted(shapes)}")
    return exchange_indices(np.stack([stream1, stream2, stream3]), q)


def extract_bits(samples, indices, q: GuardBandQuantizer) -> np.ndarray:
    """Bits of every node at ``indices``.

    ``samples`` has shape ``(nodes, L)``; the result is ``(nodes, len(indices))``.
    """
    samples = np.asarray(samples, dtype=float)
    idx = np.asarray(indices, dtype=np.int64)
    vals = samples[:, idx]
    bits = two_level_quantize(vals, q)
    if np.any(bits == NO_CONSENSUS):
        bad = idx[np.any(bits == NO_CONSENSUS, axis=0)]
        raise ContractViolation(f"indices inside the guard band at some node: {bad[:8].tolist()}")
    return bits.astype(np.uint8)


def consensus_mismatch(samples, q: GuardBandQuantizer) -> float:
    """Worst pairwise (node 1 vs node j) bit mismatch on consensus samples.

    Pools both channels; ``nan`` when nothing survives the guard band.
    """
    samples = np.asarray(samples, dtype=float)
    keep = np.all(q.in_consensus(samples), axis=0)
    if not keep.any():
        return float("nan")
    vals = samples[:, keep]
    bits = vals > 0
    return float(max(np.mean(bits[0] != bits[1]), np.mean(bits[0] != bits[2])))


def guard_band_candidates(c: Constellation) -> list[float]:
    """Distinct guard bands on the ``d_min/8`` grid, smallest first.

    Samples only take PAM values, so every grid value in ``[p_k, p_{k+1})``
    behaves like ``p_k``; the last candidate guards every sample.
    """
    pos = c.pam_points[c.pam_points > 0]
    return [0.0] + [float(p) for p in pos]


def calibrate_from_samples(samples, target: float, c: Constellation) -> GuardBandQuantizer:
    """Smallest symmetric guard band whose consensus mismatch is ``<= target``."""
    if not 0 < target <= 0.5:
        raise DomainError("target initial error rate must lie in (0, 0.5]")
    for q in guard_band_candidates(c):
        gb = GuardBandQuantizer.symmetric(q)
        rate = consensus_mismatch(samples, gb)
        if rate == rate and rate <= target:
            return gb
    raise CalibrationError(f"no guard band reaches initial error rate {target}")


def calibrate_guard_bands(target: float, snr_db: float, gamma: float | None, m: int,
                          n_calib_blocks: int = 20000, seed=0, quantizer="nearest",
                          map_prior=None) -> GuardBandQuantizer:
    """Monte Carlo guard-band calibration at one operating point."""
    c = Constellation(m)
    _, rnd, _ = simulate(n_calib_blocks, snr_db, c, gamma, quantizer, seed, map_prior)
    return calibrate_from_samples(rnd.samples, target, c)

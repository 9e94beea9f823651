"""Random environment of the three-node network.

One coherence block holds three independent reciprocal Rayleigh gains, the
six noisy pilot estimates made in phases 1-3 and the receiver noise seen by
nodes 2 and 3 in phase 4.  Blocks are drawn in batches; every field is an
array with one entry per block.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import DomainError


def snr_to_sigma2(snr_db: float) -> float:
    return float(10.0 ** (-np.asarray(snr_db, dtype=float) / 10.0))


def complex_normal(rng: np.random.Generator, var: float, size) -> np.ndarray:
    """Draws from CN(0, var)."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def awgn(signal, sigma2: float, rng: np.random.Generator):
    """Add CN(0, sigma2) noise to ``signal``."""
    if sigma2 < 0:
        raise DomainError("noise variance must be non-negative")
    signal = np.asarray(signal, dtype=complex)
    if sigma2 == 0:
        return signal
    return signal + complex_normal(rng, sigma2, signal.shape)


@dataclass(frozen=True, eq=False)
class CoherenceBlock:
    """A batch of coherence blocks.

    ``est{j}_{xy}`` is node ``j``'s estimate of ``h_xy``; ``noise{j}`` is
    the phase-4 receiver noise at node ``j``.
    """

    h12: np.ndarray
    h13: np.ndarray
    h23: np.ndarray
    est2_12: np.ndarray  # phase 1
    est3_13: np.ndarray  # phase 1
    est1_12: np.ndarray  # phase 2
    est3_23: np.ndarray  # phase 2
    est1_13: np.ndarray  # phase 3
    est2_23: np.ndarray  # phase 3
    noise2: np.ndarray
    noise3: np.ndarray
    sigma2: float
    gamma: float

    def __len__(self):
        return self.h12.size

    def __getitem__(self, idx):
        """Sub-batch selection; scalar indices keep a length-1 batch."""
        if isinstance(idx, (int, np.integer)):
            idx = slice(idx, idx + 1 if idx != -1 else None)
        kw = {}
        for f in fields(self):
            v = getattr(self, f.name)
            kw[f.name] = v[idx] if isinstance(v, np.ndarray) else v
        return CoherenceBlock(**kw)


def node_streams(seed) -> list[np.random.Generator]:
    """Four independent generators: channel gains, then nodes 1, 2, 3.

    Children are derived from the spawn key, so passing the same
    ``SeedSequence`` twice yields the same streams.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (i,)))
            for i in range(4)]


def draw_blocks(n: int, snr_db: float, gamma: float | None = None, seed=0) -> CoherenceBlock:
    """Draw ``n`` coherence blocks.

    Parameters
    ----------
    n : int
        Number of blocks.
    snr_db : float
        Average SNR ``1/sigma2`` in dB.
    gamma : float, optional
        Channel-estimation error variance; defaults to ``sigma2``.
    seed : int or numpy.random.SeedSequence
        Master seed; the result is a pure function of it.
    """
    if not np.isfinite(snr_db):
        raise DomainError("snr_db must be finite")
    sigma2 = snr_to_sigma2(snr_db)
    gamma = sigma2 if gamma is None else float(gamma)
    if gamma < 0:
        raise DomainError("gamma must be non-negative")
    g, r1, r2, r3 = node_streams(seed)
    h12, h13, h23 = (complex_normal(g, 1.0, n) for _ in range(3))
    return CoherenceBlock(
        h12=h12,
        h13=h13,
        h23=h23,
        est2_12=h12 + complex_normal(r2, gamma, n),
        est3_13=h13 + complex_normal(r3, gamma, n),
        est1_12=h12 + complex_normal(r1, gamma, n),
        est3_23=h23 + complex_normal(r3, gamma, n),
        est1_13=h13 + complex_normal(r1, gamma, n),
        est2_23=h23 + complex_normal(r2, gamma, n),
        noise2=complex_normal(r2, sigma2, n),
        noise3=complex_normal(r3, sigma2, n),
        sigma2=sigma2,
        gamma=gamma,
    )


def draw_block(snr_db: float, gamma: float | None = None, seed=0) -> CoherenceBlock:
    """Single coherence block (a batch of length one)."""
    return draw_blocks(1, snr_db, gamma, seed)

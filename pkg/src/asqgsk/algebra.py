"""Constellation and ring algebra.

The square ``2**m``-QAM alphabet is the Cartesian square of the PAM set
``{-M+1, -M+3, ..., M-1}`` with ``M = 2**(m/2)``.  The bijection ``phi`` maps
each PAM coordinate ``v`` to the ring index ``(v + M - 1) / 2`` in ``Z_M``, so
a QAM point becomes a Gaussian integer modulo ``M``.

Everything here is pure.  Functions whose names end in ``_index`` or that take
``np.ndarray`` arguments work on whole batches; the scalar API (``phi``,
``ring_add``, ...) mirrors them on single symbols.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import erfc, ndtri

from .errors import DomainError

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class Constellation:
    """Square QAM alphabet with ``m`` bits per complex symbol."""

    m: int

    def __post_init__(self):
        if not isinstance(self.m, (int, np.integer)) or self.m < 2 or self.m % 2:
            raise DomainError(f"m must be an even integer >= 2, got {self.m!r}")

    @property
    def levels(self) -> int:
        """Number of PAM points per dimension (``2**(m/2)``)."""
        return 2 ** (self.m // 2)

    @property
    def d_min(self) -> float:
        return 2.0

    @cached_property
    def pam_points(self) -> np.ndarray:
        M = self.levels
        pts = np.arange(-M + 1, M, 2, dtype=float)
        pts.flags.writeable = False
        return pts

    @cached_property
    def qam_points(self) -> np.ndarray:
        """All ``2**m`` points, ordered lexicographically by ring (re, im)."""
        p = self.pam_points
        pts = (p[:, None] + 1j * p[None, :]).ravel()
        pts.flags.writeable = False
        return pts

    @cached_property
    def e_avg(self) -> float:
        return float(np.mean(np.abs(self.qam_points) ** 2))

    @cached_property
    def decision_boundaries(self) -> np.ndarray:
        """Midpoints between consecutive PAM points."""
        p = self.pam_points
        b = 0.5 * (p[1:] + p[:-1])
        b.flags.writeable = False
        return b


@dataclass(frozen=True)
class RingElement:
    """Element of ``Z_M[i]``; both components are kept reduced modulo ``M``."""

    re: int
    im: int
    modulus: int

    def __post_init__(self):
        object.__setattr__(self, "re", int(self.re) % self.modulus)
        object.__setattr__(self, "im", int(self.im) % self.modulus)

    def __add__(self, other):
        return ring_add(self, other)

    def __sub__(self, other):
        return ring_sub(self, other)

    def __complex__(self):
        return complex(self.re, self.im)


# ---------------------------------------------------------------------------
# index <-> PAM value maps (batch)


def pam_to_index(values, c: Constellation) -> np.ndarray:
    """Ring index of PAM values; inputs must already lie on the PAM grid."""
    v = np.asarray(values, dtype=float)
    return ((v + c.levels - 1) / 2).astype(np.int64)


def index_to_pam(indices, c: Constellation) -> np.ndarray:
    i = np.asarray(indices, dtype=np.int64)
    return (2 * i - c.levels + 1).astype(float)


def _check_on_grid(values, c: Constellation):
    v = np.asarray(values, dtype=float)
    idx = (v + c.levels - 1) / 2
    ok = np.isfinite(v) & (idx == np.round(idx)) & (idx >= 0) & (idx <= c.levels - 1)
    if not np.all(ok):
        raise DomainError(f"value(s) not in the {c.levels}-PAM alphabet: {v[~ok][:4]}")


def phi(symbol, c: Constellation) -> RingElement:
    """Map a QAM point to its ring element."""
    s = complex(symbol)
    _check_on_grid([s.real, s.imag], c)
    re, im = pam_to_index([s.real, s.imag], c)
    return RingElement(re, im, c.levels)


def phi_inv(r: RingElement, c: Constellation) -> complex:
    if r.modulus != c.levels:
        raise DomainError(f"ring Z_{r.modulus}[i] does not match m={c.m}")
    re, im = index_to_pam([r.re, r.im], c)
    return complex(re, im)


def ring_add(a: RingElement, b: RingElement) -> RingElement:
    if a.modulus != b.modulus:
        raise DomainError(f"cannot add elements of Z_{a.modulus}[i] and Z_{b.modulus}[i]")
    return RingElement(a.re + b.re, a.im + b.im, a.modulus)


def ring_sub(a: RingElement, b: RingElement) -> RingElement:
    if a.modulus != b.modulus:
        raise DomainError(f"cannot subtract elements of Z_{a.modulus}[i] and Z_{b.modulus}[i]")
    return RingElement(a.re - b.re, a.im - b.im, a.modulus)


def ring_add_pam(x, y, c: Constellation) -> np.ndarray:
    """``phi_inv(phi(x) + phi(y))`` on real PAM arrays (one dimension)."""
    M = c.levels
    return index_to_pam((pam_to_index(x, c) + pam_to_index(y, c)) % M, c)


def ring_sub_pam(x, y, c: Constellation) -> np.ndarray:
    M = c.levels
    return index_to_pam((pam_to_index(x, c) - pam_to_index(y, c)) % M, c)


def ring_add_qam(x, y, c: Constellation) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    return ring_add_pam(x.real, y.real, c) + 1j * ring_add_pam(x.imag, y.imag, c)


def ring_sub_qam(x, y, c: Constellation) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    return ring_sub_pam(x.real, y.real, c) + 1j * ring_sub_pam(x.imag, y.imag, c)


# ---------------------------------------------------------------------------
# quantization


def quantize_pam(x, c: Constellation) -> np.ndarray:
    """Nearest PAM point per element, saturating at the edges."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("cannot quantize non-finite values")
    M = c.levels
    idx = np.clip(np.floor(x / 2 + M / 2), 0, M - 1)
    return 2 * idx - M + 1


def quantize(beta, c: Constellation):
    """Nearest QAM point, decided independently on I and Q."""
    b = np.asarray(beta, dtype=complex)
    out = quantize_pam(b.real, c) + 1j * quantize_pam(b.imag, c)
    return complex(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Gaussian -> PMF induction


def interval_masses(mu, var, edges) -> np.ndarray:
    """Probability that ``N(mu, var)`` falls in each cell cut by ``edges``.

    The outer cells extend to +-inf.  ``var`` may be zero, giving the
    indicator of the cell containing ``mu`` (edges belong to the upper cell).
    Returns an array of shape ``broadcast(mu, var).shape + (len(edges) + 1,)``.
    """
    edges = np.asarray(edges, dtype=float)
    mu, var = np.broadcast_arrays(np.asarray(mu, dtype=float), np.asarray(var, dtype=float))
    sd = np.sqrt(var)[..., None]
    lo = np.concatenate(([-np.inf], edges))
    hi = np.concatenate((edges, [np.inf]))
    with np.errstate(divide="ignore", invalid="ignore"):
        zlo = (lo - mu[..., None]) / sd
        zhi = (hi - mu[..., None]) / sd
        # upper-tail form above the mean keeps small masses accurate
        upper = 0.5 * (erfc(zlo / _SQRT2) - erfc(zhi / _SQRT2))
        lower = 0.5 * (erfc(-zhi / _SQRT2) - erfc(-zlo / _SQRT2))
        mass = np.where(zlo >= 0, upper, lower)
    degenerate = sd[..., 0] == 0
    if np.any(degenerate):
        cell = np.searchsorted(edges, mu[degenerate], side="right")
        ind = np.zeros((cell.size, edges.size + 1))
        ind[np.arange(cell.size), cell] = 1.0
        mass[degenerate] = ind
    return np.clip(mass, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability vector over an ordered list of constellation points."""

    support: np.ndarray
    mass: np.ndarray
    levels: int = field(default=0)

    def __post_init__(self):
        support = np.asarray(self.support)
        mass = np.asarray(self.mass, dtype=float)
        if support.shape != mass.shape or mass.ndim != 1:
            raise DomainError("support and mass must be 1-D arrays of equal length")
        if np.any(mass < 0) or abs(mass.sum() - 1.0) > 1e-12:
            raise DomainError("mass must be non-negative and sum to one")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "mass", mass)
        if not self.levels:
            object.__setattr__(self, "levels", mass.size)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.support)

    def __len__(self):
        return self.mass.size


def induce_pmf(mu: float, var: float, c: Constellation) -> Pmf:
    """PMF on the PAM points induced by quantizing ``N(mu, var)``."""
    if not var > 0:
        raise DomainError(f"variance must be positive, got {var}")
    mass = interval_masses(mu, var, c.decision_boundaries)
    return Pmf(c.pam_points, mass / mass.sum(), c.levels)


def induce_pmf_complex(mu: complex, var: float, c: Constellation) -> Pmf:
    """Product PMF on the QAM grid; ``var`` is the per-component variance."""
    if not var > 0:
        raise DomainError(f"variance must be positive, got {var}")
    mu = complex(mu)
    pr = interval_masses(mu.real, var, c.decision_boundaries)
    pi = interval_masses(mu.imag, var, c.decision_boundaries)
    mass = np.outer(pr / pr.sum(), pi / pi.sum()).ravel()
    return Pmf(c.qam_points, mass / mass.sum(), c.levels)


def marginal(p: Pmf, part: str, c: Constellation) -> Pmf:
    """Real (``"re"``) or imaginary (``"im"``) marginal of a QAM PMF."""
    grid = p.mass.reshape(c.levels, c.levels)
    mass = grid.sum(axis=1) if part == "re" else grid.sum(axis=0)
    return Pmf(c.pam_points, mass / mass.sum(), c.levels)


def circular_shift(p: Pmf, s) -> Pmf:
    """Shift masses left: ``mass'(t) = mass((t + s) mod n)``.

    ``s`` is an integer for PAM PMFs or a :class:`RingElement` for QAM PMFs,
    in which case each ring component shifts its own axis.  Integer shifts
    are reduced modulo the support size.
    """
    if isinstance(s, RingElement):
        if not p.is_complex or s.modulus != p.levels:
            raise DomainError("ring shift requires a QAM PMF over the same ring")
        grid = p.mass.reshape(p.levels, p.levels)
        grid = np.roll(grid, (-s.re, -s.im), axis=(0, 1))
        return Pmf(p.support, grid.ravel(), p.levels)
    return Pmf(p.support, np.roll(p.mass, -(int(s) % len(p))), p.levels)


def shift_rows(mass: np.ndarray, shifts) -> np.ndarray:
    """Batch circular shift: row ``i`` shifted left by ``shifts[i]``."""
    mass = np.asarray(mass)
    n = mass.shape[-1]
    cols = (np.arange(n) + np.asarray(shifts)[..., None]) % n
    return np.take_along_axis(mass, cols, axis=-1)


def point_mass(p: Pmf, x) -> float:
    hits = np.flatnonzero(p.support == x)
    if hits.size == 0:
        raise DomainError(f"{x!r} is not in the PMF support")
    return float(p.mass[hits[0]])


# ---------------------------------------------------------------------------
# CSR quantizers acting on channel estimates


@dataclass(frozen=True, eq=False)
class CsrQuantizer:
    """Per-dimension quantizer from channel estimates onto the PAM points.

    Cells are cut by ``edges`` (``levels - 1`` increasing thresholds in the
    estimate domain).  ``nearest`` uses the PAM midpoints, i.e. plain
    nearest-point quantization of the raw estimate; ``scaled`` applies a gain
    before quantizing; ``equiprobable`` places the thresholds at quantiles of
    the estimate distribution so every PAM point is used equally often.
    """

    constellation: Constellation
    edges: np.ndarray
    kind: str = "nearest"

    @classmethod
    def nearest(cls, c: Constellation) -> "CsrQuantizer":
        return cls(c, c.decision_boundaries, "nearest")

    @classmethod
    def scaled(cls, c: Constellation, gain: float) -> "CsrQuantizer":
        if not gain > 0:
            raise DomainError("gain must be positive")
        return cls(c, c.decision_boundaries / gain, "scaled")

    @classmethod
    def equiprobable(cls, c: Constellation, estimate_var: float) -> "CsrQuantizer":
        """``estimate_var`` is the per-dimension variance of the estimate."""
        M = c.levels
        edges = np.sqrt(estimate_var) * ndtri(np.arange(1, M) / M)
        return cls(c, edges, "equiprobable")

    def quantize_pam(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise DomainError("cannot quantize non-finite values")
        return self.constellation.pam_points[np.searchsorted(self.edges, x, side="right")]

    def quantize(self, beta):
        b = np.asarray(beta, dtype=complex)
        out = self.quantize_pam(b.real) + 1j * self.quantize_pam(b.imag)
        return complex(out) if out.ndim == 0 else out

    def masses(self, mu, var) -> np.ndarray:
        """PMF over PAM points of the quantized value of ``N(mu, var)``."""
        return interval_masses(mu, var, self.edges)


def make_quantizer(kind: str, c: Constellation, gamma: float = 0.0, spread: float = 0.25) -> CsrQuantizer:
    """Build a CSR quantizer by name.

    ``scaled`` picks the gain so the scaled estimate has per-dimension
    standard deviation ``spread * levels``.
    """
    estimate_var = (1.0 + gamma) / 2.0
    if kind == "nearest":
        return CsrQuantizer.nearest(c)
    if kind == "equiprobable":
        return CsrQuantizer.equiprobable(c, estimate_var)
    if kind == "scaled":
        return CsrQuantizer.scaled(c, spread * c.levels / np.sqrt(estimate_var))
    raise DomainError(f"unknown quantizer {kind!r}")

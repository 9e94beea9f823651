"""Syndrome-based information reconciliation over LDPC codes.

Node 1 publishes ``s = H x`` for each frame of its key; a receiving node
runs sum-product decoding on its own LLRs constrained to that syndrome.
Parity-check matrices are read from and written to the alist format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse

from .errors import AlistParseError, DomainError
from .llr import LLR_CLAMP

_TANH_MAX = 1.0 - 1e-15


@dataclass(frozen=True, eq=False)
class ParityCheckMatrix:
    """Sparse binary ``(n - k) x n`` parity-check matrix.

    ``rows[i]`` lists the (0-indexed) columns with a one in check ``i``.
    """

    n: int
    k: int
    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(sorted(int(j) for j in r)) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        if self.n < 1 or not 0 <= self.k < self.n:
            raise DomainError(f"bad code dimensions n={self.n}, k={self.k}")
        if len(rows) != self.n - self.k:
            raise DomainError(f"expected {self.n - self.k} rows, got {len(rows)}")
        seen = np.zeros(self.n, dtype=bool)
        for i, r in enumerate(rows):
            if not r:
                raise DomainError(f"row {i} is empty")
            if len(set(r)) != len(r) or r[0] < 0 or r[-1] >= self.n:
                raise DomainError(f"row {i} has repeated or out-of-range columns")
            seen[list(r)] = True
        if not seen.all():
            raise DomainError(f"column {int(np.argmin(seen))} is empty")

    @property
    def n_checks(self) -> int:
        return self.n - self.k

    @cached_property
    def columns(self) -> tuple:
        cols = [[] for _ in range(self.n)]
        for i, r in enumerate(self.rows):
            for j in r:
                cols[j].append(i)
        return tuple(tuple(c) for c in cols)

    @cached_property
    def edges(self):
        """``(check, variable)`` index arrays, sorted by check."""
        chk = np.concatenate([np.full(len(r), i) for i, r in enumerate(self.rows)])
        var = np.concatenate([np.asarray(r) for r in self.rows])
        return chk.astype(np.int64), var.astype(np.int64)

    @cached_property
    def sparse(self) -> sparse.csr_matrix:
        chk, var = self.edges
        return sparse.csr_matrix((np.ones(chk.size, dtype=np.int64), (chk, var)),
                                 shape=(self.n_checks, self.n))

    def dense(self) -> np.ndarray:
        return self.sparse.toarray().astype(np.uint8)

    @classmethod
    def from_dense(cls, H) -> "ParityCheckMatrix":
        H = np.asarray(H) % 2
        return cls(H.shape[1], H.shape[1] - H.shape[0], tuple(np.flatnonzero(r) for r in H))


# ---------------------------------------------------------------- alist I/O

def parse_alist(text: str) -> ParityCheckMatrix:
    """Parse alist text (1-indexed neighbour lists, zero padding allowed)."""
    lines = [(no, ln.split()) for no, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    pos = 0

    def take(what, count=None):
        nonlocal pos
        if pos >= len(lines):
            raise AlistParseError(f"unexpected end of file while reading {what}",
                                  lines[-1][0] + 1 if lines else 1)
        no, tok = lines[pos]
        pos += 1
        try:
            vals = [int(t) for t in tok]
        except ValueError:
            raise AlistParseError(f"non-integer token in {what}", no) from None
        if count is not None and len(vals) != count:
            raise AlistParseError(f"{what}: expected {count} values, got {len(vals)}", no)
        return no, vals

    no, (n, m) = take("dimensions", 2)
    if n < 1 or m < 1 or m >= n:
        raise AlistParseError(f"invalid dimensions {n} x {m}", no)
    no_deg, (max_col, max_row) = take("maximum degrees", 2)
    no_c, col_deg = take("column degrees", n)
    no_r, row_deg = take("row degrees", m)
    for j, d in enumerate(col_deg):
        if d < 1:
            raise AlistParseError(f"column {j + 1} is empty", no_c)
        if d > max_col:
            raise AlistParseError(f"column {j + 1} degree {d} exceeds maximum {max_col}", no_c)
    for i, d in enumerate(row_deg):
        if d < 1:
            raise AlistParseError(f"row {i + 1} is empty", no_r)
        if d > max_row:
            raise AlistParseError(f"row {i + 1} degree {d} exceeds maximum {max_row}", no_r)
    if sum(col_deg) != sum(row_deg):
        raise AlistParseError("column and row degree totals differ", no_r)

    def neighbours(count, degrees, bound, what):
        out = []
        for idx in range(count):
            no, vals = take(f"{what} {idx + 1} list")
            nz = [v for v in vals if v != 0]
            if len(nz) != degrees[idx]:
                raise AlistParseError(f"{what} {idx + 1}: degree {degrees[idx]} but {len(nz)} entries", no)
            if any(v < 1 or v > bound for v in nz) or len(set(nz)) != len(nz):
                raise AlistParseError(f"{what} {idx + 1}: index out of range or repeated", no)
            out.append((no, [v - 1 for v in nz]))
        return out

    cols = neighbours(n, col_deg, m, "column")
    rows = neighbours(m, row_deg, n, "row")
    from_cols = {(i, j) for j, (_, c) in enumerate(cols) for i in c}
    for i, (no, r) in enumerate(rows):
        for j in r:
            if (i, j) not in from_cols:
                raise AlistParseError(f"row {i + 1} lists column {j + 1} but not vice versa", no)
    return ParityCheckMatrix(n, n - m, tuple(tuple(r) for _, r in rows))


def load_alist(path) -> ParityCheckMatrix:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read alist file {path}: {exc}") from exc
    return parse_alist(text)


def format_alist(H: ParityCheckMatrix) -> str:
    cols, rows = H.columns, H.rows
    out = [f"{H.n} {H.n_checks}",
           f"{max(map(len, cols))} {max(map(len, rows))}",
           " ".join(str(len(c)) for c in cols),
           " ".join(str(len(r)) for r in rows)]
    out += [" ".join(str(i + 1) for i in c) for c in cols]
    out += [" ".join(str(j + 1) for j in r) for r in rows]
    return "\n".join(out) + "\n"


def write_alist(H: ParityCheckMatrix, path) -> None:
    Path(path).write_text(format_alist(H))


def default_code_path(name: str = "ldpc_12_9.alist") -> Path:
    return Path(__file__).parent / "data" / name


def default_code() -> ParityCheckMatrix:
    """The shipped (12, 9) code."""
    return load_alist(default_code_path())


# ---------------------------------------------------------------- decoding

def syndrome(x, H: ParityCheckMatrix) -> np.ndarray:
    """``H x`` over GF(2); ``x`` may carry leading batch dimensions."""
    x = np.asarray(x)
    if x.shape[-1:] != (H.n,):
        raise DomainError(f"expected last dimension {H.n}, got shape {x.shape}")
    flat = x.reshape(-1, H.n).astype(np.int64) & 1
    s = (H.sparse @ flat.T).T % 2
    return s.astype(np.uint8).reshape(x.shape[:-1] + (H.n_checks,))


@dataclass(frozen=True, eq=False)
class DecodeResult:
    bits: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray


def decode_syndrome(llrs, s, H: ParityCheckMatrix, max_iter: int = 50) -> DecodeResult:
    """Sum-product decoding towards the coset with syndrome ``s``.

    LLRs are ``log(P(0) / P(1))``.  Batched inputs ``(B, n)`` with ``(B, n - k)``
    syndromes decode every frame independently.  ``iterations`` counts from 1;
    a hard decision already satisfying ``s`` stops at iteration 1.  Frames
    that never satisfy ``s`` return the last hard decision with
    ``converged`` false.
    """
    L = np.asarray(llrs, dtype=float)
    single = L.ndim == 1
    L = np.atleast_2d(L)
    S = np.atleast_2d(np.asarray(s)).astype(np.uint8)
    if L.shape[1] != H.n:
        raise DomainError(f"expected {H.n} LLRs per frame, got {L.shape[1]}")
    if S.shape != (L.shape[0], H.n_checks):
        raise DomainError(f"syndrome shape {S.shape} does not match {L.shape[0]} frames")
    if max_iter < 1:
        raise DomainError("max_iter must be at least 1")
    chk, var = H.edges
    starts = np.flatnonzero(np.r_[True, chk[1:] != chk[:-1]])
    to_var = sparse.csr_matrix((np.ones(chk.size), (np.arange(chk.size), var)),
                               shape=(chk.size, H.n))
    sgn_s = 1.0 - 2.0 * S[:, chk]

    B = L.shape[0]
    r = np.zeros((B, chk.size))
    bits = (L < 0).astype(np.uint8)
    converged = np.zeros(B, dtype=bool)
    iters = np.full(B, max_iter, dtype=np.int64)
    active = np.arange(B)
    for it in range(1, max_iter + 1):
        ok = np.all(syndrome(bits[active], H) == S[active], axis=1)
        converged[active[ok]] = True
        iters[active[ok]] = it
        active = active[~ok]
        if active.size == 0 or it == max_iter:
            break
        ra = r[active]
        post = L[active] + (to_var.T @ ra.T).T
        q = post[:, var] - ra
        t = np.tanh(q / 2.0)
        neg = (t < 0).astype(np.int64)
        logabs = np.log(np.clip(np.abs(t), 1e-300, _TANH_MAX))
        sum_log = np.add.reduceat(logabs, starts, axis=1)[:, chk]
        n_neg = np.add.reduceat(neg, starts, axis=1)[:, chk]
        mag = np.exp(sum_log - logabs)
        sign = 1.0 - 2.0 * ((n_neg - neg) % 2)
        ra = sign * sgn_s[active] * 2.0 * np.arctanh(np.minimum(mag, _TANH_MAX))
        r[active] = ra
        post = L[active] + (to_var.T @ ra.T).T
        bits[active] = (post < 0).astype(np.uint8)
    if single:
        return DecodeResult(bits[0], bool(converged[0]), int(iters[0]))
    return DecodeResult(bits, converged, iters)


@dataclass(frozen=True, eq=False)
class ReconciliationResult:
    """Outcome of reconciling one node's key against node 1's.

    Mismatch rates exclude padding.  ``disclosed_bits`` is the public
    syndrome length.
    """

    bits: np.ndarray
    pre_mismatch: float
    post_mismatch: float
    frame_pre_errors: np.ndarray
    frame_post_errors: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    disclosed_bits: int

    @property
    def n_frames(self) -> int:
        return self.converged.size


def reconcile_block(node1_bits, node_llrs, H: ParityCheckMatrix, max_iter: int = 50,
                    node_bits=None) -> ReconciliationResult:
    """Frame, publish syndromes and decode one node's key.

    The key is cut into ``n``-bit frames; the last frame is padded with
    zeros known to both sides (LLR ``+LLR_CLAMP``).  Pre-mismatch uses
    ``node_bits`` when given, otherwise the hard decision of ``node_llrs``.
    """
    x = np.asarray(node1_bits, dtype=np.uint8).ravel()
    llr = np.asarray(node_llrs, dtype=float).ravel()
    if x.size != llr.size:
        raise DomainError(f"{x.size} key bits but {llr.size} LLRs")
    mine = (llr < 0).astype(np.uint8) if node_bits is None else np.asarray(node_bits, np.uint8).ravel()
    if mine.size != x.size:
        raise DomainError("node_bits length differs from key length")
    n_frames = math.ceil(x.size / H.n)
    total = n_frames * H.n
    pad = total - x.size
    X = np.r_[x, np.zeros(pad, np.uint8)].reshape(n_frames, H.n)
    Lf = np.r_[llr, np.full(pad, LLR_CLAMP)].reshape(n_frames, H.n)
    Y = np.r_[mine, np.zeros(pad, np.uint8)].reshape(n_frames, H.n)
    if n_frames:
        res = decode_syndrome(Lf, syndrome(X, H), H, max_iter)
        out, conv, its = res.bits, res.converged, res.iterations
    else:
        out, conv, its = X.copy(), np.zeros(0, bool), np.zeros(0, np.int64)
    real = (np.arange(total) < x.size).reshape(n_frames, H.n)
    pre = np.sum((Y != X) & real, axis=1)
    post = np.sum((out != X) & real, axis=1)
    n = max(x.size, 1)
    return ReconciliationResult(
        bits=out.ravel()[: x.size],
        pre_mismatch=float(pre.sum() / n) if x.size else 0.0,
        post_mismatch=float(post.sum() / n) if x.size else 0.0,
        frame_pre_errors=pre,
        frame_post_errors=post,
        converged=conv,
        iterations=its,
        disclosed_bits=n_frames * H.n_checks,
    )

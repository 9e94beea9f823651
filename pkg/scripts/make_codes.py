"""Regenerate the parity-check matrices shipped in ``asqgsk/data``.

The (12, 9) code is three disjoint single-parity checks of length four.
The (648, 486) code is a (3, 12)-regular matrix with no length-4 cycles,
grown column by column with seeded random tie-breaking.
"""

import argparse
from pathlib import Path

import numpy as np

from asqgsk.recon import ParityCheckMatrix, write_alist


def spc_code() -> ParityCheckMatrix:
    return ParityCheckMatrix(12, 9, tuple(tuple(range(4 * i, 4 * i + 4)) for i in range(3)))


def regular_girth6(n: int, col_w: int, row_w: int, seed: int, attempts: int = 200) -> ParityCheckMatrix:
    m = n * col_w // row_w
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        deg = np.zeros(m, dtype=int)
        # pairs[i, j] is True when checks i and j already share a column
        pairs = np.zeros((m, m), dtype=bool)
        rows = [[] for _ in range(m)]
        ok = True
        for v in range(n):
            chosen = []
            for _ in range(col_w):
                free = deg < row_w
                if chosen:
                    free &= ~pairs[chosen].any(axis=0)
                    free[chosen] = False
                cand = np.flatnonzero(free)
                if cand.size == 0:
                    ok = False
                    break
                low = cand[deg[cand] == deg[cand].min()]
                chosen.append(int(rng.choice(low)))
            if not ok:
                break
            for a in chosen:
                deg[a] += 1
                rows[a].append(v)
                for b in chosen:
                    if a != b:
                        pairs[a, b] = True
        if ok:
            return ParityCheckMatrix(n, n - m, tuple(tuple(r) for r in rows))
    raise RuntimeError("no girth-6 matrix found")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path(__file__).parents[1] / "src/asqgsk/data")
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    write_alist(spc_code(), args.out / "ldpc_12_9.alist")
    write_alist(regular_girth6(648, 3, 12, args.seed), args.out / "ldpc_648_486.alist")


if __name__ == "__main__":
    main()

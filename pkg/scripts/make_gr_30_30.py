"""Regenerate data/matrices/gr_30_30.mtx.

The matrix is the nine-point discretization of the Laplacian on a 30x30
grid of the unit square with Dirichlet boundary conditions: diagonal 8,
all eight grid neighbors -1. Stored as Matrix Market symmetric coordinate,
lower triangle, matching the collection's canonical layout (900 rows,
7744 nonzeros in the full pattern).
"""

import os

N = 30


def entries():
    def idx(i, j):
        return i * N + j

    for i in range(N):
        for j in range(N):
            row = idx(i, j)
            yield row, row, 8.0
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    if di == 0 and dj == 0:
                        continue
                    ii, jj = i + di, j + dj
                    if 0 <= ii < N and 0 <= jj < N:
                        col = idx(ii, jj)
                        if col < row:
                            yield row, col, -1.0


def main(path):
    rows = sorted(entries(), key=lambda t: (t[1], t[0]))
    with open(path, "w") as f:
        f.write("%%MatrixMarket matrix coordinate real symmetric\n")
        f.write(f"{N * N} {N * N} {len(rows)}\n")
        for r, c, v in rows:
            f.write(f"{r + 1} {c + 1} {v:.1f}\n")
    print(f"wrote {path} ({len(rows)} stored entries)")


if __name__ == "__main__":
    here = os.path.dirname(os.path.abspath(__file__))
    main(os.path.join(here, "..", "data", "matrices", "gr_30_30.mtx"))

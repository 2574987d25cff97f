"""Small dense symmetric linear algebra and sparse matrix-vector products.

Shared kernels for all solvers: deterministic SpMV, Gram matrices built one
inner product per column pair, a cyclic Jacobi eigensolver for the small
symmetric matrices that arise per block (order <= 2*sigma + 1), and basis
condition estimation from Gram principal submatrices.
"""

from __future__ import annotations

import numpy as np

JACOBI_MAX_SWEEPS = 100
JACOBI_OFF_TOL = 1e-14


class EigenConvergenceError(RuntimeError):
    """Jacobi sweep limit hit; carries the remaining off-diagonal norm."""

    def __init__(self, off_norm):
        super().__init__(f"Jacobi eigensolver did not converge, off-norm {off_norm:.3e}")
        self.off_norm = off_norm


def spmv(a, x):
    """Sparse matrix-vector product y = A x.

    Accumulation is sequential in stored order within each row (CSR kernel),
    so repeated calls on identical inputs are bitwise reproducible.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (a.n,):
        raise ValueError(f"dimension mismatch: matrix is {a.n}x{a.n}, vector has shape {x.shape}")
    return a.as_csr() @ x


def gram(y):
    """Gram matrix G = Y^T Y, exactly symmetric.

    The product is formed once (BLAS) and the lower triangle mirrored, so
    each unordered pair has a single value assigned to both positions.
    """
    y = np.asarray(y, dtype=float)
    g = y.T @ y
    il = np.tril_indices(g.shape[0], -1)
    g[il[1], il[0]] = g[il]
    return g


def sym_eig(m, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.

    Sweeps run until the off-diagonal Frobenius norm drops below
    1e-14 * ||M||_F. Returns eigenvalues sorted ascending.
    """
    a = np.array(m, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("sym_eig expects a square matrix")
    if n == 1:
        return a[0, :1].copy()
    fro = np.linalg.norm(a)
    if fro == 0.0:
        return np.zeros(n)
    def _off_norm(m_):
        od = m_ - np.diag(np.diag(m_))
        return np.linalg.norm(od)

    for _ in range(max_sweeps):
        off = _off_norm(a)
        if off <= JACOBI_OFF_TOL * fro:
            return np.sort(np.diag(a))
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if not np.isfinite(tau) or abs(tau) > 1e100:
                    # rotation angle ~ 1/(2 tau); avoids overflow in tau*tau
                    t = 0.0 if not np.isfinite(tau) else 1.0 / (2.0 * tau)
                elif tau != 0.0:
                    t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                else:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = a[q, p] = 0.0
    off = _off_norm(a)
    if off <= JACOBI_OFF_TOL * fro:
        return np.sort(np.diag(a))
    raise EigenConvergenceError(off)


def _cond_from_eigvals(w):
    """Condition estimate sqrt(lmax / smallest-magnitude eigenvalue).

    Computed Gram matrices of very ill-conditioned bases are indefinite at
    roundoff level; the magnitude of the smallest eigenvalue then still
    carries the right order for sqrt(kappa(G)) ~ kappa(Y). Only an exactly
    zero eigenvalue (e.g. duplicated columns) maps to the +inf sentinel.
    """
    lmax = w[-1]
    if lmax <= 0.0:
        return np.inf
    smallest = np.abs(w).min()
    if smallest == 0.0:
        return np.inf
    return float(np.sqrt(lmax / smallest))


def gram_cond_estimate(g, cols):
    """Estimate kappa(Y[:, cols]) as sqrt(kappa(G[cols, cols])).

    +inf signals a numerically singular submatrix (exactly zero eigenvalue).
    """
    cols = list(cols)
    if not cols:
        raise ValueError("empty column index set")
    g = np.asarray(g, dtype=float)
    sub = g[np.ix_(cols, cols)]
    # LAPACK backend: these solves sit on the per-block hot path.
    w = np.linalg.eigvalsh(sub)
    return _cond_from_eigvals(w)


def nested_basis_conds(g, s_bar):
    """kappa estimates for the nested bases Y_{k,i}, i = 1..s_bar.

    The Gram matrix g is over [P | R] with s_bar+1 P-columns followed by
    s_bar R-columns; Y_{k,i} uses P-columns 0..i and R-columns 0..i-1.
    Index 0 of the returned array is unused (kept NaN) so conds[i] matches i.
    """
    g = np.asarray(g, dtype=float)
    conds = np.full(s_bar + 1, np.nan)
    for i in range(1, s_bar + 1):
        cols = list(range(0, i + 1)) + list(range(s_bar + 1, s_bar + 1 + i))
        sub = g[np.ix_(cols, cols)]
        conds[i] = _cond_from_eigvals(np.linalg.eigvalsh(sub))
    return conds

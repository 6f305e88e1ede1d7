"""Dense symmetric eigensolvers.

The generalized solver reduces ``B y = lam C y`` to a standard symmetric
problem through the Cholesky factor of a ridge-regularized ``C``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

DEFAULT_RIDGE = 1e-8
DEFAULT_CUTOFF = 1e-10


class LinAlgFailure(ArithmeticError):
    pass


def symmetrize(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return 0.5 * (m + m.T)


def sym_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and orthonormal eigenvectors (as columns)."""
    m = symmetrize(m)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    vals, vecs = np.linalg.eigh(m)
    order = np.argsort(-vals, kind="stable")
    return vals[order], vecs[:, order]


@dataclass(frozen=True)
class GenEigResult:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # n x r, column k pairs with eigenvalues[k]

    @property
    def retained(self) -> int:
        return self.eigenvalues.shape[0]


def gen_eig_sym_definite(b, c, ridge: float = DEFAULT_RIDGE) -> GenEigResult:
    """Solve ``B y = lam (C + eps I) y`` with ``eps = ridge * trace(C) / n``.

    Eigenvectors are normalized so that ``Y.T @ (C + eps I) @ Y = I``.
    """
    b = symmetrize(b)
    c = symmetrize(c)
    if b.shape != c.shape:
        raise ValueError(f"shape mismatch {b.shape} vs {c.shape}")
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
        raise ValueError("non-finite matrix entries")
    n = c.shape[0]
    fro = np.linalg.norm(c)
    lowest = np.linalg.eigvalsh(c)[0] if n else 0.0
    if lowest < -1e-8 * fro:
        raise LinAlgFailure(f"right-hand matrix is not PSD (min eigenvalue {lowest:.3e})")

    tr = np.trace(c)
    eps = ridge * tr / n if tr > 0 else ridge
    c_reg = c + eps * np.eye(n)
    try:
        chol = np.linalg.cholesky(c_reg)
    except np.linalg.LinAlgError:
        # ridge was swamped by negative rounding noise; lift by the offending amount
        lift = max(eps, -lowest) * 10.0
        try:
            chol = np.linalg.cholesky(c + lift * np.eye(n))
        except np.linalg.LinAlgError as exc:
            raise LinAlgFailure("Cholesky factorization failed after regularization") from exc

    # K^{-1} B K^{-T}
    tmp = solve_triangular(chol, b, lower=True)
    reduced = solve_triangular(chol, tmp.T, lower=True).T
    vals, vecs = sym_eig(reduced)
    y = solve_triangular(chol.T, vecs, lower=False)
    return GenEigResult(vals, y)


def positive_truncate(r: GenEigResult, rel_cutoff: float = DEFAULT_CUTOFF) -> GenEigResult:
    vals = r.eigenvalues
    if vals.size == 0:
        return r
    keep = vals > rel_cutoff * max(1.0, abs(vals[0]))
    return GenEigResult(vals[keep], r.eigenvectors[:, keep])

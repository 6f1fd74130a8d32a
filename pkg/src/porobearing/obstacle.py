"""Finite-dimensional obstacle problems solved by projected SOR.

The problem is: find ``u`` with ``u_i >= 0`` for constrained ``i`` such that

    (A u - b)_i >= 0,  u_i (A u - b)_i = 0   (constrained i)
    (A u - b)_i  = 0                          (free i)

which, for symmetric positive definite ``A``, is the minimizer of
``0.5 u.A u - b.u`` over the feasible cone.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numba
import numpy as np
import scipy.sparse as sp


@dataclass
class ObstacleProblem:
    """SPD matrix, load vector and the set of unknowns bounded below by 0.

    ``A`` may be a dense array or any scipy sparse matrix. ``constrained`` is
    either a boolean mask or an integer index array.
    """

    A: object
    b: np.ndarray
    constrained: np.ndarray

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        n = self.b.size
        if self.A.shape != (n, n):
            raise ValueError(f"A has shape {self.A.shape}, expected {(n, n)}")
        mask = np.asarray(self.constrained)
        if mask.dtype == bool:
            if mask.size != n:
                raise ValueError("constrained mask length does not match b")
        else:
            idx = mask.astype(np.int64).ravel()
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise ValueError("constrained indices out of range")
            mask = np.zeros(n, dtype=bool)
            mask[idx] = True
        self.constrained = mask

        csr = sp.csr_matrix(self.A, dtype=float)
        csr.sum_duplicates()
        csr.sort_indices()
        asym = abs(csr - csr.T)
        scale = abs(csr).max() if csr.nnz else 0.0
        if asym.nnz and asym.max() > 1e-12 * scale:
            raise ValueError("A is not symmetric within 1e-12 relative")
        diag = csr.diagonal()
        if np.any(diag <= 0.0):
            raise ValueError("A must have a strictly positive diagonal")
        self._csr = csr
        self._diag = diag

    @property
    def n(self) -> int:
        return self.b.size

    @property
    def csr(self) -> sp.csr_matrix:
        return self._csr


@dataclass
class SolveReport:
    iterations: int
    final_change: float
    complementarity_gap: float
    energy: float
    converged: bool
    # one row per recorded sweep: (sweep, max_change, energy)
    trace: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))

    def write_trace(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sweep", "max_change", "energy"])
            for sweep, change, en in self.trace:
                writer.writerow([int(sweep), f"{change:.17g}", f"{en:.17g}"])


@dataclass
class ComplementarityReport:
    passed: bool
    gap: float
    min_constrained_value: float
    min_constrained_residual: float
    max_free_residual: float
    violations: np.ndarray


@numba.njit(cache=True, inline="always")
def _two_sum(a, b):
    s = a + b
    z = s - a
    return s, (a - (s - z)) + (b - z)


@numba.njit(cache=True, inline="always")
def _two_prod(a, b):
    p = a * b
    ca = 134217729.0 * a
    ah = ca - (ca - a)
    al = a - ah
    cb = 134217729.0 * b
    bh = cb - (cb - b)
    bl = b - bh
    return p, al * bl - (((p - ah * bh) - al * bh) - ah * bl)


@numba.njit(cache=True)
def _csr_energy(indptr, indices, data, b, u):
    # compensated evaluation; keeps the per-sweep trace free of cancellation noise
    s = 0.0
    c = 0.0
    for i in range(b.size):
        hu = 0.5 * u[i]
        for p in range(indptr[i], indptr[i + 1]):
            q, qe = _two_prod(data[p], u[indices[p]])
            t, te = _two_prod(hu, q)
            s, se = _two_sum(s, t)
            c += se + te + hu * qe
        t, te = _two_prod(-b[i], u[i])
        s, se = _two_sum(s, t)
        c += se + te
    return s + c


@numba.njit(cache=True)
def _psor(indptr, indices, data, diag, b, mask, u, omega, tol, maxit, record, trace):
    n = b.size
    change = np.inf
    it = 0
    while it < maxit:
        change = 0.0
        for i in range(n):
            s = b[i]
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                if j != i:
                    s -= data[p] * u[j]
            new = (1.0 - omega) * u[i] + omega * s / diag[i]
            if mask[i] and new < 0.0:
                new = 0.0
            d = abs(new - u[i])
            if d > change:
                change = d
            u[i] = new
        if record:
            trace[it, 0] = it + 1
            trace[it, 1] = change
            trace[it, 2] = _csr_energy(indptr, indices, data, b, u)
        it += 1
        if change < tol:
            break
    return it, change


def energy(p: ObstacleProblem, u) -> float:
    """Quadratic functional ``0.5 u.A u - b.u``."""
    u = np.asarray(u, dtype=float)
    if u.shape != p.b.shape:
        raise ValueError("dimension mismatch between u and the problem")
    return 0.5 * float(u @ (p.csr @ u)) - float(p.b @ u)


def complementarity_check(p: ObstacleProblem, u, tol: float = 1e-8) -> ComplementarityReport:
    """Check the discrete KKT conditions of the obstacle problem at ``u``."""
    u = np.asarray(u, dtype=float)
    r = p.csr @ u - p.b
    c = p.constrained
    bad = np.zeros(p.n, dtype=bool)
    bad[c] = (u[c] < -tol) | (r[c] < -tol) | (np.abs(u[c] * r[c]) > tol)
    bad[~c] = np.abs(r[~c]) > tol
    gap = float(np.max(np.abs(u[c] * r[c]))) if c.any() else 0.0
    return ComplementarityReport(
        passed=not bad.any(),
        gap=gap,
        min_constrained_value=float(u[c].min()) if c.any() else np.inf,
        min_constrained_residual=float(r[c].min()) if c.any() else np.inf,
        max_free_residual=float(np.abs(r[~c]).max()) if (~c).any() else 0.0,
        violations=np.flatnonzero(bad),
    )


def projected_sor(
    p: ObstacleProblem,
    omega: float = 1.5,
    tol: float = 1e-10,
    maxit: int = 200_000,
    x0=None,
    record_trace: bool = False,
):
    """Projected successive over-relaxation.

    Gauss-Seidel sweeps in natural order; constrained unknowns are clamped at
    zero right after their update. Iteration stops when the max-norm of the
    change over one sweep drops below ``tol``.

    Parameters
    ----------
    p : ObstacleProblem
    omega : float
        Relaxation factor in (0, 2).
    tol : float
        Stopping threshold on the max-norm iterate change.
    maxit : int
        Sweep limit. On exhaustion the last iterate is returned and the
        report is flagged ``converged=False``.
    x0 : array_like, optional
        Starting vector; constrained entries are clamped to be feasible.
        Defaults to ``b`` clamped.
    record_trace : bool
        Store ``(sweep, max_change, energy)`` after every sweep.

    Returns
    -------
    u : ndarray
    report : SolveReport
    """
    if not 0.0 < omega < 2.0:
        raise ValueError(f"omega must lie in (0, 2), got {omega}")
    if maxit < 1:
        raise ValueError("maxit must be at least 1")
    u = np.array(p.b if x0 is None else x0, dtype=float)
    if u.shape != p.b.shape:
        raise ValueError("x0 has the wrong shape")
    u[p.constrained] = np.maximum(u[p.constrained], 0.0)

    csr = p.csr
    trace = np.zeros((maxit if record_trace else 1, 3))
    its, change = _psor(
        csr.indptr.astype(np.int64),
        csr.indices.astype(np.int64),
        csr.data,
        p._diag,
        p.b,
        p.constrained,
        u,
        float(omega),
        float(tol),
        int(maxit),
        bool(record_trace),
        trace,
    )
    check = complementarity_check(p, u, tol=np.inf)
    report = SolveReport(
        iterations=int(its),
        final_change=float(change),
        complementarity_gap=check.gap,
        energy=energy(p, u),
        converged=bool(change < tol),
        trace=trace[:its] if record_trace else np.empty((0, 3)),
    )
    return u, report

"""Sparse direct factorization of the constant-in-time step matrix.

Time-step systems (tau given) are factored through an exact block
elimination: the DG mass matrix D is block diagonal, so the lower block row
gives u = tau D^{-1} (rhs_u + B^T sigma) and the step matrix reduces to the
SPD flux system

    S = M + tau B D^{-1} B^T,

factored once with a symmetric fill-reducing ordering.  This is algebraically
exact (no iteration); the elimination keeps 3D factorizations at desk scale,
where an LU of the full indefinite matrix exhausts memory.  The Poisson-mode
matrix (tau = None, zero lower-right block) admits no such elimination and is
factored whole.

Every solve is checked against the residual contract
||A x - b||_inf / (||A||_inf ||x||_inf + ||b||_inf) < 1e-10 on the full
step matrix.
"""

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import SolverError

RESIDUAL_TOL = 1e-10


def _block_diagonal_inverse(D, block_size):
    """Exact inverse of a block-diagonal sparse matrix with uniform blocks."""
    n = D.shape[0]
    if block_size == 1:
        return sp.diags(1.0 / D.diagonal()).tocsr()
    nb = n // block_size
    idx = np.arange(n).reshape(nb, block_size)
    blocks = np.asarray(D[idx.repeat(block_size, axis=1).ravel(),
                          np.tile(idx, (1, block_size)).ravel()]).reshape(nb, block_size, block_size)
    inv = np.linalg.inv(blocks)
    rows = np.repeat(idx, block_size, axis=1).ravel()
    cols = np.tile(idx, (1, block_size)).ravel()
    return sp.coo_matrix((inv.ravel(), (rows, cols)), shape=D.shape).tocsr()


class Factorization:
    """Reusable direct factorization of the (n_rt + n_dg) step matrix."""

    def __init__(self, system):
        self.system = system
        self.matrix = system.step_matrix()
        self.n_rt = system.n_rt
        self.n_dg = system.n_dg
        self.tau = system.tau
        try:
            if self.tau is None:
                self._lu = splu(self.matrix, permc_spec="MMD_ATA")
                self._eliminated = False
            else:
                block = system.dg.n_loc if system.dg is not None else 1
                self._Dinv = _block_diagonal_inverse(system.D.tocsr(), block)
                self._B = system.B.tocsr()
                flux = (system.M + self.tau * (self._B @ self._Dinv @ self._B.T)).tocsc()
                self._lu = splu(
                    flux,
                    permc_spec="MMD_AT_PLUS_A",
                    diag_pivot_thresh=0.0,
                    options={"SymmetricMode": True},
                )
                self._eliminated = True
        except (RuntimeError, np.linalg.LinAlgError) as exc:
            raise SolverError(f"saddle matrix factorization failed: {exc}") from exc
        self._norm = np.abs(self.matrix).sum(axis=1).max()
        system.factorization = self

    def solve(self, rhs_sigma, rhs_u):
        """Solve the step system; returns (sigma_coeffs, u_coeffs)."""
        rhs_sigma = np.asarray(rhs_sigma, dtype=float)
        rhs_u = np.asarray(rhs_u, dtype=float)
        if rhs_sigma.shape != (self.n_rt,) or rhs_u.shape != (self.n_dg,):
            raise ValueError(
                f"rhs shapes {rhs_sigma.shape}, {rhs_u.shape} do not match "
                f"system sizes ({self.n_rt},), ({self.n_dg},)"
            )
        if self._eliminated:
            w = self._Dinv @ rhs_u
            sigma = self._lu.solve(rhs_sigma - self.tau * (self._B @ w))
            u = self.tau * (self._Dinv @ (rhs_u + self._B.T @ sigma))
            x = np.concatenate([sigma, u])
        else:
            x = self._lu.solve(np.concatenate([rhs_sigma, rhs_u]))
        b = np.concatenate([rhs_sigma, rhs_u])
        denom = self._norm * np.abs(x).max(initial=0.0) + np.abs(b).max(initial=0.0)
        if denom > 0:
            res = np.abs(self.matrix @ x - b).max() / denom
            if not res < RESIDUAL_TOL:
                raise SolverError(f"solve residual {res:.3e} exceeds {RESIDUAL_TOL:.0e}")
        return x[: self.n_rt], x[self.n_rt :]


def factor(system):
    """Factor the step matrix of an assembled SaddleSystem."""
    return Factorization(system)


def solve(fact, rhs_sigma, rhs_u):
    """Solve with a previously computed factorization."""
    return fact.solve(rhs_sigma, rhs_u)

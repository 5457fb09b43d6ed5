"""Discretised K_T + lambda V on the radial sector and its lowest eigenpair."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericalError
from .fermi_grid import RadialGrid, kernel_matrix
from .potential import PotentialSpec

SERIES_CUTOFF = 1e-8


@dataclass(frozen=True)
class DispersionParams:
    mu: float
    T: float

    def __post_init__(self):
        if not self.mu > 0:
            raise DomainError(f"mu must be positive, got {self.mu}")
        if not self.T >= 0:
            raise DomainError(f"T must be non-negative, got {self.T}")


def k_T(p, params: DispersionParams):
    """K_T(p) = (p^2 - mu) / tanh((p^2 - mu) / (2T)), with K_0 = |p^2 - mu|."""
    x = np.asarray(p, dtype=float) ** 2 - params.mu
    T = params.T
    if T == 0:
        return np.abs(x)
    small = np.abs(x) < SERIES_CUTOFF * max(T, params.mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        # x / tanh(x / 2T) written through exp to stay finite for large |x|/T
        y = np.abs(x) / (2 * T)
        out = np.abs(x) * (1 + np.exp(-2 * y)) / -np.expm1(-2 * y)
    series = 2 * T + x**2 / (6 * T)
    return np.where(small, series, out)


@dataclass
class SymmetricOperatorMatrix:
    matrix: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError("operator matrix must be square")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def interaction_matrix(P: PotentialSpec, grid: RadialGrid) -> np.ndarray:
    """s_i A_d(p_i, p_j) s_j with s_i = sqrt(w_i p_i^(d-1)); cached on the grid."""
    key = ("SAS", P)
    out = grid._cache.get(key)
    if out is None:
        s = np.sqrt(grid.measure(P.dimension))
        out = s[:, None] * kernel_matrix(P, grid) * s[None, :]
        out = 0.5 * (out + out.T)
        out.setflags(write=False)
        grid._cache[key] = out
    return out


def assemble_KTV(P: PotentialSpec, grid: RadialGrid, lam: float,
                 params: DispersionParams) -> SymmetricOperatorMatrix:
    if grid.mu != params.mu:
        raise DomainError(f"grid mu={grid.mu} differs from params mu={params.mu}")
    if lam < 0:
        raise DomainError("coupling must be non-negative")
    M = lam * interaction_matrix(P, grid)
    M[np.diag_indices_from(M)] += k_T(grid.nodes, params)
    return SymmetricOperatorMatrix(M, {"grid": grid.describe(), "lambda": lam, "T": params.T,
                                       "mu": params.mu, "dimension": P.dimension})


def lowest_eigenpair(M: SymmetricOperatorMatrix | np.ndarray):
    """Lowest eigenvalue and unit eigenvector; first nonzero component positive."""
    A = M.matrix if isinstance(M, SymmetricOperatorMatrix) else np.asarray(M, dtype=float)
    if A.size == 0:
        raise DomainError("empty matrix")
    if not np.all(np.isfinite(A)):
        raise NumericalError("operator matrix has non-finite entries")
    vals, vecs = scipy.linalg.eigh(A, subset_by_index=[0, 0], driver="evr")
    value = float(vals[0])
    v = vecs[:, 0]
    v = v / np.linalg.norm(v)
    nz = np.flatnonzero(np.abs(v) > 1e-14 * np.max(np.abs(v)))
    if nz.size and v[nz[0]] < 0:
        v = -v
    resid = np.linalg.norm(A @ v - value * v)
    if resid > 1e-10 * max(np.linalg.norm(A), np.finfo(float).tiny):
        raise NumericalError(f"eigenpair residual {resid:.3e} above contract")
    return value, v


def lowest_eigenvalue(M) -> float:
    A = M.matrix if isinstance(M, SymmetricOperatorMatrix) else M
    if not np.all(np.isfinite(A)):
        raise NumericalError("operator matrix has non-finite entries")
    return float(scipy.linalg.eigh(A, eigvals_only=True, subset_by_index=[0, 0], driver="evr")[0])


def variational_bound(M: SymmetricOperatorMatrix, v) -> float:
    """Rayleigh quotient <v, M v> / <v, v>, an upper bound for the lowest eigenvalue."""
    v = np.asarray(v, dtype=float)
    return float(v @ (M.matrix @ v) / (v @ v))

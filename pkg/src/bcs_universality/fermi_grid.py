"""Fermi-surface graded momentum grids and angular-averaged kernels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .potential import PotentialSpec

ANGULAR_RTOL = 1e-10


def gauss_panels(bounds, n: int):
    """Gauss-Legendre nodes/weights with ``n`` points on each panel of ``bounds``."""
    bounds = np.asarray(bounds, dtype=float)
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * np.diff(bounds)
    mid = 0.5 * (bounds[1:] + bounds[:-1])
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def graded_bounds(scale: float, upper: float, ratio: float = 2.0):
    """Panel boundaries 0, scale, 2 scale, 4 scale, ... , upper."""
    if scale >= upper:
        return np.array([0.0, upper])
    b = [0.0]
    x = scale
    while x < upper / ratio * 1.0000001:
        b.append(x)
        x *= ratio
    b.append(upper)
    return np.array(b)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Radial quadrature on (0, Lambda] graded geometrically toward sqrt(mu).

    ``sqrt(mu)`` and ``sqrt(2 mu)`` are panel boundaries; the two panels
    adjacent to the Fermi radius have width ``s_min * sqrt(mu)``.
    """

    mu: float
    nodes: np.ndarray
    weights: np.ndarray
    Lambda: float
    s_min: float
    points_per_panel: int
    panels: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def kf(self) -> float:
        return math.sqrt(self.mu)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def inside(self) -> np.ndarray:
        """Mask of nodes with p < sqrt(2 mu)."""
        return self.nodes < math.sqrt(2 * self.mu)

    def refined(self) -> "RadialGrid":
        """Twice the points per panel and half the finest panel width."""
        return build_grid(self.mu, self.Lambda, 2 * self.points_per_panel, self.s_min / 2)

    def measure(self, d: int) -> np.ndarray:
        """Radial measure w_i p_i^(d-1)."""
        return self.weights * self.nodes ** (d - 1)

    def describe(self) -> dict:
        return {"n": int(self.size), "Lambda": self.Lambda, "s_min": self.s_min,
                "points_per_panel": self.points_per_panel}


def build_grid(mu: float, Lambda: float, points_per_panel: int = 16, s_min: float = 1e-8,
               outer_width: float | None = None) -> RadialGrid:
    if not mu > 0:
        raise DomainError(f"mu must be positive, got {mu}")
    if not Lambda > math.sqrt(2 * mu):
        raise DomainError(f"Lambda={Lambda} must exceed sqrt(2 mu)={math.sqrt(2 * mu)}")
    if not 0 < s_min < 1:
        raise DomainError(f"s_min must lie in (0, 1), got {s_min}")
    if points_per_panel < 4:
        raise DomainError("points_per_panel must be >= 4")
    kf = math.sqrt(mu)
    if outer_width is None:
        outer_width = 0.5 * kf

    offsets = []
    o = s_min
    while o < 1.0:
        offsets.append(o)
        o *= 2.0
    offsets = np.array(offsets)
    below = kf * (1.0 - offsets[offsets <= 0.5])
    above = kf * (1.0 + offsets)
    special = [0.0, kf, math.sqrt(2) * kf, 2 * kf]
    b = np.concatenate([below, above, special])
    # drop geometric boundaries crowding the forced sqrt(2 mu) boundary
    crowd = (np.abs(b - math.sqrt(2) * kf) < 1e-3 * kf) & (b != math.sqrt(2) * kf)
    b = b[~crowd]
    top = min(2 * kf, Lambda)
    b = b[b <= top]
    if Lambda > 2 * kf:
        k = max(1, math.ceil((Lambda - 2 * kf) / outer_width))
        b = np.concatenate([b, np.linspace(2 * kf, Lambda, k + 1)])
    else:
        b = np.append(b, Lambda)
    bounds = np.unique(b)
    nodes, weights = gauss_panels(bounds, points_per_panel)
    return RadialGrid(mu=float(mu), nodes=nodes, weights=weights, Lambda=float(Lambda),
                      s_min=float(s_min), points_per_panel=int(points_per_panel), panels=bounds)


def integrate(grid: RadialGrid, samples) -> float:
    samples = np.asarray(samples, dtype=float)
    if samples.shape != grid.nodes.shape:
        raise DomainError(f"expected {grid.size} samples, got {samples.shape}")
    return float(np.dot(grid.weights, samples))


def _angular_average(vhat, p, q, rtol=ANGULAR_RTOL, n_start=32, n_max=1 << 14):
    """(2 pi)^-1 \\int_0^{2pi} vhat(|p e1 - q w(theta)|) dtheta, periodic trapezoid.

    The integrand is even in theta, so the 2N-point periodic rule is evaluated
    on [0, pi] with N+1 nodes; N doubles until the update is below ``rtol``.
    """
    p, q = np.broadcast_arrays(np.asarray(p, float), np.asarray(q, float))
    pp = p[..., None]
    qq = q[..., None]
    s2 = pp**2 + qq**2

    def f(theta):
        return vhat(np.sqrt(np.maximum(s2 - 2 * pp * qq * np.cos(theta), 0.0)))

    n = n_start
    theta = np.linspace(0.0, math.pi, n + 1)
    vals = f(theta)
    total = vals.sum(-1) - 0.5 * (vals[..., 0] + vals[..., -1])
    est = total / n
    while True:
        mids = (np.arange(n) + 0.5) * math.pi / n
        total = total + f(mids).sum(-1)
        n *= 2
        new = total / n
        scale = np.max(np.abs(new)) if new.size else 0.0
        err = np.abs(new - est)
        if np.all(err <= rtol * np.abs(new) + 1e-3 * rtol * scale) or n >= n_max:
            return new
        est = new


def angular_kernel(P: PotentialSpec, p, q):
    """Radial-sector kernel A_d(p, q) of the interaction (prefactor included).

    d = 1: (2 pi)^(-1/2) [V^(|p - q|) + V^(p + q)]   (even functions on R)
    d = 2: angular mean of V^(|p e1 - q w|) over w on the unit circle.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(p < 0) or np.any(q < 0):
        raise DomainError("angular_kernel needs p, q >= 0")
    if P.dimension == 1:
        return (P.vhat_fast(np.abs(p - q)) + P.vhat_fast(p + q)) / math.sqrt(2 * math.pi)
    return _angular_average(P.vhat_fast, p, q)


def kernel_matrix(P: PotentialSpec, grid: RadialGrid) -> np.ndarray:
    """A_d(p_i, p_j) on the grid nodes; symmetric, cached per grid."""
    key = ("A", P)
    A = grid._cache.get(key)
    if A is None:
        x = grid.nodes
        if P.dimension == 1:
            A = angular_kernel(P, x[:, None], x[None, :])
        else:
            A = np.empty((x.size, x.size))
            rows = max(1, 40_000 // x.size)
            for i in range(0, x.size, rows):
                A[i:i + rows] = _angular_average(P.vhat_fast, x[i:i + rows, None], x[None, :])
        A = 0.5 * (A + A.T)
        A.setflags(write=False)
        grid._cache[key] = A
    return A

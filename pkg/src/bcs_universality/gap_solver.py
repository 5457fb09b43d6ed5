"""Zero- and finite-temperature BCS gap equation on the radial sector.

The gap equation is implemented with E_Delta and the tanh factor evaluated at
the integration momentum q:

    Delta(p) = -lambda \\int A_d(p, q) Delta(q) tanh(E(q) / 2T) / E(q) q^(d-1) dq,

which is the Euler-Lagrange form; as printed with E(p) the equation would not
reduce to the linear criterion K_T + lambda V at Delta -> 0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError, NumericalError
from .fermi_grid import RadialGrid, build_grid, kernel_matrix
from .potential import PotentialSpec
from .sphere_asymptotics import FermiSphereData, predicted_Xi
from .critical_temperature import fermi_s_integral

log = logging.getLogger(__name__)

COLLAPSE_FRACTION = 1e-3
_GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass
class GapFunction:
    """Radial gap sampled on the grid nodes, piecewise-linear in p between them."""

    grid: RadialGrid
    values: np.ndarray
    T: float = 0.0
    lam: float = 0.0
    iterations: int = 0
    residual: float = float("nan")
    collapsed: bool = False
    damping: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.nodes.shape:
            raise DomainError("gap values must match the grid nodes")
        if not np.all(np.isfinite(self.values)):
            raise NumericalError("gap function has non-finite values")

    def __call__(self, p):
        return np.interp(p, self.grid.nodes, self.values)

    def dispersion(self, p):
        p = np.asarray(p, dtype=float)
        return np.sqrt((p**2 - self.grid.mu) ** 2 + self(p) ** 2)

    @property
    def at_fermi(self) -> float:
        return float(self(math.sqrt(self.grid.mu)))

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def _gap_kernel(P: PotentialSpec, grid: RadialGrid, lam: float) -> np.ndarray:
    """-lambda A_d(p_i, p_j) w_j p_j^(d-1), the linear part of the gap map."""
    return -lam * kernel_matrix(P, grid) * grid.measure(P.dimension)[None, :]


def _apply(G: np.ndarray, xi: np.ndarray, delta: np.ndarray, T: float) -> np.ndarray:
    E = np.sqrt(xi**2 + delta**2)
    if T > 0:
        with np.errstate(invalid="ignore", divide="ignore"):
            factor = np.where(E > 0, np.tanh(E / (2 * T)) / E, 1.0 / (2 * T))
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            factor = np.where(E > 0, 1.0 / E, 0.0)
    return G @ (delta * factor)


def gap_map(P: PotentialSpec, grid: RadialGrid, lam: float, T: float,
            Delta: GapFunction | np.ndarray) -> GapFunction:
    """One application of the right-hand side of the gap equation."""
    if T < 0:
        raise DomainError("temperature must be non-negative")
    vals = Delta.values if isinstance(Delta, GapFunction) else np.asarray(Delta, dtype=float)
    if vals.shape != grid.nodes.shape:
        raise DomainError("gap values must match the grid nodes")
    xi = grid.nodes**2 - grid.mu
    out = _apply(_gap_kernel(P, grid, lam), xi, vals, T)
    return GapFunction(grid, out, T=T, lam=lam)


def initial_shape(P: PotentialSpec, grid: RadialGrid) -> np.ndarray:
    """g(p)/g(sqrt mu) with g(p) = -\\int_S V^(|p - sqrt(mu) q|) dw(q) (leading-order shape)."""
    from .fermi_grid import angular_kernel
    kf = math.sqrt(grid.mu)
    g = angular_kernel(P, grid.nodes, np.full_like(grid.nodes, kf))
    g0 = float(angular_kernel(P, np.array([kf]), np.array([kf]))[0])
    if g0 == 0:
        raise DomainError("interaction vanishes on the Fermi sphere")
    return g / g0


def solve_gap(P: PotentialSpec, grid: RadialGrid, lam: float, T: float = 0.0,
              damping: float = 1.0, rtol: float = 1e-10, max_iter: int = 20000,
              xi_pred: float | None = None, initial=None) -> GapFunction:
    """Damped fixed-point iteration Delta <- (1 - theta) Delta + theta F(Delta).

    Returns the first iterate whose relative sup-norm residual is <= rtol.
    Collapse toward zero raises NumericalError at T = 0 (a positive solution
    exists there, so collapse means under-resolution); at T > 0 the collapsed
    function is returned with ``collapsed=True``.
    """
    if not 0 < damping <= 1:
        raise DomainError("damping must lie in (0, 1]")
    if T < 0:
        raise DomainError("temperature must be non-negative")
    if xi_pred is None:
        b = FermiSphereData.build(P, grid.mu).b_mu(lam)
        if not b < 0:
            raise DomainError(f"b_mu(lambda={lam}) >= 0: no gap predicted")
        xi_pred = predicted_Xi(grid.mu, P.dimension, b)
    G = _gap_kernel(P, grid, lam)
    xi = grid.nodes**2 - grid.mu
    if initial is None:
        delta = xi_pred * initial_shape(P, grid)
    else:
        delta = np.array(initial.values if isinstance(initial, GapFunction) else initial, float)
    if np.any(delta < 0):
        raise DomainError("initial gap must be non-negative")
    theta = damping
    history = []
    for it in range(1, max_iter + 1):
        new = _apply(G, xi, delta, T)
        norm = np.max(np.abs(delta))
        if norm < COLLAPSE_FRACTION * xi_pred:
            if T == 0:
                raise NumericalError(
                    f"gap iteration collapsed (|Delta|={norm:.3e}) at T=0; grid under-resolved")
            return GapFunction(grid, delta, T=T, lam=lam, iterations=it, residual=float("nan"),
                               collapsed=True, damping=theta)
        res = np.max(np.abs(delta - new)) / norm
        if res <= rtol:
            return GapFunction(grid, delta, T=T, lam=lam, iterations=it, residual=float(res),
                               damping=theta)
        history.append(res)
        # residual growth over several steps signals oscillation: halve the step
        if theta == 1.0 and len(history) > 5 and all(
                history[-i] > history[-i - 1] for i in range(1, 5)):
            log.info("gap iteration oscillating at step %d, damping 0.5", it)
            theta = 0.5
        delta = (1 - theta) * delta + theta * new
    raise ConvergenceError(f"gap iteration not converged after {max_iter} steps "
                           f"(residual {history[-1]:.3e})", residual=history[-1],
                           iterations=max_iter)


def gap_residual(P: PotentialSpec, Delta: GapFunction) -> float:
    new = gap_map(P, Delta.grid, Delta.lam, Delta.T, Delta)
    return float(np.max(np.abs(Delta.values - new.values)) / Delta.sup)


def energy_gap(Delta: GapFunction, mu: float) -> tuple[float, float]:
    """Xi = min_p E_Delta(p): node minimum refined by golden-section search on the
    piecewise-linear interpolant over the neighbouring panels."""
    grid = Delta.grid
    kf = math.sqrt(mu)
    E = lambda p: float(Delta.dispersion(p))
    nodes = grid.nodes
    En = Delta.dispersion(nodes)
    i = int(np.argmin(En))
    a = nodes[i - 1] if i > 0 else 0.0
    b = nodes[i + 1] if i + 1 < nodes.size else nodes[-1]
    candidates = [(float(En[i]), float(nodes[i])), (E(kf), kf)]
    for lo, hi in ((a, b), (min(a, kf), max(b, kf))):
        p = _golden(E, lo, hi)
        candidates.append((E(p), p))
    best = min(candidates)
    return best[0], best[1]


def _golden(f, a: float, b: float, tol: float = 1e-15, max_iter: int = 200) -> float:
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def m_Delta_direct(Delta: GapFunction, mu: float, d: int, s0: float = 0.0,
                   tol: float = 1e-12) -> float:
    """m_mu(Delta) in the s-form with x_pm(s) = Delta(sqrt(mu) sqrt(1 +- s)) / mu."""
    if np.any(Delta.values < 0):
        raise DomainError("m_Delta_direct needs Delta >= 0")
    kf = math.sqrt(mu)
    x0 = Delta(kf) / mu
    if x0 == 0 and s0 == 0:
        raise DomainError("m_Delta diverges logarithmically for Delta(sqrt mu) = 0; pass s0 > 0")
    xp = lambda s: Delta(kf * np.sqrt(1 + s)) / mu
    xm = lambda s: Delta(kf * np.sqrt(np.maximum(1 - s, 0.0))) / mu
    hp = lambda s: 0.5 / np.sqrt(s**2 + xp(s) ** 2)
    hm = lambda s: 0.5 / np.sqrt(s**2 + xm(s) ** 2)
    scale = x0 if x0 > 0 else max(s0, 1e-300)
    # the interpolant has kinks at the nodes: make them panel boundaries in s
    s_nodes = np.abs(Delta.grid.nodes**2 / mu - 1.0)
    return mu ** (d / 2 - 1) * fermi_s_integral(hp, hm, d, scale, tol, s0=s0, n=4,
                                                breaks=s_nodes)


def m_Delta_asymptotic(Delta_fermi: float, mu: float, d: int) -> float:
    """mu^(d/2-1) (ln(mu / Delta(sqrt mu)) + ln(2 c_d))."""
    from .sphere_asymptotics import C_D
    return mu ** (d / 2 - 1) * (math.log(mu / Delta_fermi) + math.log(2 * C_D[d]))


def m_Delta_radial(Delta: GapFunction, d: int) -> float:
    """Raw radial quadrature \\int_0^{sqrt(2 mu)} p^(d-1) / E_Delta(p) dp on the nodes."""
    grid = Delta.grid
    mask = grid.inside
    E = np.sqrt((grid.nodes[mask] ** 2 - grid.mu) ** 2 + Delta.values[mask] ** 2)
    return float(np.dot(grid.measure(d)[mask], 1.0 / E))


def zero_temperature_gap(P: PotentialSpec, mu: float, lam: float, rtol: float = 1e-10,
                         points_per_panel: int = 16, Lambda: float | None = None,
                         sphere: FermiSphereData | None = None, refine: bool = False,
                         max_iter: int = 20000, s_min_factor: float = 0.05) -> GapFunction:
    """``solve_gap`` at T = 0 on a grid with s_min = s_min_factor * Delta / mu, the
    scale starting at the predicted gap and tightened until
    s_min <= 2 s_min_factor Delta(sqrt mu) / mu."""
    if sphere is None:
        sphere = FermiSphereData.build(P, mu)
    b = sphere.b_mu(lam)
    if not b < 0:
        raise DomainError(f"b_mu(lambda={lam}) >= 0: no gap predicted")
    pred = predicted_Xi(mu, P.dimension, b)
    if Lambda is None:
        Lambda = P.momentum_cutoff(mu)
    scale = pred
    for _ in range(6):
        grid = build_grid(mu, Lambda, points_per_panel, min(s_min_factor * scale / mu, 0.25))
        if refine:
            grid = grid.refined()
        gap = solve_gap(P, grid, lam, 0.0, rtol=rtol, xi_pred=pred, max_iter=max_iter)
        if grid.s_min <= 2 * s_min_factor * gap.at_fermi / mu:
            gap.meta["xi_pred"] = pred
            return gap
        scale = gap.at_fermi
    raise NumericalError("could not resolve the gap with graded grids")

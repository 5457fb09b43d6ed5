"""Critical temperature from the sign of the lowest eigenvalue of K_T + lambda V,
and the Fermi-surface integral m_mu(T) in quadrature and asymptotic form."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NoTransition, NumericalError, ResolutionError
from .fermi_grid import RadialGrid, build_grid, gauss_panels, graded_bounds
from .potential import PotentialSpec
from .spectral import DispersionParams, interaction_matrix, k_T, lowest_eigenvalue
from .sphere_asymptotics import EULER_GAMMA, FermiSphereData, log_cd, predicted_Tc

log = logging.getLogger(__name__)

SEED_FACTOR = 100.0
MAX_EXPANSIONS = 30


@dataclass
class TcResult:
    Tc: float
    bracket: tuple
    eigenvalue_at_Tc: float
    grid: dict = field(default_factory=dict)
    eigensolves: int = 0


class _Criterion:
    """Lowest eigenvalue of K_T + lambda V as a function of T (interaction reused)."""

    def __init__(self, P: PotentialSpec, grid: RadialGrid, lam: float):
        self.grid = grid
        self.H = lam * np.array(interaction_matrix(P, grid))
        self.diag = np.diag_indices_from(self.H)
        self.calls = 0

    def __call__(self, T: float) -> float:
        self.calls += 1
        M = self.H.copy()
        M[self.diag] += k_T(self.grid.nodes, DispersionParams(self.grid.mu, T))
        return lowest_eigenvalue(M)


def find_Tc(P: PotentialSpec, grid: RadialGrid, lam: float, rtol: float = 1e-10,
            seed: float | None = None, check_resolution: bool = True) -> TcResult:
    """Bisect (geometrically) on the sign of the lowest eigenvalue of K_T + lambda V.

    The initial bracket is [seed/100, 100 seed] with the seed taken from the
    weak-coupling prediction; both ends expand by factors of 100 until the
    sign changes.
    """
    if lam < 0:
        raise DomainError("coupling must be non-negative")
    if not 0 < rtol < 1:
        raise DomainError("rtol must lie in (0, 1)")
    mu = grid.mu
    predicted = seed is not None
    if seed is None and lam > 0:
        b = FermiSphereData.build(P, mu).b_mu(lam)
        predicted = b < 0
        seed = predicted_Tc(mu, P.dimension, b) if predicted else None
    if seed is None or not seed > 0:
        seed = 1e-2 * mu
    crit = _Criterion(P, grid, lam)
    t_lo, t_hi = seed / SEED_FACTOR, seed * SEED_FACTOR
    e_hi = crit(t_hi)
    for _ in range(MAX_EXPANSIONS):
        if e_hi >= 0:
            break
        t_lo, t_hi = t_hi, t_hi * SEED_FACTOR
        e_hi = crit(t_hi)
    else:
        raise NumericalError("no upper temperature with K_T + lambda V >= 0 found")
    e_lo = crit(t_lo)
    floor = grid.s_min * mu
    while e_lo >= 0:
        if lam == 0 or (t_lo < floor and not predicted):
            raise NoTransition(
                f"K_T + lambda V has no negative eigenvalue down to T={t_lo:.3e} (lambda={lam})")
        if t_lo < floor:
            # a transition is predicted but lies below what the grid resolves
            raise ResolutionError(
                f"no negative eigenvalue down to T={t_lo:.3e} on a grid with s_min={grid.s_min:.3e}")
        t_hi, e_hi = t_lo, e_lo
        t_lo = t_lo / SEED_FACTOR
        e_lo = crit(t_lo)
    while (t_hi - t_lo) / t_hi > rtol:
        mid = math.sqrt(t_lo * t_hi)
        if not t_lo < mid < t_hi:
            break
        if crit(mid) < 0:
            t_lo = mid
        else:
            t_hi = mid
    if check_resolution and grid.s_min > t_lo / mu:
        raise ResolutionError(
            f"grid s_min={grid.s_min:.3e} exceeds T_low/mu={t_lo / mu:.3e}; refine the grid")
    Tc = t_hi
    # t_hi carries the non-negative sign; the bracket stays half-open (t_lo, Tc]
    return TcResult(Tc=Tc, bracket=(t_lo, t_hi), eigenvalue_at_Tc=crit(Tc),
                    grid=grid.describe(), eigensolves=crit.calls)


def auto_grid(P: PotentialSpec, mu: float, scale: float, points_per_panel: int = 16,
              Lambda: float | None = None, factor: float = 0.05) -> RadialGrid:
    """Grid whose finest panel resolves an energy ``scale`` (s_min = factor * scale / mu)."""
    if Lambda is None:
        Lambda = P.momentum_cutoff(mu)
    s_min = min(factor * scale / mu, 0.25)
    return build_grid(mu, Lambda, points_per_panel, s_min)


def critical_temperature(P: PotentialSpec, mu: float, lam: float, rtol: float = 1e-10,
                         points_per_panel: int = 16, Lambda: float | None = None,
                         sphere: FermiSphereData | None = None, refine: bool = False,
                         s_min_factor: float = 0.05) -> tuple[TcResult, RadialGrid]:
    """``find_Tc`` on a grid with s_min = s_min_factor * T / mu, T starting at the
    predicted T_c and tightened until s_min <= 2 s_min_factor T_c / mu.
    ``refine`` doubles the resolution (diagnostics)."""
    if sphere is None:
        sphere = FermiSphereData.build(P, mu)
    b = sphere.b_mu(lam)
    if not b < 0:
        raise NoTransition(f"b_mu(lambda={lam}) = {b} >= 0: no weak-coupling transition")
    seed = predicted_Tc(mu, P.dimension, b)
    scale = seed
    for _ in range(6):
        grid = auto_grid(P, mu, scale, points_per_panel, Lambda, s_min_factor)
        if refine:
            grid = grid.refined()
        res = find_Tc(P, grid, lam, rtol, seed=seed)
        if grid.s_min <= 2 * s_min_factor * res.Tc / mu:
            return res, grid
        log.info("T_c=%.3e below grid resolution, refining", res.Tc)
        scale = res.Tc
        seed = res.Tc
    raise ResolutionError("could not resolve T_c with graded grids")


# --- the integral m_mu(T) ---------------------------------------------------

def fermi_s_integral(h_plus, h_minus, d: int, scale: float, tol: float = 1e-12,
                     s0: float = 0.0, n: int = 16, n_max: int = 256,
                     breaks=None) -> float:
    """\\int_{s0}^1 [(1+s)^(d/2-1) h_plus(s) + (1-s)^(d/2-1) h_minus(s)] ds.

    ``h_pm`` may vary on the scale ``scale`` near s = 0; panels are graded
    toward s0 from that scale.  For d = 1 the (1-s)^(-1/2) endpoint is removed
    by s = 1 - t^2 on [1/2, 1].  ``breaks`` adds panel boundaries where
    h_pm has kinks.  The panel order doubles until two successive results
    agree to ``tol``.
    """
    e = d / 2 - 1
    lo = s0
    grade = graded_bounds(max(scale, 1e-300) / 8, 1.0 - lo) + lo
    grade[-1] = 1.0
    if d == 1 and lo >= 0.5:
        raise DomainError("s0 must be below 1/2")
    if breaks is not None:
        br = np.asarray(breaks, dtype=float)
        grade = np.unique(np.concatenate([grade, br[(br > lo) & (br < 1.0)]]))
    split = grade[grade < 0.5]
    head_bounds = np.append(split, 0.5) if d == 1 else grade
    tail_s = np.unique(np.concatenate([[0.5, 0.625, 0.75, 0.875, 1.0], grade[grade > 0.5]]))
    tail_t = np.sqrt(1.0 - tail_s[::-1])
    prev = None
    while n <= n_max:
        s, w = gauss_panels(head_bounds, n)
        total = np.dot(w, (1 + s) ** e * h_plus(s) + (1 - s) ** e * h_minus(s))
        if d == 1:
            # plus branch on [1/2, 1] is regular
            s2, w2 = gauss_panels(tail_s, n)
            total += np.dot(w2, (1 + s2) ** e * h_plus(s2))
            t, wt = gauss_panels(tail_t, n)
            total += np.dot(wt, 2.0 * h_minus(1 - t * t))
        if prev is not None and abs(total - prev) <= tol * abs(total):
            return float(total)
        prev = total
        n *= 2
    raise NumericalError(f"s-integral did not reach relative tolerance {tol:g}")


def m_T_direct(mu: float, T: float, d: int, quad_tol: float = 1e-12) -> float:
    """m_mu(T) = |S^{d-1}|^-1 \\int_{|p|<sqrt(2 mu)} dp / K_T(p), reduced to one s-integral."""
    if not T > 0:
        raise DomainError("m_T_direct needs T > 0")
    if not mu > 0:
        raise DomainError("mu must be positive")
    tau = T / mu
    h = lambda s: np.tanh(s / (2 * tau)) / (2 * s)
    return mu ** (d / 2 - 1) * fermi_s_integral(h, h, d, tau, quad_tol)


def m_T_asymptotic(mu: float, T: float, d: int) -> float:
    if not T > 0:
        raise DomainError("m_T_asymptotic needs T > 0")
    return mu ** (d / 2 - 1) * (math.log(mu / T) + EULER_GAMMA + math.log(2 / math.pi) + log_cd(d))


def m_T_radial(grid: RadialGrid, T: float, d: int) -> float:
    """Raw radial quadrature \\int_0^{sqrt(2 mu)} p^(d-1) / K_T(p) dp on the grid nodes."""
    mask = grid.inside
    k = k_T(grid.nodes[mask], DispersionParams(grid.mu, T))
    return float(np.dot(grid.measure(d)[mask], 1.0 / k))

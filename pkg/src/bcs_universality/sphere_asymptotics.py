"""Fermi-sphere operators V_mu, W_mu, the coupling function b_mu and the
weak-coupling predictions for T_c and the energy gap.

Both operators commute with rotations for radial potentials, so they are
diagonal in Fourier modes e^{ik theta}/sqrt(2 pi) on the circle (d = 2) and in
the even/odd basis of the two-point sphere {+1, -1} (d = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import CutoffError, DomainError, NumericalError
from .fermi_grid import gauss_panels
from .potential import PotentialSpec

EULER_GAMMA = float(np.euler_gamma)
C_D = {1: 4.0 / (1.0 + math.sqrt(2.0)), 2: 1.0}

V_MODE_TOL = 1e-12
W_MODE_TOL = 1e-10
W_TAIL_TOL = 1e-8
DEGENERACY_TOL = 1e-8
_K_MAX = 512

EVEN = np.array([1.0, 1.0]) / math.sqrt(2.0)
ODD = np.array([1.0, -1.0]) / math.sqrt(2.0)


def sphere_area(d: int) -> float:
    return {1: 2.0, 2: 2.0 * math.pi}[d]


@dataclass
class SphereOperator:
    """Rotation-diagonal representation of an operator on L^2(S^{d-1}).

    d = 1: ``matrix`` is 2x2 over the points (+1, -1).
    d = 2: ``modes[k]`` is the eigenvalue on e^{ik theta}, k = 0..K
    (modes -k share the value of +k).
    """

    dimension: int
    mu: float
    matrix: np.ndarray | None = None
    modes: np.ndarray | None = None
    kind: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return 1 if self.modes is None else len(self.modes) - 1

    def eigenvalues(self) -> np.ndarray:
        if self.dimension == 1:
            return np.linalg.eigvalsh(self.matrix)
        return np.asarray(self.modes)

    def trace(self) -> float:
        if self.dimension == 1:
            return float(np.trace(self.matrix))
        return float(self.modes[0] + 2.0 * self.modes[1:].sum())


def _trapezoid_modes(f, kmax: int, rtol: float = 1e-14, n_start: int = 64, n_max: int = 1 << 16):
    """Cosine coefficients (2 pi)^-1 \\int_0^{2pi} f(theta) cos(k theta) dtheta, k <= kmax.

    ``f`` maps an angle array (last axis) to values broadcast over leading axes.
    Periodic trapezoid via rfft; N doubles until the coefficients settle.
    """
    n = max(n_start, 2 * kmax + 2)
    prev = None
    while True:
        theta = 2.0 * math.pi * np.arange(n) / n
        c = np.fft.rfft(f(theta), axis=-1).real / n
        c = c[..., :kmax + 1]
        if prev is not None:
            scale = np.max(np.abs(c)) if c.size else 0.0
            if np.all(np.abs(c - prev) <= rtol * scale + 1e-300) or n >= n_max:
                return c
        prev = c
        n *= 2


def build_Vmu(P: PotentialSpec, mu: float, K: int | None = None) -> SphereOperator:
    if not mu > 0:
        raise DomainError("mu must be positive")
    kf = math.sqrt(mu)
    d = P.dimension
    if d == 1:
        a, b = P.vhat(0.0), P.vhat(2 * kf)
        M = np.array([[a, b], [b, a]], dtype=float) / math.sqrt(2 * math.pi)
        return SphereOperator(1, mu, matrix=M, kind="V")
    kmax = _K_MAX if K is None else K
    f = lambda th: P.vhat_fast(2 * kf * np.abs(np.sin(th / 2)))
    v = _trapezoid_modes(f, kmax)
    if K is None:
        K = _mode_cutoff(v, V_MODE_TOL)
        v = v[:K + 1]
    op = SphereOperator(2, mu, modes=np.asarray(v, dtype=float), kind="V")
    if v.size > 1:
        op.meta["near_degenerate"] = bool(abs(v[0] - v[1:].min()) < DEGENERACY_TOL)
    return op


def _mode_cutoff(vals, tol: float) -> int:
    ref = abs(vals[0])
    if ref == 0:
        return 1
    small = np.flatnonzero(np.abs(vals) < tol * ref)
    # first index from which every later mode is below the tolerance
    for k in small:
        if k >= 1 and np.all(np.abs(vals[k:]) < tol * ref):
            return int(k)
    raise CutoffError(f"mode values do not decay below {tol:g} within K={len(vals) - 1}")


def e_mu(Vop: SphereOperator) -> float:
    """Lowest eigenvalue of V_mu."""
    if Vop.dimension == 2:
        v = Vop.modes
        if v[0] != 0 and abs(v[-1]) >= V_MODE_TOL * abs(v[0]):
            raise CutoffError(f"V_mu mode cutoff K={Vop.K} not converged")
    return float(Vop.eigenvalues().min())


# --- second order operator ------------------------------------------------

def _psi_radial(P: PotentialSpec, mu: float, u, r):
    """Angular mean g(r) of |psi(sqrt(mu) r w)|^2 for d = 1 (u a 2-vector)."""
    kf = math.sqrt(mu)
    up, um = float(u[0]), float(u[1])
    c = 1.0 / math.sqrt(2 * math.pi)
    R = kf * np.asarray(r, dtype=float)
    plus = c * (P.vhat_fast(np.abs(R - kf)) * up + P.vhat_fast(R + kf) * um)
    minus = c * (P.vhat_fast(R + kf) * up + P.vhat_fast(np.abs(R - kf)) * um)
    return 0.5 * (plus**2 + minus**2)


def _mode_profiles(P: PotentialSpec, mu: float, r, kmax: int):
    """g_k(r) = a_k(sqrt(mu) r)^2 / (2 pi) for k = 0..kmax (d = 2), shape (len(r), kmax+1)."""
    kf = math.sqrt(mu)
    R = kf * np.asarray(r, dtype=float)[:, None]

    def f(th):
        return P.vhat_fast(np.sqrt(np.maximum(R**2 + mu - 2 * R * kf * np.cos(th), 0.0)))

    a = _trapezoid_modes(f, kmax)
    return a**2 / (2 * math.pi)


def _w_panels(P: PotentialSpec, mu: float, R_W: float, n: int = 24):
    """Panels in r = |p| / sqrt(mu): graded toward 1 from both sides, break at
    sqrt(2), then uniform up to R_W."""
    h = min(0.25, 0.5 / (P.length_scale * math.sqrt(mu)))
    off = 1e-4 * 2.0 ** np.arange(0, 13)
    lower = np.concatenate([[0.0], 1 - off[off <= 0.5], [1.0]])
    upper = np.concatenate([[1.0], 1 + off[1 + off < math.sqrt(2) - 1e-3], [math.sqrt(2)]])
    k = max(1, math.ceil((R_W - math.sqrt(2)) / h))
    outer = np.linspace(math.sqrt(2), R_W, k + 1)
    inner = np.unique(np.concatenate([lower, upper]))
    xi, wi = gauss_panels(inner, n)
    xo, wo = gauss_panels(outer, n)
    return xi, wi, xo, wo


def _w_form_values(P: PotentialSpec, mu: float, profile, R_W: float):
    """Evaluate the regularised W-form for every profile column."""
    d = P.dimension
    xi, wi, xo, wo = _w_panels(P, mu, R_W)
    g_in = profile(xi)
    g_one = profile(np.array([1.0]))[0]
    g_out = profile(xo)
    jac_in = (wi * xi ** (d - 1) / np.abs(xi**2 - 1))
    jac_out = (wo * xo ** (d - 1) / (xo**2 - 1))
    inner = np.tensordot(jac_in, g_in - g_one, axes=(0, 0))
    outer = np.tensordot(jac_out, g_out, axes=(0, 0))
    scale = mu ** (d / 2 - 1) * sphere_area(d)
    return scale * (inner + outer), (xi, g_in, g_one)


def _w_form(P: PotentialSpec, mu: float, profile):
    """W-form with an outer cutoff grown until the tail estimate is negligible.

    Returns (values, tail estimate, R_W)."""
    R_W = math.sqrt(2) + 16.0 / (P.length_scale * math.sqrt(mu))
    for _ in range(8):
        vals, _ = _w_form_values(P, mu, profile, R_W)
        # tail estimate: integral of the outer integrand over [R_W, 4 R_W]
        xt, wt = gauss_panels(np.linspace(R_W, 4 * R_W, 3 * int(math.ceil(R_W)) + 2), 24)
        d = P.dimension
        tail = np.tensordot(wt * xt ** (d - 1) / (xt**2 - 1), profile(xt), axes=(0, 0))
        tail = np.abs(tail) * mu ** (d / 2 - 1) * sphere_area(d)
        if np.all(tail <= W_TAIL_TOL * np.abs(vals) + 1e-300):
            return vals, tail, R_W
        R_W *= 2
    raise CutoffError(f"W-form tail {np.max(tail):.3e} not below {W_TAIL_TOL:g} of the value")


def wmu_form(P: PotentialSpec, mu: float, u) -> float:
    """<u, W_mu u>.  ``u`` is a 2-vector (u(+1), u(-1)) for d = 1 or a mode index for d = 2."""
    return float(wmu_form_details(P, mu, u)["value"])


def wmu_form_details(P: PotentialSpec, mu: float, u) -> dict:
    if not mu > 0:
        raise DomainError("mu must be positive")
    if P.dimension == 1:
        u = np.asarray(u, dtype=float)
        if u.shape != (2,):
            raise DomainError("d = 1 sphere functions are 2-vectors")
        profile = lambda r: _psi_radial(P, mu, u, r)
        vals, tail, R_W = _w_form(P, mu, profile)
    else:
        k = int(u)
        if k < 0:
            raise DomainError("mode index must be >= 0")
        profile = lambda r: _mode_profiles(P, mu, r, k)[:, k]
        vals, tail, R_W = _w_form(P, mu, profile)
    return {"value": float(vals), "tail": float(tail), "R_W": R_W}


def integrand_near_fermi(P: PotentialSpec, mu: float, u, offsets) -> np.ndarray:
    """(g(r) - g(1)) / |r^2 - 1| at r = 1 +- offsets (boundedness diagnostic)."""
    r = np.concatenate([1 - np.asarray(offsets), 1 + np.asarray(offsets)])
    if P.dimension == 1:
        g = _psi_radial(P, mu, np.asarray(u, float), r)
        g1 = _psi_radial(P, mu, np.asarray(u, float), np.array([1.0]))[0]
    else:
        k = int(u)
        g = _mode_profiles(P, mu, r, k)[:, k]
        g1 = _mode_profiles(P, mu, np.array([1.0]), k)[0, k]
    return (g - g1) / np.abs(r**2 - 1)


def build_Wmu(P: PotentialSpec, mu: float, K: int | None = None) -> SphereOperator:
    if not mu > 0:
        raise DomainError("mu must be positive")
    if P.dimension == 1:
        we = wmu_form_details(P, mu, EVEN)
        wo = wmu_form_details(P, mu, ODD)
        M = we["value"] * np.outer(EVEN, EVEN) + wo["value"] * np.outer(ODD, ODD)
        return SphereOperator(1, mu, matrix=M, kind="W",
                              meta={"w_even": we["value"], "w_odd": wo["value"],
                                    "tail": max(we["tail"], wo["tail"])})
    kmax = 64 if K is None else K
    while True:
        profile = lambda r: _mode_profiles(P, mu, r, kmax)
        w, tail, R_W = _w_form(P, mu, profile)
        if K is not None:
            break
        try:
            cut = _mode_cutoff(w, W_MODE_TOL)
            w = w[:cut + 1]
            break
        except CutoffError:
            if kmax >= _K_MAX:
                raise
            kmax *= 2
    if w[0] != 0 and abs(w[-1]) >= W_MODE_TOL * abs(w[0]):
        raise CutoffError(f"W_mu modes do not decay below {W_MODE_TOL:g} by K={len(w) - 1}")
    return SphereOperator(2, mu, modes=np.asarray(w, float), kind="W",
                          meta={"tail": float(np.max(tail)), "R_W": R_W})


def b_mu(Vop: SphereOperator, Wop: SphereOperator, lam: float) -> float:
    """Ground-state energy of (pi/2)(lam V_mu - lam^2 W_mu)."""
    if Vop.dimension != Wop.dimension or Vop.mu != Wop.mu:
        raise DomainError("V and W operators must share dimension and mu")
    if Vop.dimension == 1:
        B = 0.5 * math.pi * (lam * Vop.matrix - lam**2 * Wop.matrix)
        return float(np.linalg.eigvalsh(0.5 * (B + B.T)).min())
    # modes beyond either cutoff are zero to the cutoff tolerance
    v = np.zeros(max(len(Vop.modes), len(Wop.modes)))
    w = np.zeros_like(v)
    v[:len(Vop.modes)] = Vop.modes
    w[:len(Wop.modes)] = Wop.modes
    return float(0.5 * math.pi * np.min(lam * v - lam**2 * w))


def b_mu_argmin(Vop: SphereOperator, Wop: SphereOperator, lam: float) -> int:
    """Index of the minimising mode (d = 2) or 0/1 for even/odd (d = 1)."""
    if Vop.dimension == 1:
        B = lam * Vop.matrix - lam**2 * Wop.matrix
        return int(np.argmin([EVEN @ B @ EVEN, ODD @ B @ ODD]))
    n = min(len(Vop.modes), len(Wop.modes))
    return int(np.argmin(lam * Vop.modes[:n] - lam**2 * Wop.modes[:n]))


# --- constants and predictions --------------------------------------------

def _log_cd_quadrature(d: int) -> float:
    e = d / 2 - 1
    # split at 1/2; s = 1 - t^2 removes the (1 - s)^(-1/2) endpoint singularity
    f = lambda s: ((1 - s) ** e + (1 + s) ** e - 2) / (2 * s)
    head, _ = integrate.quad(f, 0.0, 0.5, epsabs=0, epsrel=1e-13, limit=200)
    g = lambda t: 2 * t * f(1 - t * t)
    tail, _ = integrate.quad(g, 0.0, math.sqrt(0.5), epsabs=0, epsrel=1e-13, limit=200)
    return head + tail


def log_cd(d: int, verify: bool = True) -> float:
    """ln c_d: ln(4/(1+sqrt 2)) for d = 1 and 0 for d = 2, checked by quadrature."""
    if d not in C_D:
        raise DomainError(f"dimension must be 1 or 2, got {d}")
    closed = math.log(C_D[d])
    if verify:
        quad = _log_cd_quadrature(d)
        if abs(quad - closed) > 1e-8:
            raise NumericalError(f"ln c_{d}: quadrature {quad!r} vs closed form {closed!r}")
    return closed


def _exponent(mu: float, d: int, b: float) -> float:
    if not b < 0:
        raise DomainError(f"b must be negative for a prediction, got {b}")
    if not mu > 0:
        raise DomainError("mu must be positive")
    return math.pi / (2 * mu ** (d / 2 - 1) * b)


def predicted_Tc(mu: float, d: int, b: float) -> float:
    return 2 * C_D[d] * math.exp(EULER_GAMMA) / math.pi * mu * math.exp(_exponent(mu, d, b))


def predicted_Xi(mu: float, d: int, b: float) -> float:
    return 2 * C_D[d] * mu * math.exp(_exponent(mu, d, b))


def universal_ratio() -> float:
    return math.pi * math.exp(-EULER_GAMMA)


def tc_constant(d: int) -> float:
    """Limit -gamma - ln(2 c_d / pi) of ln(mu/T_c) + pi/(2 mu^(d/2-1) b)."""
    return -EULER_GAMMA - math.log(2 * C_D[d] / math.pi)


def xi_constant(d: int) -> float:
    """Limit -ln(2 c_d) of ln(mu/Xi) + pi/(2 mu^(d/2-1) b)."""
    return -math.log(2 * C_D[d])


@dataclass
class FermiSphereData:
    """V_mu and W_mu for one potential and chemical potential."""

    potential: PotentialSpec
    mu: float
    V: SphereOperator
    W: SphereOperator

    @classmethod
    def build(cls, P: PotentialSpec, mu: float) -> "FermiSphereData":
        return cls(P, mu, build_Vmu(P, mu), build_Wmu(P, mu))

    @property
    def e_mu(self) -> float:
        return e_mu(self.V)

    def b_mu(self, lam: float) -> float:
        return b_mu(self.V, self.W, lam)

    def summary(self, lam: float) -> dict:
        d = self.potential.dimension
        b = self.b_mu(lam)
        out = {"e_mu": self.e_mu, "b_mu": b, "universal_ratio": universal_ratio()}
        if b < 0:
            out["predicted_Tc"] = predicted_Tc(self.mu, d, b)
            out["predicted_Xi"] = predicted_Xi(self.mu, d, b)
        else:
            out["predicted_Tc"] = float("nan")
            out["predicted_Xi"] = float("nan")
        return out

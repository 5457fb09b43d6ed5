"""Radial pair potentials and their d-dimensional Fourier transforms.

Units: hbar = 1 and 2m = 1, so the kinetic energy is p^2 - mu.  The Fourier
transform uses the symmetric convention

    Vhat(p) = (2 pi)^(-d/2) \\int V(x) exp(-i p.x) dx,

and every kernel built on top of ``vhat`` carries that prefactor explicitly.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicSpline, make_interp_spline

from .errors import DomainError

VHAT_NEGLIGIBLE = 1e-14
_GL_ORDER = 16


@dataclass(frozen=True)
class PotentialSpec:
    """Radial potential in d = 1 or 2.

    ``model`` is ``"gaussian"`` (V(x) = -amplitude * exp(-x^2 / (2 width^2)),
    attractive for amplitude > 0) or ``"tabulated"`` (samples ``values`` at
    ascending ``radii``, interpolated by a cubic spline and set to zero beyond
    the last radius).
    """

    dimension: int
    model: str = "gaussian"
    amplitude: float = 1.0
    width: float = 1.0
    radii: tuple = ()
    values: tuple = ()
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise DomainError(f"dimension must be 1 or 2, got {self.dimension}")
        if self.model == "gaussian":
            if not (self.width > 0 and math.isfinite(self.width)):
                raise DomainError(f"gaussian width must be positive, got {self.width}")
            if not math.isfinite(self.amplitude):
                raise DomainError("gaussian amplitude must be finite")
        elif self.model == "tabulated":
            r = np.asarray(self.radii, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if r.ndim != 1 or r.shape != v.shape or r.size < 4:
                raise DomainError("tabulated potential needs >= 4 (radius, value) pairs")
            if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
                raise DomainError("tabulated potential contains non-finite entries")
            if r[0] < 0 or np.any(np.diff(r) <= 0):
                raise DomainError("tabulated radii must be non-negative and strictly ascending")
        else:
            raise DomainError(f"unknown potential model {self.model!r}")

    # -- real space -------------------------------------------------------

    def V(self, x):
        """Potential at distance |x| from the origin."""
        r = np.abs(np.asarray(x, dtype=float))
        if self.model == "gaussian":
            return -self.amplitude * np.exp(-(r**2) / (2 * self.width**2))
        return self._table.V(r)

    @property
    def length_scale(self) -> float:
        if self.model == "gaussian":
            return self.width
        return self._table.rms_width

    # -- momentum space ---------------------------------------------------

    def vhat(self, p):
        """Exact (quadrature-level) Fourier transform at momentum magnitude p."""
        p = np.asarray(p, dtype=float)
        if np.any(p < 0):
            raise DomainError("vhat needs p >= 0")
        if self.model == "gaussian":
            s = self.width
            return -self.amplitude * s**self.dimension * np.exp(-0.5 * s**2 * p**2)
        return self._table.transform(p, self.dimension)

    def vhat_fast(self, p):
        """Vectorised V^ for kernel assembly.

        Closed form for Gaussians.  Tabulated models go through a cached
        quintic spline of ``vhat`` (tested against the direct transform).
        """
        if self.model == "gaussian":
            return self.vhat(np.abs(p))
        p = np.abs(np.asarray(p, dtype=float))
        return self._table.fast_transform(p, self.dimension)

    def vhat_envelope(self, p):
        """Upper bound for |V^(q)| over q >= p (used for tail estimates)."""
        p = np.asarray(p, dtype=float)
        if self.model == "gaussian":
            return np.abs(self.vhat(p))
        # No analytic decay law: use the running max of |vhat| on a sample.
        grid = np.linspace(0.0, max(float(np.max(p)) * 2 + 1.0, 40.0 / self.length_scale), 4001)
        vals = np.abs(self.vhat_fast(grid))
        tailmax = np.maximum.accumulate(vals[::-1])[::-1]
        return np.interp(p, grid, tailmax)

    def momentum_cutoff(self, mu: float) -> float:
        """Cutoff Lambda = max(10 sqrt(mu), sqrt(mu) + p*) with |V^(p)| < 1e-14 past p*."""
        kf = math.sqrt(mu)
        if self.model == "gaussian":
            scale = abs(self.amplitude) * self.width**self.dimension
            if scale <= VHAT_NEGLIGIBLE:
                pstar = 0.0
            else:
                pstar = math.sqrt(2 * math.log(scale / VHAT_NEGLIGIBLE)) / self.width
        else:
            grid = np.linspace(0.0, 60.0 / self.length_scale, 6001)
            env = self.vhat_envelope(grid)
            above = np.nonzero(env >= VHAT_NEGLIGIBLE)[0]
            pstar = grid[above[-1]] if above.size else 0.0
        return max(10.0 * kf, kf + pstar)

    @cached_property
    def _table(self) -> "_Table":
        return _Table(np.asarray(self.radii, float), np.asarray(self.values, float))

    def __repr__(self):
        if self.label:
            return f"PotentialSpec({self.label!r}, d={self.dimension})"
        if self.model == "gaussian":
            return f"PotentialSpec(gaussian a={self.amplitude!r} sigma={self.width!r}, d={self.dimension})"
        return f"PotentialSpec(tabulated n={len(self.radii)}, d={self.dimension})"


def gaussian(amplitude: float = 1.0, width: float = 1.0, dimension: int = 1) -> PotentialSpec:
    return PotentialSpec(dimension=dimension, model="gaussian",
                         amplitude=float(amplitude), width=float(width))


def tabulated(radii, values, dimension: int = 1, label: str = "") -> PotentialSpec:
    return PotentialSpec(dimension=dimension, model="tabulated",
                         radii=tuple(float(r) for r in radii),
                         values=tuple(float(v) for v in values), label=label)


def read_table(path, dimension: int = 1) -> PotentialSpec:
    """Read a two-column (radius, value) text file; '#' starts a comment."""
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise DomainError(f"cannot read potential table {path}: {exc}") from None
    if data.shape[1] != 2:
        raise DomainError(f"potential table {path} must have exactly two columns")
    return tabulated(data[:, 0], data[:, 1], dimension, label=str(path))


_DESCRIPTOR = re.compile(r"^gaussian:(.*)$")


def parse_descriptor(text: str, dimension: int) -> PotentialSpec:
    """Parse ``gaussian:a=<v>,sigma=<v>`` or ``table:<path>``."""
    text = text.strip()
    if text.startswith("table:"):
        path = text[len("table:"):]
        if not path:
            raise DomainError("table descriptor needs a path")
        return read_table(Path(path), dimension)
    m = _DESCRIPTOR.match(text)
    if not m:
        raise DomainError(f"malformed potential descriptor {text!r}")
    params = {"a": 1.0, "sigma": 1.0}
    body = m.group(1).strip()
    if body:
        for item in body.split(","):
            key, sep, val = item.partition("=")
            key = key.strip()
            if not sep or key not in params:
                raise DomainError(f"malformed potential descriptor {text!r}")
            try:
                params[key] = float(val)
            except ValueError:
                raise DomainError(f"malformed potential descriptor {text!r}") from None
    return gaussian(params["a"], params["sigma"], dimension)


class _Table:
    """Spline representation of a tabulated radial potential."""

    def __init__(self, radii: np.ndarray, values: np.ndarray):
        self.radii = radii
        self.values = values
        # Smooth radial functions have zero slope at the origin.
        bc_left = (1, 0.0) if radii[0] == 0.0 else "not-a-knot"
        self.spline = CubicSpline(radii, values, bc_type=(bc_left, "not-a-knot"))
        self.r_max = float(radii[-1])
        self._fast = {}

    def V(self, r):
        r = np.asarray(r, dtype=float)
        out = np.where(r <= self.radii[0], self.values[0], self.spline(np.clip(r, self.radii[0], self.r_max)))
        return np.where(r > self.r_max, 0.0, out)

    @cached_property
    def rms_width(self) -> float:
        nodes, weights = self.nodes(0.0)
        a = np.abs(self.V(nodes)) * weights
        total = a.sum()
        if total == 0:
            return 1.0
        return float(math.sqrt((a * nodes**2).sum() / total))

    def nodes(self, p_max: float):
        """Gauss-Legendre nodes on [0, r_max]; panels follow the table and have
        width <= pi / (2 p_max) so each panel sees under a quarter oscillation."""
        edges = self.radii if self.radii[0] == 0.0 else np.concatenate([[0.0], self.radii])
        hmax = math.pi / (2 * p_max) if p_max > 0 else np.inf
        pieces = []
        for a, b in zip(edges[:-1], edges[1:]):
            k = max(1, math.ceil((b - a) / hmax))
            pieces.append(np.linspace(a, b, k + 1))
        bounds = np.unique(np.concatenate(pieces))
        x, w = np.polynomial.legendre.leggauss(_GL_ORDER)
        half = 0.5 * np.diff(bounds)
        mid = 0.5 * (bounds[1:] + bounds[:-1])
        return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()

    def transform(self, p, d: int):
        p = np.asarray(p, dtype=float)
        flat = p.ravel()
        if flat.size == 0:
            return p.copy()
        r, w = self.nodes(float(flat.max()))
        if d == 1:
            f = w * self.V(r) * 2.0 / math.sqrt(2 * math.pi)
            kern = np.cos
        else:
            f = w * self.V(r) * r
            kern = special.j0
        out = np.empty_like(flat)
        chunk = max(1, 4_000_000 // r.size)
        for i in range(0, flat.size, chunk):
            out[i:i + chunk] = kern(np.outer(flat[i:i + chunk], r)) @ f
        return out.reshape(p.shape)

    def fast_transform(self, p, d: int):
        p_hi = float(np.max(p)) if np.size(p) else 0.0
        cached = self._fast.get(d)
        if cached is None or cached[0] < p_hi:
            p_cap = max(1.25 * p_hi, 20.0 / self.rms_width)
            # spacing resolves the cos(p r_max) oscillation of compact support
            h = min(0.25 / self.r_max, 0.01)
            grid = np.linspace(0.0, p_cap, int(math.ceil(p_cap / h)) + 1)
            spl = make_interp_spline(grid, self.transform(grid, d), k=5)
            cached = (p_cap, spl)
            self._fast[d] = cached
        return cached[1](p)


@dataclass
class AssumptionReport:
    """Outcome of ``validate``.

    ``eligible_tc`` needs only the sign conditions (vhat <= 0 sampled,
    vhat(0) < 0); ``eligible_gap`` needs every flag.
    """

    dimension: int
    vhat_nonpositive: bool
    vhat0_negative: bool
    moments_finite: bool
    lp_integrable: bool
    vhat0: float
    vhat_max_sampled: float
    p_max: float
    moments: dict

    @property
    def eligible_tc(self) -> bool:
        return self.vhat_nonpositive and self.vhat0_negative

    @property
    def eligible_gap(self) -> bool:
        return (self.vhat_nonpositive and self.vhat0_negative
                and self.moments_finite and self.lp_integrable)

    def as_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "vhat_nonpositive": self.vhat_nonpositive,
            "vhat0_negative": self.vhat0_negative,
            "moments_finite": self.moments_finite,
            "lp_integrable": self.lp_integrable,
            "vhat0": self.vhat0,
            "vhat_max_sampled": self.vhat_max_sampled,
            "p_max": self.p_max,
            **{f"moment_{k}": v for k, v in self.moments.items()},
            "eligible_tc": self.eligible_tc,
            "eligible_gap": self.eligible_gap,
        }


def _radial_integral(P: PotentialSpec, f) -> float:
    """\\int_{R^d} f(|x|) dx for a radial integrand built from |V|."""
    d = P.dimension
    measure = (lambda r: 2.0) if d == 1 else (lambda r: 2 * math.pi * r)
    if P.model == "gaussian":
        upper, points = 40.0 * P.width, None
    else:
        upper = P._table.r_max
        points = P._table.radii[:: max(1, len(P.radii) // 40)]
    val, err = integrate.quad(lambda r: measure(r) * f(r), 0.0, upper,
                              points=points, limit=500, epsabs=0.0, epsrel=1e-10)
    return float(val)


def validate(P: PotentialSpec, samples: int = 4001) -> AssumptionReport:
    """Check the sign and integrability hypotheses used by the solvers."""
    p_max = max(10.0 / P.length_scale, 10.0)
    grid = np.linspace(0.0, p_max, samples)
    vh = P.vhat(grid)
    scale = float(np.max(np.abs(vh))) if vh.size else 0.0
    # tolerate quadrature-level noise around zero
    noise = 1e-12 * max(scale, 1e-300)
    vhat0 = float(vh[0])
    nonpos = bool(np.all(vh <= noise))
    neg0 = vhat0 < -noise

    absV = lambda r: abs(float(P.V(r)))
    moments = {"L1": _radial_integral(P, absV)}
    if P.dimension == 1:
        moments["log2"] = _radial_integral(P, lambda r: absV(r) * (1 + math.log1p(r)) ** 2)
        moments["eps_half"] = _radial_integral(P, lambda r: absV(r) * r**0.5)
        lp = True
    else:
        moments["L4/3"] = _radial_integral(P, lambda r: absV(r) ** (4.0 / 3.0))
        lp = math.isfinite(moments["L4/3"])
    finite = all(math.isfinite(v) for v in moments.values())
    return AssumptionReport(
        dimension=P.dimension, vhat_nonpositive=nonpos, vhat0_negative=bool(neg0),
        moments_finite=finite, lp_integrable=bool(lp), vhat0=vhat0,
        vhat_max_sampled=float(np.max(vh)), p_max=p_max, moments=moments)


def fourier_bound(P: PotentialSpec) -> float:
    """Riemann-Lebesgue bound (2 pi)^(-d/2) \\int |V| for |V^(p)|."""
    return (2 * math.pi) ** (-P.dimension / 2) * _radial_integral(P, lambda r: abs(float(P.V(r))))

"""lambda-ladders: numerical T_c and Xi next to their weak-coupling predictions.

Each ladder point is computed independently (optionally in worker processes,
``BCS_THREADS``); output order is always the ladder order, and numbers are
written with 17 significant digits so repeated runs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .critical_temperature import critical_temperature
from .errors import BCSError, ConfigError, DomainError
from .gap_solver import energy_gap, zero_temperature_gap
from .potential import PotentialSpec, validate
from .sphere_asymptotics import (FermiSphereData, predicted_Tc, predicted_Xi, tc_constant,
                                 universal_ratio, xi_constant)

log = logging.getLogger(__name__)

COLUMNS = ("lambda", "Tc", "Xi", "Delta_fermi", "e_mu", "b_mu", "predicted_Tc",
           "predicted_Xi", "residual_Tc", "residual_Xi", "ratio", "status")
THREADS_ENV = "BCS_THREADS"
FLAG_FRACTION = 0.1


@dataclass(frozen=True)
class SweepConfig:
    potential: PotentialSpec
    ladder: tuple
    mu: float = 1.0
    Lambda: float | None = None
    points_per_panel: int = 16
    s_min_factor: float = 0.05
    tc_rtol: float = 1e-10
    gap_rtol: float = 1e-10
    refine: bool = False

    def __post_init__(self):
        ladder = tuple(float(x) for x in self.ladder)
        object.__setattr__(self, "ladder", ladder)
        if len(ladder) < 2:
            raise ConfigError("a sweep needs at least 2 ladder points")
        if any(not x > 0 for x in ladder):
            raise ConfigError("ladder couplings must be positive")
        if any(a <= b for a, b in zip(ladder, ladder[1:])):
            raise ConfigError("ladder must be strictly descending")
        if not self.mu > 0:
            raise ConfigError("mu must be positive")
        if self.points_per_panel < 4:
            raise ConfigError("points_per_panel must be >= 4")
        if not 0 < self.s_min_factor <= 1:
            raise ConfigError("s_min_factor must lie in (0, 1]")

    @property
    def dimension(self) -> int:
        return self.potential.dimension

    def refined(self) -> "SweepConfig":
        return SweepConfig(self.potential, self.ladder, self.mu, self.Lambda,
                           self.points_per_panel, self.s_min_factor, self.tc_rtol,
                           self.gap_rtol, refine=True)


@dataclass
class SweepRecord:
    lam: float
    Tc: float = float("nan")
    Xi: float = float("nan")
    Delta_fermi: float = float("nan")
    e_mu: float = float("nan")
    b_mu: float = float("nan")
    predicted_Tc: float = float("nan")
    predicted_Xi: float = float("nan")
    residual_Tc: float = float("nan")
    residual_Xi: float = float("nan")
    ratio: float = float("nan")
    status: str = "ok"
    message: str = ""
    grid: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def row(self) -> dict:
        vals = {k: getattr(self, "lam" if k == "lambda" else k) for k in COLUMNS}
        return vals


def derived_fields(mu: float, d: int, b: float, Tc: float, Xi: float) -> dict:
    """Predictions, residuals and ratio recomputed from the primary quantities."""
    out = {"predicted_Tc": predicted_Tc(mu, d, b), "predicted_Xi": predicted_Xi(mu, d, b)}
    expo = math.pi / (2 * mu ** (d / 2 - 1) * b)
    out["residual_Tc"] = math.log(mu / Tc) + expo - tc_constant(d) if Tc > 0 else float("nan")
    out["residual_Xi"] = math.log(mu / Xi) + expo - xi_constant(d) if Xi > 0 else float("nan")
    out["ratio"] = Xi / Tc if Tc > 0 else float("nan")
    return out


def run_point(config: SweepConfig, lam: float, sphere: FermiSphereData | None = None) -> SweepRecord:
    """One ladder point; numerical and domain failures are recorded in the status."""
    t0 = time.perf_counter()
    P, mu, d = config.potential, config.mu, config.dimension
    rec = SweepRecord(lam=float(lam))
    try:
        if sphere is None:
            sphere = FermiSphereData.build(P, mu)
        rec.e_mu = sphere.e_mu
        rec.b_mu = sphere.b_mu(lam)
        if not rec.b_mu < 0:
            raise DomainError(f"b_mu = {rec.b_mu} >= 0")
        tc, tgrid = critical_temperature(P, mu, lam, config.tc_rtol, config.points_per_panel,
                                         config.Lambda, sphere, config.refine, config.s_min_factor)
        gap = zero_temperature_gap(P, mu, lam, config.gap_rtol, config.points_per_panel,
                                   config.Lambda, sphere, config.refine,
                                   s_min_factor=config.s_min_factor)
        rec.Tc = tc.Tc
        rec.Xi, _ = energy_gap(gap, mu)
        rec.Delta_fermi = gap.at_fermi
        for k, v in derived_fields(mu, d, rec.b_mu, rec.Tc, rec.Xi).items():
            setattr(rec, k, v)
        rec.grid = {"tc": tgrid.describe(), "gap": gap.grid.describe(),
                    "eigensolves": tc.eigensolves, "iterations": gap.iterations}
    except BCSError as exc:
        rec.status = f"error:{type(exc).__name__}"
        rec.message = str(exc)
        log.warning("lambda=%g failed: %s", lam, exc)
    rec.wall_time = time.perf_counter() - t0
    log.info("lambda=%g Tc=%.6g Xi=%.6g status=%s (%.1fs)", lam, rec.Tc, rec.Xi, rec.status,
             rec.wall_time)
    return rec


def verify_record(rec: SweepRecord, mu: float, d: int) -> bool:
    """Recompute the derived fields from the stored inputs; exact equality required."""
    if not rec.ok:
        return True
    again = derived_fields(mu, d, rec.b_mu, rec.Tc, rec.Xi)
    same = all(getattr(rec, k) == v for k, v in again.items())
    return same and rec.Xi > 0 and rec.Tc > 0 and rec.Xi <= rec.Delta_fermi


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def run_sweep(config: SweepConfig, workers: int | None = None) -> list[SweepRecord]:
    """All ladder points, in ladder order, followed by a verification pass."""
    report = validate(config.potential)
    if not report.eligible_gap:
        raise ConfigError(f"potential fails the gap-equation assumptions: {report.as_dict()}")
    sphere = FermiSphereData.build(config.potential, config.mu)
    workers = _worker_count() if workers is None else max(1, int(workers))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(config.ladder))) as pool:
            records = list(pool.map(run_point, [config] * len(config.ladder), config.ladder,
                                    [sphere] * len(config.ladder)))
    else:
        records = [run_point(config, lam, sphere) for lam in config.ladder]
    for rec in records:
        if not verify_record(rec, config.mu, config.dimension):
            rec.status = "error:inconsistent"
            rec.message = "verification pass did not reproduce the stored fields"
    return records


# --- output -------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for rec in records:
        w.writerow([_fmt(v) for v in rec.row().values()])
    return buf.getvalue()


def to_json(records) -> str:
    rows = []
    for rec in records:
        row = {}
        for k, v in rec.row().items():
            if isinstance(v, str):
                row[k] = v
            else:
                row[k] = float(v) if math.isfinite(v) else None
        rows.append(row)
    return json.dumps(rows, indent=2) + "\n"


def write_records(records, path, fmt: str | None = None) -> None:
    if fmt is None:
        fmt = "json" if str(path).endswith(".json") else "csv"
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown output format {fmt!r}")
    text = to_csv(records) if fmt == "csv" else to_json(records)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def plot_sweep(records, path) -> None:
    """SVG: ratio vs lambda with the pi e^-gamma line; |residuals| vs lambda (log axis)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "bcs-universality"
    ok = [r for r in records if r.ok]
    lam = np.array([r.lam for r in ok])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax1.plot(lam, [r.ratio for r in ok], "o-", label=r"$\Xi/T_c$")
    ax1.axhline(universal_ratio(), color="k", ls="--", lw=0.8, label=r"$\pi e^{-\gamma}$")
    ax1.set_xlabel(r"$\lambda$")
    ax1.legend()
    ax2.semilogx(lam, [abs(r.residual_Tc) for r in ok], "o-", label=r"$|r_{T_c}|$")
    ax2.semilogx(lam, [abs(r.residual_Xi) for r in ok], "s-", label=r"$|r_\Xi|$")
    ax2.set_xlabel(r"$\lambda$")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# --- resolution study -----------------------------------------------------------

@dataclass
class ConvergenceReport:
    lam: float
    dTc: float
    dXi: float
    flagged: bool
    reason: str = ""


def convergence_diagnostics(record: SweepRecord, refined: SweepRecord) -> ConvergenceReport:
    """Relative changes of T_c and Xi between two resolutions.  A record is
    flagged when a change exceeds 10% of the asymptotic residual it feeds."""
    if record.lam != refined.lam:
        raise DomainError(f"lambda mismatch: {record.lam} vs {refined.lam}")
    if not (record.ok and refined.ok):
        return ConvergenceReport(record.lam, float("nan"), float("nan"), True, "failed record")
    dTc = abs(refined.Tc - record.Tc) / refined.Tc
    dXi = abs(refined.Xi - record.Xi) / refined.Xi
    reasons = []
    if dTc > FLAG_FRACTION * abs(refined.residual_Tc):
        reasons.append("Tc")
    if dXi > FLAG_FRACTION * abs(refined.residual_Xi):
        reasons.append("Xi")
    return ConvergenceReport(record.lam, dTc, dXi, bool(reasons), ",".join(reasons))

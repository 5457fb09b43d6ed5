"""BCS critical temperature and energy gap for radial potentials in d = 1, 2,
with the weak-coupling asymptotics and the universal ratio Xi / T_c."""

from .errors import (BCSError, ConfigError, ConvergenceError, CutoffError, DomainError,
                     NoTransition, NumericalError, ResolutionError)
from .potential import PotentialSpec, gaussian, tabulated, read_table, parse_descriptor, validate
from .fermi_grid import RadialGrid, build_grid, angular_kernel, kernel_matrix
from .spectral import DispersionParams, k_T, assemble_KTV, lowest_eigenpair
from .critical_temperature import find_Tc, critical_temperature, m_T_direct, m_T_asymptotic
from .gap_solver import (GapFunction, gap_map, solve_gap, energy_gap, m_Delta_direct,
                         zero_temperature_gap)
from .sphere_asymptotics import (FermiSphereData, build_Vmu, build_Wmu, e_mu, b_mu, log_cd,
                                 wmu_form, predicted_Tc, predicted_Xi, universal_ratio)
from .sweep import SweepConfig, SweepRecord, run_sweep, convergence_diagnostics

__version__ = "0.1.0"

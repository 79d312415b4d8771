"""
Radial Wave Lab - Project Constants
All constant values used throughout the laboratory
"""

from enum import Enum
from typing import Dict, List, Any

# =============================================================================
# APPLICATION CONSTANTS
# =============================================================================

APP_NAME = "Radial Wave Lab"
APP_VERSION = "1.0.0"
APP_DESCRIPTION = "Energy-flux laboratory for the radial defocusing wave equation"
APP_AUTHOR = "Radial Wave Lab Team"

# =============================================================================
# MODEL CONSTANTS
# =============================================================================

P_MIN = 3.0          # inclusive
P_MAX = 5.0          # exclusive
SPATIAL_DIMENSION = 3

class ProfileKind(Enum):
    """Initial data profile families"""
    ZERO = "zero"
    GAUSSIAN_BUMP = "gaussian_bump"
    POLYNOMIAL_BUMP = "polynomial_bump"
    POWER_TAIL = "power_tail"
    CUSTOM_SAMPLES = "custom_samples"

class TraceKind(Enum):
    """Characteristic line families"""
    OUTGOING = "outgoing"    # t - r = tau
    INCOMING = "incoming"    # t + r = s

class FluxKind(Enum):
    """Energy flux notations across characteristic segments"""
    Q_MINUS_MINUS = "Q_minus_minus"   # inward energy, incoming line
    Q_PLUS_MINUS = "Q_plus_minus"     # outward energy, incoming line
    Q_MINUS_PLUS = "Q_minus_plus"     # inward energy, outgoing line
    Q_PLUS_PLUS = "Q_plus_plus"       # outward energy, outgoing line

# Flux kinds measurable on each trace kind
FLUX_KINDS_BY_TRACE = {
    TraceKind.INCOMING: (FluxKind.Q_MINUS_MINUS, FluxKind.Q_PLUS_MINUS),
    TraceKind.OUTGOING: (FluxKind.Q_MINUS_PLUS, FluxKind.Q_PLUS_PLUS),
}

class Family(Enum):
    """Energy family of a flux identity"""
    INWARD = "inward"
    OUTWARD = "outward"

class RadiationKind(Enum):
    """Radiation field kinds"""
    G_PLUS = "g_plus"      # outgoing, argument tau
    G_MINUS = "g_minus"    # incoming, argument s

class VerdictStatus(Enum):
    """Acceptance verdict outcome"""
    PASS = "pass"
    FAIL = "fail"
    FLAGGED = "flagged"    # passes but a horizon or truncation flag is raised

# =============================================================================
# PROFILE CONSTANTS
# =============================================================================

# gaussian support is cut where exp(-x^2/2) drops below ~2e-22
GAUSSIAN_SUPPORT_WIDTHS = 10.0
# power_tail cutoff is a C2 smoothstep over [r_trunc, r_trunc + CUTOFF_WIDTHS*sigma]
CUTOFF_WIDTHS = 2.0
POLYNOMIAL_BUMP_POWER = 4
# Gauss-Legendre nodes per cell for the initial velocity cell integrals
CELL_QUADRATURE_NODES = 8

# =============================================================================
# NUMERICAL TOLERANCES
# =============================================================================

BOUND_TOLERANCE = 1e-6           # pointwise bound ratios
FLUX_BOUND_TOLERANCE = 1e-6      # Q and radiation mass against E
LATTICE_TOLERANCE = 1e-9         # relative slack when snapping labels to the lattice
NOISE_FLOOR = 1e-12              # decay fits below this are "converged below noise floor"
EXACT_TRANSPORT_FLOOR = 1e-10    # linear convergence errors below this are "exact transport"
MIN_EXTRACTION_SPAN = 1.0        # minimal trace length for g extraction (time units)
DENSITY_FLOOR = 1e-300           # denominators in empirical constants

# Acceptance tolerances
ACCEPTANCE = {
    'linear_oracle_relative': 1e-8,
    'partition_relative': 1e-12,
    'energy_drift': 1e-3,
    'drift_reduction_factor': 3.5,
    'monotonicity_violation': 1e-3,
    'inward_energy_final_ratio': 0.05,
    'flux_identity_relative': 1e-2,
    'flux_identity_order': 1.8,
    'bookkeeping_relative': 1e-2,
    'morawetz_relative': 1e-3,
    'morawetz_identity_relative': 1e-2,
    'distribution_relative': 1e-2,
    'radiation_mass_relative': 1e-6,
    'radiation_ratio_min': 0.95,
    'decay_exponent_slack': 0.1,
    'exterior_final_ratio': 0.05,
    'weighted_energy_relative': 1e-3,
    'change_of_variables_relative': 1e-6,
    'interpolation_stability_factor': 2.0,
    'convergence_order': 1.9,
}

# =============================================================================
# STANDARD SCENARIO
# =============================================================================

STANDARD_SCENARIO: Dict[str, Any] = {
    'params': {'p': 3.0, 'linear': False},
    'grid': {'dr': 2.0 ** -8, 'r_max': 64.0, 't_end': 40.0},
    'profile': {'kind': 'gaussian_bump', 'amplitude': 1.0, 'center': 5.0, 'width': 1.0},
}

STANDARD_MORAWETZ_RADII: List[float] = [5.0, 10.0, 20.0]
STANDARD_THEOREM2 = {'kappa': 0.6, 'beta': 0.45, 'radii': [10.0, 20.0, 40.0]}
STANDARD_EXTERIOR_TIMES: List[float] = [10.0, 20.0, 40.0]
STANDARD_WEIGHTED_TIMES: List[float] = [0.0, 5.0, 10.0]

# =============================================================================
# OUTPUT CONTRACTS
# =============================================================================

SNAPSHOT_COLUMNS = ["t", "r", "w", "phi", "psi"]
ORIGIN_COLUMNS = ["t", "u0_est", "u0_est_richardson"]
G_PROFILE_COLUMNS = ["label", "g", "error_estimate"]
ENERGY_SERIES_COLUMNS = ["t", "E", "E_minus", "E_plus", "potential"]
FLUX_RESIDUAL_COLUMNS = ["region", "family", "dr", "residual", "relative_residual", "order"]
MORAWETZ_COLUMNS = ["R", "E", "sum", "defect", "boundary_tail", "identity_residual", "boundary_terms", "distribution_lhs", "distribution_rhs"]
CONVERGENCE_COLUMNS = ["dr", "error", "order", "drift", "drift_order"]

SNAPSHOT_FILE = "snapshots.csv"
ORIGIN_FILE = "origin_series.csv"
ENERGY_FILE = "energy_series.csv"
G_PROFILE_FILE = "g_profile.csv"
FLUX_RESIDUAL_FILE = "flux_residuals.csv"
MORAWETZ_FILE = "morawetz.csv"
CONVERGENCE_FILE = "convergence.csv"
REPORT_FILE = "report.json"

OUTPUT_FORMATS = ("csv", "json")

# =============================================================================
# EXIT CODES
# =============================================================================

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERDICT_FAILURE = 2

# =============================================================================
# ENVIRONMENT KEYS
# =============================================================================

ENV_PREFIX = "RWL_"

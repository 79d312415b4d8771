"""
Radial Wave Lab - Radial Core
Critical exponents, the reduced nonlinearity, initial data and pointwise bounds
"""

import math
from typing import Tuple, Union

import numpy as np
from scipy import integrate, interpolate
from loguru import logger

from constants import (
    ProfileKind, P_MIN, P_MAX, GAUSSIAN_SUPPORT_WIDTHS, CUTOFF_WIDTHS,
    POLYNOMIAL_BUMP_POWER, BOUND_TOLERANCE, CELL_QUADRATURE_NODES,
)
from utils.data_models import (
    ModelParams, CriticalExponents, GridSpec, RadialProfile, FieldState, PointwiseBoundReport,
)
from utils.error_handlers import DomainError, ConfigurationError, InconsistencyError

ArrayLike = Union[float, np.ndarray]


def critical_exponents(params: ModelParams) -> CriticalExponents:
    """
    Closed-form exponents attached to p

    Args:
        params: Model parameters

    Returns:
        CriticalExponents: s_p = 3/2 - 2/(p-1), beta0 = 2(p-2)/(p+1), kappa0 = 1 - beta0

    Raises:
        DomainError: If p is outside [3, 5)
    """
    p = params.p
    if not (P_MIN <= p < P_MAX):
        raise DomainError(f"p={p} outside the valid interval [{P_MIN}, {P_MAX})", field="p", value=p)
    beta0 = 2.0 * (p - 2.0) / (p + 1.0)
    return CriticalExponents(
        s_p=1.5 - 2.0 / (p - 1.0),
        beta0=beta0,
        kappa0=1.0 - beta0,
    )


def nonlinearity(w_val: ArrayLike, r: ArrayLike, params: ModelParams) -> ArrayLike:
    """
    Reduced source N(w, r) = |w|^{p-1} w / r^{p-1}, continuously extended by 0 at r = 0
    """
    w_arr = np.asarray(w_val, dtype=float)
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise DomainError("nonlinearity is defined for r >= 0", field="r", value=r)
    if params.linear:
        result = np.zeros(np.broadcast(w_arr, r_arr).shape)
    else:
        with np.errstate(divide='ignore', invalid='ignore'):
            result = np.where(
                r_arr > 0,
                np.abs(w_arr) ** (params.p - 1.0) * w_arr / np.where(r_arr > 0, r_arr, 1.0) ** (params.p - 1.0),
                0.0,
            )
    return float(result) if result.ndim == 0 else result


def sharp_bound_constant(p: float) -> float:
    """Explicit constant C_p = 2^{2p/(p+3)} of the sharper pointwise bound"""
    return 2.0 ** (2.0 * p / (p + 3.0))


def power_tail_exponent(p: float, epsilon: float) -> float:
    """Decay rate q = 2(p+4)/(p+1)^2 + epsilon of the slowly decaying profile class"""
    return 2.0 * (p + 4.0) / (p + 1.0) ** 2 + epsilon


# =============================================================================
# PROFILES
# =============================================================================

def _smooth_cutoff(r: np.ndarray, start: float, width: float) -> Tuple[np.ndarray, np.ndarray]:
    """C2 cutoff equal to 1 below start and 0 beyond start + width, with its derivative"""
    x = np.clip((r - start) / width, 0.0, 1.0)
    step = x ** 3 * (10.0 - 15.0 * x + 6.0 * x ** 2)
    dstep = 30.0 * x ** 2 * (1.0 - x) ** 2 / width
    return 1.0 - step, -dstep


def profile_values(profile: RadialProfile, r: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    """
    Evaluate u and du/dr of a profile (velocity excluded)

    Args:
        profile: Profile description
        r: Radii (r >= 0)

    Returns:
        Tuple of arrays (u, u_r)
    """
    r = np.asarray(r, dtype=float)
    kind = profile.kind
    amp = profile.amplitude

    if kind == ProfileKind.ZERO:
        return np.zeros_like(r), np.zeros_like(r)

    if kind == ProfileKind.GAUSSIAN_BUMP:
        x = (r - profile.center) / profile.width
        u = amp * np.exp(-0.5 * x ** 2)
        return u, -x / profile.width * u

    if kind == ProfileKind.POLYNOMIAL_BUMP:
        x = (r - profile.center) / profile.width
        inside = np.abs(x) < 1.0
        base = np.where(inside, 1.0 - x ** 2, 0.0)
        k = POLYNOMIAL_BUMP_POWER
        u = amp * base ** k
        u_r = amp * k * base ** (k - 1) * (-2.0 * x / profile.width)
        return u, np.where(inside, u_r, 0.0)

    if kind == ProfileKind.POWER_TAIL:
        q = profile.tail_exponent
        if q is None or profile.truncation_radius is None:
            raise ConfigurationError("power_tail needs tail_exponent and truncation_radius")
        chi, dchi = _smooth_cutoff(r, profile.truncation_radius, CUTOFF_WIDTHS * profile.width)
        base = (1.0 + r ** 2) ** (-0.5 * q)
        dbase = -q * r * (1.0 + r ** 2) ** (-0.5 * q - 1.0)
        return amp * base * chi, amp * (dbase * chi + base * dchi)

    if kind == ProfileKind.CUSTOM_SAMPLES:
        radii = np.asarray(profile.sample_radii, dtype=float)
        values = np.asarray(profile.sample_values, dtype=float)
        spline = interpolate.CubicSpline(radii, values)
        inside = (r >= radii[0]) & (r <= radii[-1])
        u = np.where(inside, spline(r), 0.0)
        u_r = np.where(inside, spline(r, 1), 0.0)
        return u, u_r

    raise ConfigurationError(f"unknown profile kind {kind}", field="kind", value=kind)


def support_radius(profile: RadialProfile) -> float:
    """Radius beyond which the data (displacement and velocity) vanish"""
    kind = profile.kind
    if profile.is_zero:
        own = 0.0
    elif kind == ProfileKind.GAUSSIAN_BUMP:
        own = profile.center + GAUSSIAN_SUPPORT_WIDTHS * profile.width
    elif kind == ProfileKind.POLYNOMIAL_BUMP:
        own = profile.center + profile.width
    elif kind == ProfileKind.POWER_TAIL:
        own = profile.truncation_radius + CUTOFF_WIDTHS * profile.width
    elif kind == ProfileKind.CUSTOM_SAMPLES:
        own = float(np.max(profile.sample_radii))
    else:
        own = 0.0
    if profile.velocity is not None:
        own = max(own, support_radius(profile.velocity))
    return own


def truncation_energy(profile: RadialProfile, params: ModelParams) -> float:
    """
    Energy of the untruncated power tail beyond the truncation radius

    Zero for every kind other than power_tail.
    """
    if profile.kind != ProfileKind.POWER_TAIL or profile.amplitude == 0.0:
        return 0.0
    q, amp = profile.tail_exponent, profile.amplitude

    def density(r: float) -> float:
        u = amp * (1.0 + r * r) ** (-0.5 * q)
        u_r = -amp * q * r * (1.0 + r * r) ** (-0.5 * q - 1.0)
        return 4.0 * math.pi * r * r * (0.5 * u_r ** 2 + abs(u) ** (params.p + 1.0) / (params.p + 1.0))

    value, _ = integrate.quad(density, profile.truncation_radius, np.inf, limit=200)
    return float(value)


def fourth_order_derivative(w: np.ndarray, h: float) -> np.ndarray:
    """
    Fourth-order central differences of an odd-at-the-origin field

    The field is extended oddly through r = 0 and by zero beyond the last node.
    """
    padded = np.concatenate([-w[2:0:-1], w, np.zeros(2)])
    return (-padded[4:] + 8.0 * padded[3:-1] - 8.0 * padded[1:-3] + padded[:-4]) / (12.0 * h)


def _reduced_data(profile: RadialProfile, r: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """w = r u and w_r for one profile"""
    u, u_r = profile_values(profile, r)
    w = r * u
    if profile.kind == ProfileKind.CUSTOM_SAMPLES:
        return w, fourth_order_derivative(w, h)
    return w, u + r * u_r


def velocity_cell_integrals(profile: RadialProfile, grid: GridSpec) -> np.ndarray:
    """int_{r_i}^{r_i+1} r u1(r) dr per cell by Gauss-Legendre; zeros without a velocity profile"""
    velocity = profile.velocity
    if velocity is None or velocity.is_zero:
        return np.zeros(grid.n_r)
    nodes, weights = np.polynomial.legendre.leggauss(CELL_QUADRATURE_NODES)
    h = grid.dr
    left = grid.radii[:-1]
    x = left[:, None] + 0.5 * h * (nodes[None, :] + 1.0)
    u1, _ = profile_values(velocity, x)
    return 0.5 * h * (x * u1) @ weights


def check_support_guard(profile: RadialProfile, grid: GridSpec) -> None:
    """
    Raises:
        ConfigurationError: If the data would reach the outer boundary before t_end
    """
    support = support_radius(profile)
    if support > grid.r_max - grid.t_end + 1e-12:
        raise ConfigurationError(
            f"profile support {support:g} exceeds r_max - t_end = {grid.r_max - grid.t_end:g}; "
            f"increase r_max to at least {support + grid.t_end:g}",
            field="grid.r_max", value=grid.r_max,
        )


def init_state(profile: RadialProfile, grid: GridSpec) -> FieldState:
    """
    Build the reduced field at t = 0

    Args:
        profile: Displacement profile, optionally carrying a velocity profile
        grid: Lattice description

    Returns:
        FieldState: w = r u0, phi = w_r + w_t, psi = w_r - w_t with w_t = r u1

    Raises:
        ConfigurationError: If the support guard r_max >= support + t_end fails
    """
    check_support_guard(profile, grid)
    r = grid.radii
    h = grid.dr

    w, w_r = _reduced_data(profile, r, h)
    if profile.velocity is not None:
        w_t, _ = _reduced_data(profile.velocity, r, h)
    else:
        w_t = np.zeros_like(r)

    w[0] = 0.0
    w_t[0] = 0.0
    phi = w_r + w_t
    psi = w_r - w_t
    psi[0] = phi[0]

    logger.debug(f"initial state: kind={profile.kind.value}, n_r={grid.n_r}, max|w|={np.max(np.abs(w)):.3e}")
    return FieldState(t=0.0, w=w, phi=phi, psi=psi, dr=h, w_t_cells=velocity_cell_integrals(profile, grid))


def pointwise_bound_report(state: FieldState, E: float, params: ModelParams,
                           tolerance: float = BOUND_TOLERANCE) -> PointwiseBoundReport:
    """
    Compare |w| against sqrt(E r) and C_p E^{2/(p+3)} r^{(p-1)/(p+3)}

    Raises:
        InconsistencyError: If E <= 0 for a nonzero state
    """
    p = params.p
    constant = sharp_bound_constant(p)
    magnitude = np.abs(state.w[1:])
    r = state.radii[1:]

    if not np.any(magnitude > 0):
        return PointwiseBoundReport(0.0, 0.0, constant, tolerance, False)
    if E <= 0:
        raise InconsistencyError(f"energy {E} is not positive for a nonzero state", field="E", value=E)

    energy_ratio = float(np.max(magnitude / np.sqrt(E * r)))
    power_scale = constant * E ** (2.0 / (p + 3.0)) * r ** ((p - 1.0) / (p + 3.0))
    power_ratio = float(np.max(magnitude / power_scale))
    violation = energy_ratio > 1.0 + tolerance or power_ratio > 1.0 + tolerance
    if violation:
        logger.warning(f"pointwise bound exceeded: energy_ratio={energy_ratio:.6f}, power_ratio={power_ratio:.6f}")
    return PointwiseBoundReport(energy_ratio, power_ratio, constant, tolerance, violation)

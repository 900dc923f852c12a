"""Single-energy tunnelling-time definitions.

Phase time (energy derivative of the transmission phase), the modulus
-sensitivity time identified with the Buttiker-Landauer clock and the
spin-flip Larmor component, the stationary dwell time, the two-phase route
to the same quantities, and the near-resonance Lorentzian delay.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    UNITS,
    ContractViolation,
    Grid1D,
    QuadratureError,
    UnitSystem,
    integrate,
)
from .potential import PiecewisePotential, RegionMarkers, rectangular
from .scattering import rect_amplitude, solve, two_phase


@dataclass(frozen=True)
class TimeCatalog:
    """All stationary time definitions evaluated at one energy, in fs."""

    E: float
    tau_phase: float
    tau_bl: float
    tau_dwell: float
    tau_larmor_y: float
    tau_larmor_z: float


def _markers_or_extent(pot: PiecewisePotential, markers) -> tuple:
    if markers is not None:
        return markers.x_i, markers.x_f
    return pot.x_left, pot.x_right


def phase_time(
    pot: PiecewisePotential,
    E: float,
    markers: RegionMarkers | None = None,
    rel_step: float = 1e-6,
    units: UnitSystem = UNITS,
) -> float:
    """Stationary-phase traversal time (x_f - x_i)/v + hbar d(arg A_T)/dE.

    Defaults to the barrier extent (x_i, x_f) = outermost edges, for which the
    expression equals hbar d(arg A_T + k a_total)/dE; for free space over a
    marker distance d it reduces to the ballistic d/v.  The phase derivative
    is taken on the ratio A_T(E+h)/A_T(E-h), which is an unwrapped difference
    by construction.
    """
    if not E > 0:
        raise ContractViolation("phase_time needs E > 0")
    x_i, x_f = _markers_or_extent(pot, markers)
    h = rel_step * E
    while E - h <= 0:
        h *= 0.5
    lo, hi = solve(pot, E - h, units), solve(pot, E + h, units)
    dphi = cmath.phase(hi.A_T / lo.A_T)
    if abs(dphi) > 0.5 * math.pi:
        # the two-sided step straddled a fast phase swing: refine the step
        if rel_step < 1e-13:
            raise QuadratureError(
                f"phase of A_T swings faster than any resolvable step at E={E}"
            )
        return phase_time(pot, E, markers, rel_step * 0.01, units)
    k = units.wavenumber(E)
    v = units.velocity(k)
    return float((x_f - x_i) / v + units.hbar * dphi / (2 * h))


def bl_time(
    pot: PiecewisePotential,
    E: float,
    rel_step: float = 1e-6,
    units: UnitSystem = UNITS,
) -> float:
    """Modulus-sensitivity time hbar |d ln|A_T| / dE|.

    This is the monochromatic limit of the spin-flip Larmor component and is
    identified with the Buttiker-Landauer oscillating-barrier time; it grows
    linearly with width for opaque barriers instead of saturating.  Computed
    from the log-magnitude form of the amplitude, so extreme opacities
    (kappa a > 700) need no special casing.
    """
    if not 0 < E < pot.max_height:
        raise ContractViolation("bl_time is defined in the sub-barrier regime")
    h = rel_step * E
    while E - h <= 0:
        h *= 0.5
    lo, hi = solve(pot, E - h, units), solve(pot, E + h, units)
    return float(units.hbar * abs(hi.log_abs_A_T - lo.log_abs_A_T) / (2 * h))


def dwell_time_stationary(
    pot: PiecewisePotential,
    E: float,
    markers: RegionMarkers,
    n_per_wavelength: int = 8,
    tol: float = 1e-8,
    units: UnitSystem = UNITS,
) -> float:
    """Stationary dwell time: integral of |psi_E|^2 over (x_i, x_f) divided by
    the incident flux v, for the unit-incidence scattering state.

    The x-quadrature is panelled Gauss-Legendre split at segment joints; the
    result must be stable under grid doubling to `tol` relative or a
    QuadratureError is raised.
    """
    if not E > 0:
        raise ContractViolation("dwell needs E > 0")
    sol = solve(pot, E, units)
    k = float(units.wavenumber(E))
    v = float(units.velocity(k))
    x_i, x_f = markers.x_i, markers.x_f
    if not x_f > x_i:
        raise ContractViolation("markers must span a nonempty interval")

    cuts = sorted({x_i, x_f} | {e for e in pot.edges() if x_i < e < x_f})
    wavelength = 2 * math.pi / k

    def quad(scale: int) -> float:
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            panels = max(2, int(math.ceil((hi - lo) / wavelength * scale)))
            g = Grid1D.composite_gauss(lo, hi, panels, order=12)
            total += float(integrate(np.abs(sol.psi_array(g.points)) ** 2, g))
        return total

    coarse = quad(n_per_wavelength)
    fine = quad(2 * n_per_wavelength)
    if abs(fine - coarse) > tol * max(abs(fine), 1e-300):
        raise QuadratureError(
            f"dwell quadrature not converged: {coarse!r} vs {fine!r} on doubling"
        )
    return fine / v


def rect_dwell_closed(V0: float, a: float, E: float, units: UnitSystem = UNITS) -> float:
    """Closed-form barrier-interval dwell time for a rectangular barrier.

    Uses the analytic evanescent/anti-evanescent pair (alpha, beta) of the
    matched solution; the in-barrier density integrates in closed form, which
    makes this an algebra-only route independent of both the transfer-matrix
    solve and the x-quadrature.
    """
    A_T, A_R = rect_amplitude(V0, a, E, units)
    k = float(units.wavenumber(E))
    kap = float(units.decay_constant(V0, E))
    v = float(units.velocity(k))
    alpha = 0.5 * ((1 + A_R) - 1j * k * (1 - A_R) / kap)
    beta = 0.5 * ((1 + A_R) + 1j * k * (1 - A_R) / kap)
    em = math.exp(-2 * kap * a)
    ep = -math.expm1(-2 * kap * a)  # 1 - e^{-2 kappa a}, accurate for small kap*a
    integral = (
        abs(alpha) ** 2 * ep / (2 * kap)
        + abs(beta) ** 2 * (math.exp(2 * kap * a) - 1) / (2 * kap)
        + 2 * (alpha * beta.conjugate()).real * a
    )
    return integral / v


def opaque_dwell_limits(V0: float, E: float, units: UnitSystem = UNITS) -> dict:
    """Both printed opaque-barrier dwell limits, side by side.

    `with_interference`  = hbar k / (kappa V0), the limit that keeps the
    incident/reflected interference term in the entry flux; the full
    stationary dwell approaches this one.  `separated` = 2/(kappa v), the
    limit with that term dropped (well-separated packets).  Which arrangement
    an experiment realises is a boundary-condition question, so callers get
    both numbers rather than a silent choice.
    """
    if not 0 < E < V0:
        raise ContractViolation("need 0 < E < V0")
    k = float(units.wavenumber(E))
    kap = float(units.decay_constant(V0, E))
    v = float(units.velocity(k))
    return {
        "with_interference": units.hbar * k / (kap * V0),
        "separated": 2.0 / (kap * v),
    }


def two_phase_times(
    pot: PiecewisePotential,
    E: float,
    rel_step: float = 1e-6,
    units: UnitSystem = UNITS,
):
    """(tau_phase, tau_z) from the two-phase representation.

    tau_phase = hbar d(phi2)/dE and tau_z = hbar d(phi1)/dE cot(phi1); the
    latter is evaluated as hbar d ln sin(phi1) / dE, which is the same product
    without the 0 * inf ambiguity when phi1 -> 0 deep in the opaque regime.
    Branch continuity between the two evaluation energies is enforced mod 2pi.
    """
    a = pot.extent
    h = rel_step * E
    while E - h <= 0:
        h *= 0.5
    tps = []
    for Ee in (E - h, E + h):
        sol = solve(pot, Ee, units)
        tps.append(two_phase(sol, a))
    dphi2 = tps[1].phi2 - tps[0].phi2
    dphi2 -= 2 * math.pi * round(dphi2 / (2 * math.pi))
    tau_ph = units.hbar * dphi2 / (2 * h)
    dlogsin = math.log(math.sin(tps[1].phi1)) - math.log(math.sin(tps[0].phi1))
    tau_z = units.hbar * dlogsin / (2 * h)
    return float(tau_ph), float(tau_z)


def resonance_delay(E: float, E_r: float, Gamma: float, tau_nr: float) -> float:
    """Lorentzian time delay near an isolated resonance plus the background:
    tau = hbar Gamma / ((E - E_r)^2 + Gamma^2) + tau_nr."""
    if not Gamma > 0:
        raise ContractViolation("resonance_delay needs Gamma > 0")
    return UNITS.hbar * Gamma / ((E - E_r) ** 2 + Gamma**2) + tau_nr


def time_catalog(
    V0: float,
    a: float,
    E: float,
    units: UnitSystem = UNITS,
) -> TimeCatalog:
    """Every stationary time for a rectangular barrier at one energy.

    tau_larmor_y is the closed-form dwell (independent algebra route) and is
    expected to coincide with the quadrature dwell; tau_larmor_z is by
    definition the same expression as the BL time.
    """
    if not 0 < E < V0:
        raise ContractViolation("time_catalog needs 0 < E < V0")
    pot_markers = RegionMarkers(0.0, a)
    pot = rectangular(V0, a)
    bl = bl_time(pot, E, units=units)
    return TimeCatalog(
        E=E,
        tau_phase=phase_time(pot, E, units=units),
        tau_bl=bl,
        tau_dwell=dwell_time_stationary(pot, E, pot_markers, units=units),
        tau_larmor_y=rect_dwell_closed(V0, a, E, units),
        tau_larmor_z=bl,
    )


def packet_averaged(fn, pot: PiecewisePotential, packet) -> float:
    """Average a stationary time fn(pot, E) over a spectral packet with the
    energy-measure weight v |G|^2 dE (the quasi-monochromatic bracket)."""
    vals = np.array([fn(pot, float(E)) for E in packet.E])
    return float(packet.energy_average(vals))

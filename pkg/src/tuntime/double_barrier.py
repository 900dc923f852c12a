"""Closed-form analysis of two equal rectangular barriers.

Exact coefficients come from the general transfer-matrix solve (the 8x8
matching system is never assembled densely; the product of 2x2 transfers is
the well-conditioned equivalent).  The opaque-limit closed forms follow the
published coefficient set for the second barrier; for the first barrier the
printed source collapses the region-III amplitude with the phase-referenced
total, so the region-III forms here are re-derived from the matching
conditions:

    A_T  -> e^{-chi a} e^{-ikL} A,      A_R -> -(chi + ik)/(chi - ik),
    alpha -> 2ik/(ik - chi),            beta -> (A/2) e^{-2 chi a}
                                                e^{ik(a-L)} (chi+ik)/chi (1 - e^{2ik(L-a)})

with A = 2 chi k / [2 chi k cos k(L-a) + (chi^2 - k^2) sin k(L-a)] real, and
the total transmission A_T A'_T = -e^{-2 chi a} e^{-ik(L+a)} 4ik chi/(ik-chi)^2 A
whose phase reference e^{ik(L+a)} removes all a and L dependence off
resonance: the generalized Hartman effect.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import UNITS, ContractViolation, UnitSystem
from .potential import double_rectangular
from .scattering import SolutionTable, solve
from .stationary_times import phase_time

RESONANCE_DENOMINATOR_TOL = 1e-6
OPACITY_HARD_FLOOR = 5.0
OPACITY_WARN_BELOW = 8.0


class OpacityWarning(UserWarning):
    """Opaque-limit formula used at modest chi*a."""


class ResonanceWarning(UserWarning):
    """Evaluation at or near a cavity resonance; opaque forms unreliable."""


@dataclass(frozen=True)
class DoubleBarrierSolution:
    """All eight matching coefficients for barriers (0,a) and (L, L+a).

    Region III carries A_T [e^{ikx} + A'_R e^{-ikx}]; region V carries
    A_T A'_T e^{ikx}.  A_real_factor is the cavity enhancement factor (real
    off resonance in the opaque regime); delta = arg[(ik+chi)/(ik-chi)] is the
    a- and L-independent reflection phase.
    """

    E: float
    k: float
    chi: float
    a: float
    L: float
    A_R: complex
    A_T: complex
    Ap_R: complex
    Ap_T: complex
    alpha: complex
    beta: complex
    alphap: complex
    betap: complex
    A_real_factor: complex
    delta: float
    flags: tuple = ()

    @property
    def total_transmission(self) -> complex:
        return self.A_T * self.Ap_T


def _kinematics(V0: float, a: float, L: float, E: float, units: UnitSystem):
    if not (0 < E < V0):
        raise ContractViolation("double-barrier analysis needs 0 < E < V0")
    if not (a > 0 and L >= a):
        raise ContractViolation("need a > 0 and L >= a")
    k = float(units.wavenumber(E))
    chi = float(units.decay_constant(V0, E))
    return k, chi


def resonance_denominator(V0: float, a: float, L: float, E: float,
                          units: UnitSystem = UNITS) -> float:
    """2 chi k cos k(L-a) + (chi^2 - k^2) sin k(L-a); zero at cavity resonances."""
    k, chi = _kinematics(V0, a, L, E, units)
    g = L - a
    return 2 * chi * k * math.cos(k * g) + (chi**2 - k**2) * math.sin(k * g)


def cavity_factor(V0: float, a: float, L: float, E: float,
                  units: UnitSystem = UNITS) -> float:
    """The real factor A = 2 chi k / resonance_denominator."""
    k, chi = _kinematics(V0, a, L, E, units)
    return 2 * chi * k / resonance_denominator(V0, a, L, E, units)


def _delta(k: float, chi: float) -> float:
    return cmath.phase((1j * k + chi) / (1j * k - chi))


def solve_exact(V0: float, a: float, L: float, E: float,
                units: UnitSystem = UNITS) -> DoubleBarrierSolution:
    """Exact coefficients for unit incidence, via the transfer-matrix solve."""
    k, chi = _kinematics(V0, a, L, E, units)
    pot = double_rectangular(V0, a, L)
    sol = solve(pot, E, units)

    if L > a:
        i_b1, i_gap, i_b2 = 1, 2, 3
    else:  # degenerate gap: regions are I, barrier, barrier', V
        i_b1, i_gap, i_b2 = 1, None, 2

    alpha, beta = sol.fwd[i_b1], sol.bwd[i_b1]
    if i_gap is not None:
        a3, b3 = sol.fwd[i_gap], sol.bwd[i_gap]
        ref3 = sol.refs[i_gap]
        A_T = a3 * cmath.exp(-1j * k * ref3)
        Ap_R = b3 * cmath.exp(1j * k * ref3) / A_T
    else:
        # no cavity: attribute the full first-barrier transmission at x=a
        A_T = complex(sol.A_T)
        Ap_R = 0.0 + 0j
    a4, b4 = sol.fwd[i_b2], sol.bwd[i_b2]
    if i_gap is not None:
        alphap, betap = a4 / A_T, b4 / A_T
        Ap_T = complex(sol.A_T) / A_T
    else:
        alphap, betap = a4, b4
        Ap_T = 1.0 + 0j

    den = resonance_denominator(V0, a, L, E, units)
    flags = []
    if abs(den) < RESONANCE_DENOMINATOR_TOL * chi * k:
        flags.append("on_resonance")
    if i_gap is not None:
        # invert A_T = e^{-chi a} e^{-ikL} A; real off resonance, opaque
        A_fac = complex(A_T) * cmath.exp(1j * k * L) * math.exp(chi * a)
    else:
        A_fac = complex(cavity_factor(V0, a, L, E, units))
    return DoubleBarrierSolution(
        E=E, k=k, chi=chi, a=a, L=L,
        A_R=complex(sol.A_R), A_T=complex(A_T), Ap_R=complex(Ap_R),
        Ap_T=complex(Ap_T), alpha=complex(alpha), beta=complex(beta),
        alphap=complex(alphap), betap=complex(betap),
        A_real_factor=A_fac, delta=_delta(k, chi), flags=tuple(flags),
    )


def opaque_coefficients(V0: float, a: float, L: float, E: float,
                        units: UnitSystem = UNITS) -> DoubleBarrierSolution:
    """Opaque-limit (chi a -> infinity) closed-form coefficient set."""
    k, chi = _kinematics(V0, a, L, E, units)
    if chi * a < OPACITY_HARD_FLOOR:
        raise ContractViolation(f"opaque forms need chi*a >= {OPACITY_HARD_FLOOR}")
    flags = []
    if chi * a < OPACITY_WARN_BELOW:
        warnings.warn(f"chi*a = {chi*a:.2f} below {OPACITY_WARN_BELOW}; "
                      "opaque-form error ~ e^(-2 chi a) is not negligible",
                      OpacityWarning, stacklevel=2)
        flags.append("opaque_warning")
    ik = 1j * k
    g = L - a
    den = resonance_denominator(V0, a, L, E, units)
    if abs(den) < RESONANCE_DENOMINATOR_TOL * chi * k:
        warnings.warn("on a cavity resonance; the real factor A is unreliable",
                      ResonanceWarning, stacklevel=2)
        flags.append("on_resonance")
    A = 2 * chi * k / den
    alphap = cmath.exp(1j * k * L) * 2 * ik / (ik - chi)
    betap = cmath.exp(1j * k * L - 2 * chi * a) * (-2 * ik * (ik + chi)) / (ik - chi) ** 2
    Ap_R = cmath.exp(2j * k * L) * (ik + chi) / (ik - chi)
    Ap_T = cmath.exp(-chi * a) * cmath.exp(-1j * k * a) * (-4 * ik * chi) / (ik - chi) ** 2
    A_T = math.exp(-chi * a) * cmath.exp(-1j * k * L) * A
    A_R = -(chi + ik) / (chi - ik)
    alpha = 2 * ik / (ik - chi)
    beta = (0.5 * A * math.exp(-2 * chi * a) * cmath.exp(1j * k * (a - L))
            * (chi + ik) / chi * (1 - cmath.exp(2j * k * g)))
    return DoubleBarrierSolution(
        E=E, k=k, chi=chi, a=a, L=L,
        A_R=A_R, A_T=A_T, Ap_R=Ap_R, Ap_T=Ap_T,
        alpha=alpha, beta=beta, alphap=alphap, betap=betap,
        A_real_factor=complex(A), delta=_delta(k, chi), flags=tuple(flags),
    )


def phase_time_total(V0: float, a: float, L: float, E: float,
                     rel_step: float = 1e-6, units: UnitSystem = UNITS) -> float:
    """Total two-barrier phase time hbar d arg[A_T A'_T e^{ik(L+a)}] / dE.

    Evaluated on the exact product amplitude; off resonance and opaque it is
    independent of both a and L and equals the single-barrier Hartman plateau
    2/(v chi).  Near a resonance a warning is attached and the caller should
    shrink rel_step below Gamma/E to resolve the Lorentzian peak.
    """
    k, chi = _kinematics(V0, a, L, E, units)
    den = resonance_denominator(V0, a, L, E, units)
    if abs(den) < RESONANCE_DENOMINATOR_TOL * chi * k:
        warnings.warn("phase_time_total evaluated on a cavity resonance",
                      ResonanceWarning, stacklevel=2)
    return phase_time(double_rectangular(V0, a, L), E, rel_step=rel_step, units=units)


def opaque_phase_time(V0: float, E: float, rel_step: float = 1e-6,
                      units: UnitSystem = UNITS) -> float:
    """hbar d/dE arg[-4 i k chi / (ik - chi)^2]: the closed-form route to the
    generalized-Hartman plateau, independent of every geometric parameter."""
    if not 0 < E < V0:
        raise ContractViolation("need 0 < E < V0")
    h = rel_step * E

    def deltap(Ee: float) -> complex:
        k = float(units.wavenumber(Ee))
        chi = float(units.decay_constant(V0, Ee))
        ik = 1j * k
        return -4j * k * chi / (ik - chi) ** 2

    return float(units.hbar * cmath.phase(deltap(E + h) / deltap(E - h)) / (2 * h))


@dataclass(frozen=True)
class Resonance:
    """A located transmission peak: position, half-width, peak transmission."""

    E_r: float
    Gamma: float | None
    T_peak: float
    resolved: bool


def find_resonances(V0: float, a: float, L: float, E_range: tuple,
                    n_scan: int = 2001, units: UnitSystem = UNITS) -> list:
    """Locate Fabry-Perot transmission resonances of the double barrier.

    Scans log |A_T,total|^2 (whose inter-resonance dips span the whole level
    spacing, so even Gamma << scan step peaks are bracketed), refines each
    peak by golden section, then measures Gamma as the half-width of the
    transmission peak by bisection.  Peaks whose half-width falls below
    1e-12 eV are reported position-only.
    """
    lo, hi = float(E_range[0]), float(E_range[1])
    if not (0 < lo < hi < V0):
        raise ContractViolation("E_range must lie inside (0, V0)")
    pot = double_rectangular(V0, a, L)
    if L == a:
        return []

    Es = np.linspace(lo, hi, int(n_scan))
    table = SolutionTable(pot, Es, units)
    logT = 2.0 * table.log_abs_A_T

    def logT_at(E: float) -> float:
        return 2.0 * solve(pot, E, units).log_abs_A_T

    def T_at(E: float) -> float:
        return math.exp(logT_at(E))

    out = []
    for i in range(1, len(Es) - 1):
        if not (logT[i] >= logT[i - 1] and logT[i] >= logT[i + 1]):
            continue
        E_r = _golden_max(logT_at, Es[i - 1], Es[i + 1])
        T_peak = T_at(E_r)
        if T_peak <= math.exp(logT[i - 1]) * 1.0000001:
            continue  # flat plateau, not a genuine peak
        half = 0.5 * T_peak
        widths = []
        for sign in (-1.0, 1.0):
            w = _half_crossing(T_at, E_r, sign, half, hi - lo)
            if w is not None:
                widths.append(w)
        if widths:
            Gamma = float(np.mean(widths))
            resolved = Gamma >= 1e-12
            out.append(Resonance(E_r=E_r, Gamma=Gamma if resolved else None,
                                 T_peak=T_peak, resolved=resolved))
        else:
            out.append(Resonance(E_r=E_r, Gamma=None, T_peak=T_peak, resolved=False))
    return out


def _golden_max(f, lo: float, hi: float, rel_tol: float = 1e-14) -> float:
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = hi - gr * (hi - lo), lo + gr * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > rel_tol * (abs(lo) + abs(hi)):
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - gr * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + gr * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def _half_crossing(T_at, E_r: float, sign: float, half: float, span: float):
    """Distance from E_r to the half-maximum crossing on one side."""
    step = 1e-13
    while T_at(E_r + sign * step) > half:
        step *= 2.0
        if step > span:
            return None
    lo, hi = step / 2.0, step
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if T_at(E_r + sign * mid) > half:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, E_r):
            break
    return 0.5 * (lo + hi)

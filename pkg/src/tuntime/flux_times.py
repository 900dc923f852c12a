"""Flux-weighted time statistics: the time-observable route to durations.

Mean passage instants and their variances come from the sign-separated flux,

    <t_+-(x)> = integral t J_+-(x,t) dt / integral J_+-(x,t) dt,

durations are differences of such instants, and duration variances are the
SUM of the two point variances (the convention of the source formalism, not
the variance of a correlated difference).  The mean-square duration identity
<tau^2> = <tau>^2 + D tau is kept explicit on every report.

The dwell time is computed in both of its equivalent forms -- the space-time
density integral and the flux first-moment form -- and their residual is a
built-in diagnostic: the two can only drift apart through quadrature-tail
truncation, since their equality is the continuity equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    UNITS,
    ContractViolation,
    Grid1D,
    NoSuchFluxError,
    QuadratureError,
    UnitSystem,
    integrate,
)
from .potential import PiecewisePotential, RegionMarkers
from .stationary_times import phase_time
from .wavepacket import FluxSeries, Propagator, SpectralPacket, propagator

MASS_FLOOR = 1e-10        # relative weight below which a sign channel is "absent"
DWELL_FORM_TOL = 1e-3     # relative disagreement of the two dwell forms

DURATION_KINDS = (
    "transmission", "tunnelling", "penetration", "reflection",
    "dwell", "asymptotic-transmission",
)


@dataclass(frozen=True)
class TimeStatistics:
    """Mean instant, variance and standard deviation of one flux channel."""

    mean: float
    variance: float
    std_dev: float
    weight_mass: float


@dataclass(frozen=True)
class DurationReport:
    """A process duration with its variance bookkeeping and sub-means."""

    kind: str
    markers: RegionMarkers
    mean: float
    variance: float
    mean_square: float
    components: dict = field(default_factory=dict)


def mean_time(fs: FluxSeries, sign: str) -> TimeStatistics:
    """Statistics of the chosen sign channel of a flux series.

    Raises NoSuchFluxError when the channel mass is below MASS_FLOOR of the
    total |J| mass -- an absent process, as opposed to numerical underflow.
    """
    if sign not in ("+", "-"):
        raise ContractViolation("sign must be '+' or '-'")
    J = fs.J_plus if sign == "+" else -fs.J_minus
    mass = float(integrate(J, fs.t_grid))
    if not mass > MASS_FLOOR * max(fs.abs_mass, 1e-300):
        raise NoSuchFluxError(
            f"flux channel '{sign}' at x={fs.x} carries {mass:.3e} "
            f"of |J| mass {fs.abs_mass:.3e}"
        )
    ts = fs.t
    mean = float(integrate(ts * J, fs.t_grid)) / mass
    var = float(integrate((ts - mean) ** 2 * J, fs.t_grid)) / mass
    return TimeStatistics(mean=mean, variance=var, std_dev=math.sqrt(max(var, 0.0)),
                          weight_mass=mass)


def _stats(prop: Propagator, x: float, sign: str, component: str = "full",
           t_range=None) -> TimeStatistics:
    return mean_time(prop.flux_series(x, t_range=t_range, component=component), sign)


def _union_window(prop: Propagator, xs, components=("full",)) -> tuple:
    los, his = [], []
    for x in xs:
        for comp in components:
            fs = prop.flux_series(x, component=comp)
            los.append(fs.t_grid.lo)
            his.append(fs.t_grid.hi)
    return min(los), max(his)


def _validate_markers(pot: PiecewisePotential, kind: str, markers: RegionMarkers):
    if pot.is_free:
        return
    if kind in ("transmission", "asymptotic-transmission", "dwell"):
        if markers.x_i > pot.x_left or markers.x_f < pot.x_right:
            raise ContractViolation(f"{kind} markers must bracket the barrier")
    elif kind == "tunnelling":
        if markers.x_i != pot.x_left or markers.x_f != pot.x_right:
            raise ContractViolation("tunnelling markers are the barrier edges")
    elif kind == "penetration":
        if not markers.x_f < pot.x_right:
            raise ContractViolation("penetration needs x_f inside the barrier")
    elif kind == "reflection":
        if not markers.x_f < pot.x_right:
            raise ContractViolation("reflection needs x_f before the barrier end")


def duration(pot: PiecewisePotential, packet: SpectralPacket, kind: str,
             markers: RegionMarkers | None = None,
             units: UnitSystem = UNITS) -> DurationReport:
    """Process duration per the flux-instant differences.

    transmission / tunnelling / penetration:  <t_+(x_f)> - <t_+(x_i)>
    reflection:                               <t_-(x_f)> - <t_+(x_i)>
    dwell and asymptotic-transmission dispatch to their dedicated routines.
    """
    if kind not in DURATION_KINDS:
        raise ContractViolation(f"unknown duration kind {kind!r}")
    if markers is None:
        if kind in ("tunnelling", "dwell"):
            markers = RegionMarkers(pot.x_left, pot.x_right)
        else:
            raise ContractViolation(f"{kind} requires explicit markers")
    if kind == "dwell":
        return dwell(pot, packet, markers, units=units)
    if kind == "asymptotic-transmission":
        return asymptotic_transmission(pot, packet, markers, units=units)
    _validate_markers(pot, kind, markers)

    prop = propagator(pot, packet, units)
    sign_f = "-" if kind == "reflection" else "+"
    stat_f = _stats(prop, markers.x_f, sign_f)
    stat_i = _stats(prop, markers.x_i, "+")
    mean = stat_f.mean - stat_i.mean
    var = stat_f.variance + stat_i.variance
    return DurationReport(
        kind=kind, markers=markers, mean=mean, variance=var,
        mean_square=mean**2 + var,
        components={
            f"t_{sign_f}(x_f)": stat_f.mean, "t_+(x_i)": stat_i.mean,
            "D_t(x_f)": stat_f.variance, "D_t(x_i)": stat_i.variance,
        },
    )


def dwell(pot: PiecewisePotential, packet: SpectralPacket,
          markers: RegionMarkers, n_t: int = 4096,
          units: UnitSystem = UNITS) -> DurationReport:
    """Mean dwell time in (x_i, x_f), computed in both equivalent forms.

    Returns the space-time form (density integral over incident flux mass);
    the flux-moment form and their relative residual ride along in the
    components.  Disagreement beyond DWELL_FORM_TOL raises QuadratureError,
    the usual symptom being a truncated time tail.
    """
    _validate_markers(pot, "dwell", markers)
    prop = propagator(pot, packet, units)
    lo, hi = _union_window(prop, (markers.x_i, markers.x_f))
    tg = Grid1D.uniform(lo, hi, n_t)

    J_f = prop.flux(markers.x_f, tg.points)
    J_i = prop.flux(markers.x_i, tg.points)
    J_in = prop.flux(markers.x_i, tg.points, "free")
    N = float(integrate(J_in, tg))
    flux_form = (float(integrate(tg.points * J_f, tg))
                 - float(integrate(tg.points * J_i, tg))) / N

    xg = _density_grid(pot, packet, markers, units)
    rho = np.abs(prop.psi_grid(xg.points, tg.points)) ** 2
    space_form = float(integrate(integrate(rho.T, xg), tg)) / N

    resid = abs(space_form - flux_form) / max(abs(space_form), 1e-300)
    if resid > DWELL_FORM_TOL:
        raise QuadratureError(
            f"dwell forms disagree by {resid:.2e} rel "
            f"({space_form!r} vs {flux_form!r}); extend the time window"
        )

    # indirect variance via the weighted decomposition (no direct definition)
    decomp = dwell_decomposition(pot, packet, markers, units=units)
    var = decomp.components["T_E"] * decomp.components["D_tau_T"] \
        + decomp.components["R_at_xi"] * decomp.components["D_tau_R"]
    return DurationReport(
        kind="dwell", markers=markers, mean=space_form, variance=var,
        mean_square=space_form**2 + var,
        components={
            "space_time_form": space_form, "flux_moment_form": flux_form,
            "form_residual": resid, "incident_mass": N,
        },
    )


def _density_grid(pot, packet, markers, units) -> Grid1D:
    k_bar = packet.k_bar
    wavelength = math.pi / k_bar
    cuts = sorted({markers.x_i, markers.x_f}
                  | {e for e in pot.edges() if markers.x_i < e < markers.x_f})
    pts, wts = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        panels = max(2, int(math.ceil((hi - lo) / wavelength * 2)))
        g = Grid1D.composite_gauss(lo, hi, panels, order=10)
        pts.append(g.points)
        wts.append(g.weights)
    return Grid1D(np.concatenate(pts), np.concatenate(wts))


def dwell_decomposition(pot: PiecewisePotential, packet: SpectralPacket,
                        markers: RegionMarkers,
                        units: UnitSystem = UNITS) -> DurationReport:
    """Dwell time as the flux-split weighted average

        tau_Dw = <T>_E tau_T + (<R>_E + <r(x_i)>) tau_R ,

    with tau_R the round trip observed at x_i (forward-in, backward-out) and
    <r(x)> = integral (J_+ - J_in) dt / N, the interference deficit of the
    forward flux, negative near the barrier face and vanishing upstream.
    """
    _validate_markers(pot, "dwell", markers)
    prop = propagator(pot, packet, units)
    lo, hi = _union_window(prop, (markers.x_i, markers.x_f))
    tg = Grid1D.uniform(lo, hi, 4096)

    J_f = prop.flux(markers.x_f, tg.points)
    J_i = prop.flux(markers.x_i, tg.points)
    J_in = prop.flux(markers.x_i, tg.points, "free")
    N = float(integrate(J_in, tg))

    def stats(J):
        mass = float(integrate(J, tg))
        mean = float(integrate(tg.points * J, tg)) / mass
        var = float(integrate((tg.points - mean) ** 2 * J, tg)) / mass
        return mass, mean, var

    Jp_i = np.where(J_i > 0, J_i, 0.0)
    Jm_i = np.where(J_i < 0, -J_i, 0.0)
    Jp_f = np.where(J_f > 0, J_f, 0.0)
    Mp, t_plus_i, D_plus_i = stats(Jp_i)
    _, t_minus_i, D_minus_i = stats(Jm_i)
    _, t_plus_f, D_plus_f = stats(Jp_f)

    r_xi = (Mp - N) / N
    A_T = prop.table.A_T
    T_E = float(packet.energy_average(np.abs(A_T) ** 2))
    R_E = 1.0 - T_E
    tau_T = t_plus_f - t_plus_i
    tau_R = t_minus_i - t_plus_i
    dwell_flux = (float(integrate(tg.points * J_f, tg))
                  - float(integrate(tg.points * J_i, tg))) / N
    recon = T_E * tau_T + (R_E + r_xi) * tau_R
    resid = abs(dwell_flux - recon) / max(abs(dwell_flux), 1e-300)
    return DurationReport(
        kind="dwell", markers=markers, mean=dwell_flux,
        variance=T_E * (D_plus_f + D_plus_i) + (R_E + r_xi) * (D_minus_i + D_plus_i),
        mean_square=dwell_flux**2
        + T_E * (D_plus_f + D_plus_i) + (R_E + r_xi) * (D_minus_i + D_plus_i),
        components={
            "T_E": T_E, "R_E": R_E, "r_xi": r_xi, "R_at_xi": R_E + r_xi,
            "tau_T": tau_T, "tau_R": tau_R,
            "D_tau_T": D_plus_f + D_plus_i, "D_tau_R": D_minus_i + D_plus_i,
            "reconstruction": recon, "reconstruction_residual": resid,
            "incident_mass": N,
        },
    )


def interference_deficit(pot: PiecewisePotential, packet: SpectralPacket,
                         x: float, units: UnitSystem = UNITS) -> float:
    """<r(x)>: forward-flux mass at x minus the free incident mass, over N."""
    prop = propagator(pot, packet, units)
    fs = prop.flux_series(x)
    J_in = prop.flux(x, fs.t, "free")
    N = packet.incident_flux_mass()
    return (float(integrate(fs.J_plus, fs.t_grid)) - float(integrate(J_in, fs.t_grid))) / N


def asymptotic_transmission(pot: PiecewisePotential, packet: SpectralPacket,
                            markers: RegionMarkers,
                            units: UnitSystem = UNITS) -> DurationReport:
    """Asymptotic transmission duration <t(x_f)>_T - <t(x_i)>_in.

    The averages run over the transmitted-only and the freely moving incident
    packets.  The report carries the quasi-monochromatic comparands: the
    packet-averaged stationary phase time over the same markers, the
    projected duration that replaces J_+(x_i) by J_in(x_i), and the spectral
    variance formula  D ~= hbar^2 <(d|A_T|/dE)^2>_E / <|A_T|^2>_E  beside the
    flux-route variances (see notes: the spectral formula is the squared
    modulus-sensitivity time, not a quantitative surrogate for the flux
    variance of Gaussian packets).
    """
    if abs(markers.x_i) < 10.0 * max(pot.extent, 1.0 / packet.delta_k):
        raise ContractViolation(
            "asymptotic transmission needs |x_i| >= 10 max(extent, 1/delta_k)"
        )
    _validate_markers(pot, "transmission", markers)
    prop = propagator(pot, packet, units)
    stat_T = _stats(prop, markers.x_f, "+", component="transmitted")
    stat_in = _stats(prop, markers.x_i, "+", component="free")
    stat_full_f = _stats(prop, markers.x_f, "+", component="full")
    stat_in_f = _stats(prop, markers.x_f, "+", component="free")
    mean = stat_T.mean - stat_in.mean

    tau_ph = np.array([
        phase_time(pot, float(E), markers, units=units) for E in prop.table.E
    ])
    tau_ph_avg = float(packet.energy_average(tau_ph))
    projected = stat_full_f.mean - stat_in.mean

    absAT = np.abs(prop.table.A_T)
    dabs = np.gradient(absAT, prop.table.E)
    eq_var = units.hbar**2 * packet.energy_average(dabs**2) \
        / packet.energy_average(absAT**2)

    var = stat_T.variance + stat_in.variance
    return DurationReport(
        kind="asymptotic-transmission", markers=markers, mean=mean,
        variance=var, mean_square=mean**2 + var,
        components={
            "t_T(x_f)": stat_T.mean, "t_in(x_i)": stat_in.mean,
            "phase_time_avg": tau_ph_avg,
            "projected_duration": projected,
            "spectral_variance": float(eq_var),
            "D_t_T(x_f)": stat_T.variance, "D_t_in(x_i)": stat_in.variance,
            "dynamic_excess": stat_full_f.variance - stat_in_f.variance,
        },
    )


def projected_duration(pot: PiecewisePotential, packet: SpectralPacket,
                       markers: RegionMarkers,
                       units: UnitSystem = UNITS) -> float:
    """Duration under the positive-momentum projection at the entry point:
    <t_+(x_f)> - <t(x_i)>_in, i.e. the incident-only flux replaces J_+(x_i).

    For wavepackets recorded by forward-only detectors this equals the
    packet-averaged stationary phase time over the same markers.
    """
    prop = propagator(pot, packet, units)
    stat_f = _stats(prop, markers.x_f, "+")
    stat_in = _stats(prop, markers.x_i, "+", component="free")
    return stat_f.mean - stat_in.mean


@dataclass(frozen=True)
class CausalityResult:
    """Outcome of one causality predicate; margin >= 0 means pass."""

    variant: str
    passed: bool | None
    margin: float
    detail: str = ""


def causality_check(pot: PiecewisePotential, packet: SpectralPacket, x_f: float,
                    variant: str, x_i: float | None = None,
                    units: UnitSystem = UNITS) -> CausalityResult:
    """Causality predicates comparing the final flux against free propagation.

    integral:  min over t of integral_-inf^t [J_in(x_f) - J_fin,+(x_f)] dtau,
               which must stay >= 0 (the integral final flux never leads the
               integral free flux) even when the final peak arrives early.
    delay:     time-averaged forward-front delay up to the first post-peak
               envelope crossing t0; inapplicable when the attenuated final
               envelope stays entirely beneath the free one (passed=None).
    effective: t_eff(x_f) - t_eff(x_i) with t_eff = <t> +- sigma, the
               spread-widened arrival/start instants; x_i defaults to the
               barrier's left edge.
    """
    if variant not in ("integral", "delay", "effective"):
        raise ContractViolation(f"unknown causality variant {variant!r}")
    if not pot.is_free and x_f < pot.x_right and variant != "effective":
        raise ContractViolation("causality comparisons need x_f at or past the barrier")
    prop = propagator(pot, packet, units)

    if variant == "effective":
        xi = pot.x_left if x_i is None else x_i
        stat_f = _stats(prop, x_f, "+")
        stat_i = _stats(prop, xi, "+")
        margin = (stat_f.mean + stat_f.std_dev) - (stat_i.mean - stat_i.std_dev)
        return CausalityResult("effective", margin >= 0.0, margin,
                               detail=f"x_i={xi}")

    lo, hi = _union_window(prop, (x_f,), components=("full", "free"))
    tg = Grid1D.uniform(lo, hi, 8192)
    J_fin = prop.flux(x_f, tg.points)
    J_fin_p = np.where(J_fin > 0, J_fin, 0.0)
    J_in = prop.flux(x_f, tg.points, "free")
    N = float(integrate(J_in, tg))

    if variant == "integral":
        running = np.cumsum((J_in - J_fin_p) * tg.weights)
        margin = float(running.min()) / N
        return CausalityResult("integral", margin >= -1e-9, margin)

    # delay variant
    diff = J_fin_p - J_in
    scale = float(np.max(J_in))
    if float(np.max(np.abs(diff))) <= 1e-12 * scale:
        return CausalityResult("delay", True, 0.0, detail="fluxes identical")
    i_peak = int(np.argmax(J_fin_p))
    sign_change = np.nonzero(np.diff(np.sign(diff[i_peak:])) != 0)[0]
    if len(sign_change) == 0:
        return CausalityResult(
            "delay", None, math.nan,
            detail="no post-peak envelope crossing: final flux stays beneath "
                   "the free envelope; condition inapplicable",
        )
    j = i_peak + int(sign_change[0])
    t0 = _bisect_crossing(prop, x_f, tg.points[j], tg.points[j + 1])
    sel = tg.points <= t0
    w = tg.weights[sel]
    ts = tg.points[sel]
    m_fin = float(np.dot(w, ts * J_fin_p[sel])) / float(np.dot(w, J_fin_p[sel]))
    m_in = float(np.dot(w, ts * J_in[sel])) / float(np.dot(w, J_in[sel]))
    margin = m_fin - m_in
    return CausalityResult("delay", margin >= 0.0, margin, detail=f"t0={t0:.4f} fs")


def _bisect_crossing(prop: Propagator, x: float, t_lo: float, t_hi: float) -> float:
    def f(t):
        Jf = float(prop.flux(x, [t])[0])
        Ji = float(prop.flux(x, [t], "free")[0])
        return max(Jf, 0.0) - Ji

    f_lo = f(t_lo)
    for _ in range(80):
        mid = 0.5 * (t_lo + t_hi)
        if f(mid) * f_lo > 0:
            t_lo = mid
        else:
            t_hi = mid
        if t_hi - t_lo < 1e-12:
            break
    return 0.5 * (t_lo + t_hi)

"""Double-barrier coefficients, the generalized Hartman effect, resonances."""

import cmath
import math
import warnings

import numpy as np
import pytest

from tuntime.core import UNITS, ContractViolation
from tuntime.double_barrier import (
    OpacityWarning,
    cavity_factor,
    find_resonances,
    opaque_coefficients,
    opaque_phase_time,
    phase_time_total,
    resonance_denominator,
    solve_exact,
)
from tuntime.potential import double_rectangular, rectangular
from tuntime.scattering import solve
from tuntime.stationary_times import phase_time, resonance_delay

V0 = 10.0
PLATEAU = 0.13164239138  # 2/(v chi) at E = 5 eV


def test_exact_total_matches_general_solver():
    for (a, L, E) in [(5.0, 15.0, 5.0), (4.0, 9.0, 2.0), (6.0, 6.0, 7.0)]:
        sol = solve_exact(V0, a, L, E)
        ref = solve(double_rectangular(V0, a, L), E)
        assert abs(sol.total_transmission - ref.A_T) < 1e-9
        assert abs(sol.A_R - ref.A_R) < 1e-9


def test_exact_unitarity():
    sol = solve_exact(V0, 5.0, 15.0, 5.0)
    assert abs(sol.total_transmission) ** 2 + abs(sol.A_R) ** 2 == pytest.approx(
        1.0, abs=1e-9
    )


def test_degenerate_gap_equals_merged_barrier():
    sol = solve_exact(V0, 5.0, 5.0, 5.0)
    merged = solve(rectangular(V0, 10.0), 5.0)
    assert abs(sol.total_transmission - merged.A_T) < 1e-10


def test_opaque_coefficients_agree_with_exact():
    E = 5.0
    chi = float(UNITS.decay_constant(V0, E))
    a = 10.0 / chi  # chi a = 10
    L = a + 7.0
    ex = solve_exact(V0, a, L, E)
    op = opaque_coefficients(V0, a, L, E)
    for name in ("alpha", "beta", "alphap", "betap", "A_R", "Ap_R", "A_T", "Ap_T"):
        rel = abs(getattr(ex, name) - getattr(op, name)) / abs(getattr(op, name))
        assert rel < 1e-6, name
    assert abs(ex.total_transmission - op.total_transmission) / abs(
        op.total_transmission
    ) < 1e-6


def test_opaque_error_decays_like_exp_minus_2_chi_a():
    E = 5.0
    chi = float(UNITS.decay_constant(V0, E))
    errs = []
    for target in (6.0, 8.0, 10.0):
        a = target / chi
        L = a + 7.0
        ex = solve_exact(V0, a, L, E)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OpacityWarning)
            op = opaque_coefficients(V0, a, L, E)
        errs.append(
            abs(ex.total_transmission - op.total_transmission)
            / abs(op.total_transmission)
        )
    for (e1, e2) in zip(errs, errs[1:]):
        ratio = e1 / e2
        assert math.exp(2 * 2.0) / 5 < ratio < math.exp(2 * 2.0) * 5  # ~ e^{2 d(chi a)}


def test_A_is_real_in_opaque_regime():
    E = 5.0
    chi = float(UNITS.decay_constant(V0, E))
    a = 10.0 / chi
    ex = solve_exact(V0, a, a + 6.0, E)
    assert abs(ex.A_real_factor.imag) / abs(ex.A_real_factor) < 1e-8


def test_delta_closed_form_and_invariance():
    E = 5.0  # = V0/2, so k = chi and delta = arg(-i) = -pi/2
    deltas = []
    for a in (8.0, 10.0, 12.0):
        for gap in (5.0, 10.0, 20.0):
            sol = opaque_coefficients(V0, a, a + gap, E)
            deltas.append(sol.delta)
    assert max(deltas) - min(deltas) < 1e-9
    assert deltas[0] == pytest.approx(-math.pi / 2, abs=1e-12)


def test_delta_extraction_from_exact_solution():
    E = 4.0
    chi = float(UNITS.decay_constant(V0, E))
    a = 12.0 / chi
    sol = solve_exact(V0, a, a + 9.0, E)
    k = sol.k
    extracted = cmath.phase(sol.Ap_R * cmath.exp(-2j * k * sol.L))
    closed = cmath.phase((1j * k + chi) / (1j * k - chi))
    assert extracted == pytest.approx(closed, abs=1e-9)


def test_symmetric_point_trivia():
    # A at k(L-a) -> 0+ with chi = k equals 1; covered by the closed form
    E = 5.0
    a = 8.0
    assert cavity_factor(V0, a, a, E) == pytest.approx(1.0, rel=1e-12)


def test_opacity_contracts_and_warnings():
    E = 5.0
    chi = float(UNITS.decay_constant(V0, E))
    with pytest.raises(ContractViolation):
        opaque_coefficients(V0, 4.0 / chi, 10.0, E)
    with pytest.warns(OpacityWarning):
        opaque_coefficients(V0, 6.0 / chi, 12.0, E)


# ------------------------------------------------- generalized Hartman effect

def test_phase_time_total_independent_of_geometry():
    E = 5.0
    taus = [
        phase_time_total(V0, a, a + gap, E)
        for a in (8.0, 10.0, 12.0)
        for gap in (5.0, 10.0, 20.0)
    ]
    spread = (max(taus) - min(taus)) / min(taus)
    assert spread < 1e-3
    assert taus[-1] == pytest.approx(PLATEAU, rel=1e-3)


def test_phase_time_total_matches_closed_form_route():
    E = 5.0
    closed = opaque_phase_time(V0, E)
    full = phase_time_total(V0, 10.0, 20.0, E)
    assert full == pytest.approx(closed, rel=1e-6)


def test_opaque_phase_time_scale():
    # dimensional sanity at E = V0/2: positive, equals 2/(v chi)
    E = 5.0
    chi = float(UNITS.decay_constant(V0, E))
    v = float(UNITS.velocity(UNITS.wavenumber(E)))
    tau = opaque_phase_time(V0, E)
    assert tau > 0
    assert tau == pytest.approx(2.0 / (v * chi), rel=1e-9)


# ------------------------------------------------------------------ resonances

def test_find_resonances_match_denominator_roots():
    a, L = 5.0, 15.0
    res = find_resonances(V0, a, L, (0.5, 9.5))
    assert len(res) >= 3

    # independent oracle: sign-change bisection on the resonance denominator
    Es = np.linspace(0.5, 9.5, 20001)
    den = np.array([resonance_denominator(V0, a, L, float(E)) for E in Es])
    roots = []
    for i in range(len(Es) - 1):
        if den[i] * den[i + 1] < 0:
            lo, hi = float(Es[i]), float(Es[i + 1])
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                if resonance_denominator(V0, a, L, lo) * resonance_denominator(
                    V0, a, L, mid
                ) <= 0:
                    hi = mid
                else:
                    lo = mid
            roots.append(0.5 * (lo + hi))
    assert len(roots) == len(res)
    for r, root in zip(res, roots):
        width = r.Gamma if r.Gamma is not None else 1e-6
        assert abs(r.E_r - root) < max(5 * width, 1e-3)


def test_resonance_peaks_dominate_background():
    a, L = 5.0, 15.0
    res = find_resonances(V0, a, L, (0.5, 9.5))
    for r in res:
        assert r.T_peak > 0.99  # symmetric barriers transmit fully on resonance
        off = abs(solve(double_rectangular(V0, a, L), r.E_r + 50 * r.Gamma).A_T) ** 2
        assert r.T_peak > 100 * off


def test_no_resonances_without_cavity():
    assert find_resonances(V0, 5.0, 5.0, (0.5, 9.5)) == []


def test_phase_time_fits_lorentzian_near_resonance():
    a, L = 5.0, 15.0
    res = find_resonances(V0, a, L, (2.0, 6.0))
    assert res
    r = res[-1]
    pot = double_rectangular(V0, a, L)
    Es = np.linspace(r.E_r - 3 * r.Gamma, r.E_r + 3 * r.Gamma, 13)
    rel_step = r.Gamma / (200.0 * r.E_r)
    taus = np.array([phase_time(pot, float(Ee), rel_step=rel_step) for Ee in Es])
    lor = np.array([resonance_delay(float(Ee), r.E_r, r.Gamma, 0.0) for Ee in Es])
    tau_nr = float(np.mean(taus - lor))
    resid = np.max(np.abs(taus - (lor + tau_nr)) / np.abs(taus))
    assert resid < 0.05
    # and the on-resonance peak value is hbar/Gamma + background
    peak = phase_time(pot, r.E_r, rel_step=rel_step)
    assert peak == pytest.approx(UNITS.hbar / r.Gamma + tau_nr, rel=0.01)

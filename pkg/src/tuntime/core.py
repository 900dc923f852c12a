"""Shared numerical plumbing: unit system, quadrature grids, differentiation.

Internal units are eV / Angstrom / fs throughout.  The only physical inputs
are hbar, the kinetic constant hbar^2/(2 m_e), and the speed of light; every
wavenumber, velocity and time in the package derives from these three.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ContractViolation(ValueError):
    """A documented precondition was violated by the caller."""


class QuadratureError(RuntimeError):
    """A quadrature failed its convergence or tail-capture requirement."""


class BranchResolutionError(RuntimeError):
    """Phase-branch bookkeeping could not reproduce the input amplitudes."""


class NoSuchFluxError(RuntimeError):
    """The requested sign-component of the flux carries no weight.

    Raised instead of returning garbage statistics, and distinct from a mere
    numerical underflow: the check is relative to the total |J| mass.
    """


@dataclass(frozen=True)
class UnitSystem:
    """Physical constants fixing the eV / Angstrom / fs unit system.

    hbar            -- action, eV fs
    hbar2_over_2m   -- kinetic constant hbar^2/(2m), eV Angstrom^2
    c               -- vacuum light speed, Angstrom / fs
    """

    hbar: float = 0.6582119569
    hbar2_over_2m: float = 3.8099821
    c: float = 2997.92458

    def __post_init__(self):
        if not (self.hbar > 0 and self.hbar2_over_2m > 0 and self.c > 0):
            raise ContractViolation("unit constants must be strictly positive")

    @property
    def mass(self) -> float:
        """Particle mass in eV fs^2 / Angstrom^2."""
        return self.hbar**2 / (2.0 * self.hbar2_over_2m)

    def wavenumber(self, E: float):
        """k = sqrt(E / (hbar^2/2m)) for E in eV, in 1/Angstrom."""
        return np.sqrt(np.asarray(E) / self.hbar2_over_2m)

    def energy(self, k: float):
        """E = (hbar^2/2m) k^2 in eV."""
        return self.hbar2_over_2m * np.asarray(k) ** 2

    def velocity(self, k: float):
        """Group velocity hbar k / m = 2 (hbar^2/2m) k / hbar, Angstrom/fs."""
        return 2.0 * self.hbar2_over_2m * np.asarray(k) / self.hbar

    def decay_constant(self, V0: float, E: float):
        """kappa = sqrt(2m(V0-E))/hbar for E < V0, in 1/Angstrom."""
        return np.sqrt((np.asarray(V0) - np.asarray(E)) / self.hbar2_over_2m)


UNITS = UnitSystem()


@dataclass(frozen=True)
class Grid1D:
    """Quadrature rule: strictly increasing sample points with positive weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if self.points.ndim != 1 or self.points.shape != self.weights.shape:
            raise ContractViolation("points and weights must be 1-d and same length")
        if len(self.points) < 2 or np.any(np.diff(self.points) <= 0):
            raise ContractViolation("grid points must be strictly increasing")
        if np.any(self.weights <= 0):
            raise ContractViolation("all quadrature weights must be positive")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def lo(self) -> float:
        return float(self.points[0])

    @property
    def hi(self) -> float:
        return float(self.points[-1])

    @classmethod
    def gauss_legendre(cls, lo: float, hi: float, n: int) -> "Grid1D":
        if not hi > lo:
            raise ContractViolation("need hi > lo")
        x, w = np.polynomial.legendre.leggauss(int(n))
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        return cls(mid + half * x, half * w)

    @classmethod
    def composite_gauss(cls, lo: float, hi: float, panels: int, order: int = 12) -> "Grid1D":
        """Panel-wise Gauss-Legendre; robust for oscillatory integrands."""
        if not hi > lo:
            raise ContractViolation("need hi > lo")
        x, w = np.polynomial.legendre.leggauss(int(order))
        edges = np.linspace(lo, hi, int(panels) + 1)
        mids = 0.5 * (edges[1:] + edges[:-1])
        halfs = 0.5 * np.diff(edges)
        pts = (mids[:, None] + halfs[:, None] * x).ravel()
        wts = (halfs[:, None] * w).ravel()
        return cls(pts, wts)

    @classmethod
    def uniform(cls, lo: float, hi: float, n: int) -> "Grid1D":
        """Uniform grid with trapezoid weights (used for time series)."""
        if not hi > lo:
            raise ContractViolation("need hi > lo")
        pts = np.linspace(lo, hi, int(n))
        dt = pts[1] - pts[0]
        wts = np.full(int(n), dt)
        wts[0] = wts[-1] = 0.5 * dt
        return cls(pts, wts)


def integrate(values, grid: Grid1D):
    """Weighted sum  sum_i w_i f_i  over the grid; linear in the samples."""
    values = np.asarray(values)
    if values.shape[-1] != len(grid):
        raise ContractViolation(
            f"sample count {values.shape[-1]} does not match grid length {len(grid)}"
        )
    return values @ grid.weights


def ddE(f, E: float, rel_step: float = 1e-6, richardson: bool = False):
    """Central-difference derivative of f with respect to energy at E > 0.

    Step h = rel_step * E, reduced automatically if E - h would be <= 0.
    With richardson=True a second pass at h/2 removes the leading h^2 error.
    """
    if not E > 0:
        raise ContractViolation("ddE requires E > 0")
    h = rel_step * E
    while E - h <= 0.0:
        h *= 0.5

    def central(step):
        hi, lo = f(E + step), f(E - step)
        if not (np.all(np.isfinite(hi)) and np.all(np.isfinite(lo))):
            raise QuadratureError(f"non-finite function value near E={E}")
        return (hi - lo) / (2.0 * step)

    d1 = central(h)
    if not richardson:
        return d1
    d2 = central(0.5 * h)
    return (4.0 * d2 - d1) / 3.0


def phase_derivative(g, E: float, rel_step: float = 1e-6) -> float:
    """d(arg g)/dE via the phase of the ratio g(E+h)/g(E-h).

    Immune to principal-value branch cuts as long as the true phase change
    across 2h stays below pi, which a relative step of 1e-6 guarantees for
    every amplitude in this package away from resonances; callers probing
    resonances pass a smaller rel_step.
    """
    if not E > 0:
        raise ContractViolation("phase_derivative requires E > 0")
    h = rel_step * E
    while E - h <= 0.0:
        h *= 0.5
    hi, lo = g(E + h), g(E - h)
    if hi == 0 or lo == 0 or not (np.isfinite(hi) and np.isfinite(lo)):
        raise QuadratureError(f"amplitude vanished or blew up near E={E}")
    return float(np.angle(hi / lo) / (2.0 * h))


def unwrap_phase(phases) -> np.ndarray:
    """Continuity-tracked phase over an ordered parameter sweep.

    Adds +-2 pi whenever consecutive samples jump by more than pi, turning a
    principal-value arg into a smooth function suitable for differentiation.
    """
    return np.unwrap(np.asarray(phases, dtype=float))

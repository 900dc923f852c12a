"""Tunnelling-time analysis toolkit for piecewise-constant 1D potentials and
their evanescent-waveguide analogs: stationary scattering, every standard
tunnelling-time definition, flux-weighted time-observable statistics for
wavepackets, the Hartman effect and its two-barrier generalization, and the
associated causality predicates.
"""

from .core import (
    UNITS,
    BranchResolutionError,
    ContractViolation,
    Grid1D,
    NoSuchFluxError,
    QuadratureError,
    UnitSystem,
    ddE,
    integrate,
    unwrap_phase,
)
from .potential import PiecewisePotential, RegionMarkers, double_rectangular, rectangular
from .scattering import (
    ScatteringSolution,
    SolutionTable,
    TwoPhase,
    rect_amplitude,
    s_matrix,
    solve,
    two_phase,
)
from .stationary_times import (
    TimeCatalog,
    bl_time,
    dwell_time_stationary,
    opaque_dwell_limits,
    packet_averaged,
    phase_time,
    rect_dwell_closed,
    resonance_delay,
    time_catalog,
    two_phase_times,
)
from .double_barrier import (
    DoubleBarrierSolution,
    Resonance,
    cavity_factor,
    find_resonances,
    opaque_coefficients,
    opaque_phase_time,
    phase_time_total,
    resonance_denominator,
    solve_exact,
)
from .wavepacket import (
    MASSIVE,
    PHOTON,
    Dispersion,
    FluxSeries,
    Propagator,
    SpectralPacket,
    flux,
    flux_series,
    gaussian_packet,
    propagator,
    psi,
)
from .flux_times import (
    CausalityResult,
    DurationReport,
    TimeStatistics,
    asymptotic_transmission,
    causality_check,
    duration,
    dwell,
    dwell_decomposition,
    interference_deficit,
    mean_time,
    projected_duration,
)
from .emguide import (
    BarrierMap,
    PhotonTunnellingTime,
    WaveguideSpec,
    cutoff_wavelength,
    ftir_shifts,
    map_to_barrier,
    mapped_phase_time,
    photon_phase_time,
    propagation_constant,
    te_mode_fields,
)

__version__ = "0.1.0"

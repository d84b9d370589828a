"""Floquet operators, quasienergy topology, dynamical probes and
localization diagnostics for periodically driven non-Hermitian lattice
models, with a config-driven command line for parameter sweeps."""

from .errors import (
    BadInitialState,
    BaseEnergyOnSpectrum,
    ComplexGapViolation,
    DimensionMismatch,
    EPOnGBZ,
    EdgeWindowTooSmall,
    GBZIllDefined,
    GapClosure,
    GapClosureOnTorus,
    GaplessAtSample,
    GaplessAtZero,
    InvalidParams,
    NHFloqError,
    NoRootInBracket,
    NonConvergence,
    NonConvergent,
    NormCollapse,
    NotTwoPart,
    Overflow,
    OverflowRisk,
    ParseError,
    SchemaError,
    TruncationTooSmall,
    Underflow,
    UnnormalizedState,
    UnsupportedCombination,
    VanishingTexture,
    ZeroEigenvalue,
)
from .linalg import (
    SpectralDecomposition,
    eig_biorthogonal,
    matrix_exp,
    principal_quasienergy,
)
from .protocols import (
    BlochFamily,
    Boundary,
    ContinuousSampled,
    FloquetOperator,
    Frame,
    HarmonicFourier,
    Kicked,
    PiecewiseConstant,
)
from .engine import (
    EvolveResult,
    HighFreqExpansion,
    effective_hamiltonian,
    floquet_piecewise,
    floquet_split_operator,
    high_freq_effective,
    sambe_quasienergies,
    stroboscopic_evolve,
    symmetric_time_frames,
    two_part_exponents,
)
from .models import (
    BlochFamily2D,
    BuiltModel,
    ModelDescriptor,
    ModelId,
    QuasicrystalAnalytics,
    TwoLevelAnalytics,
    build,
    chain_hamiltonian,
    cubic_root,
    dimerized_dispersion,
    parameter_schema,
    quasicrystal_analytics,
    soti_x_winding,
    soti_y_family,
    two_level_analytics,
)
from .topology import (
    FluxLoopFamily,
    GapReport,
    InvariantReport,
    ModeCount,
    WindingResult,
    chern_number,
    circle_gap,
    combine_windings,
    corner_weight,
    count_boundary_modes,
    count_corner_modes,
    count_modes,
    edge_weight,
    frame_winding,
    gap_functions,
    hamiltonian_band,
    mode_profile_1d,
    mode_profile_2d,
    non_bloch_winding,
    open_bulk_winding,
    spectral_winding,
)
from .dynamics import (
    AdiabaticEvolution,
    DynamicWindingResult,
    DynamicsReport,
    MCDResult,
    WavepacketStats,
    adiabatic_evolve_first_order,
    combine_mcd,
    dynamic_winding,
    mean_chiral_displacement,
    pumped_number,
    wavepacket_stats,
)
from .localization import (
    LocalizationReport,
    ParticipationReport,
    Phase,
    classify,
    level_statistics,
    localization_report,
    participation,
    pt_indicators,
)
from .config import JobConfig, SweepAxis, TaskSpec, default_options, parse_config
from .runner import JobResult, TaskOutcome, run_job, write_output

__version__ = "0.1.0"

"""magfiber: spectral toolkit for translationally invariant magnetic fields
whose vector potential points along the symmetry axis.

The pipeline: a field profile b(r) defines the axial potential a(r); each
(magnetic quantum number m, momentum p) fiber is a half-line operator whose
discrete eigenvalues lambda_{n,m}(p) form the dispersion curves; their
derivatives are the group velocities that steer wave packets along the axis.
"""

from .errors import (
    BelowPotentialRangeError,
    EigensolverError,
    FieldDomainError,
    FormulaUnavailableError,
    GridCapWarning,
    InsufficientTableError,
    NormalizationError,
    PhaseResolutionError,
)
from .fields import (
    FieldDerivatives,
    FieldProfile,
    derived_data,
    field_strength,
    load_field_table,
    potential_a,
    power_law,
    tabulated,
    well_center,
)
from .operator import RadialGrid, TridiagonalOperator, discretize, recommend_grid
from .eigensolver import EigenPair, eigenpairs, eigenvector, lowest_eigenvalues, sturm_count
from .dispersion import (
    AsymptoticsReport,
    DispersionCurve,
    LevelThreshold,
    ThresholdReport,
    classify_left_asymptotics,
    find_local_minima,
    large_p_ratios,
    sweep,
    thresholds,
    write_curve_csv,
    write_threshold_json,
)
from .velocity import (
    SignCertificate,
    VelocityEstimate,
    estimate,
    sign_certificate,
    sufficient_monotonicity_condition,
    velocity_fd,
    velocity_fh,
    velocity_grid,
    velocity_ibp,
    write_velocity_csv,
)
from .wavepacket import (
    AsymptoticVelocityTable,
    EvolutionField,
    StationaryPhaseData,
    WavePacketSpec,
    asymptotic_velocity_check,
    build_stationary_phase,
    default_x3_grid,
    detect_intervals,
    evolve_quadrature,
    evolve_stationary_phase,
    gaussian_packet,
    packet_localization_radius,
    read_snapshot,
    write_evolution_csv,
    write_snapshot,
)

__version__ = "0.1.0"

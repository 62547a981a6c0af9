"""Decoherence of spatial coherences as Levy-process characteristic functions.

Off-diagonal position matrix elements of a translation-covariant Markovian
dynamics decay as Phi(t, s) = exp(t Psi(s)); this package builds the
characteristic exponent Psi from Levy triplets, provides the concrete
compound-Poisson / Gaussian / stable / photon-scattering models, evolves
coherences by closed form and by the jump expansion, and validates the
analytic curves against Monte Carlo sampling.
"""

__version__ = "0.1.0"

from .core import (
    AuditReport,
    CharacteristicExponent,
    DecoherenceFactor,
    LevyTriplet,
    PowerLawWeight,
    SeparationGrid,
    build_exponent,
    cf_at_time,
    cf_property_audit,
    eval_exponent,
    gaussian_exponent,
    levy_condition_check,
)
from .errors import (
    AlphaOutOfRange,
    AuditFailed,
    GridTooCoarse,
    InfiniteMoment,
    LevyConditionViolated,
    LevydecError,
    NegativeTime,
    NonHermitianInput,
    NonIntegrableKernel,
    QuadratureNotConverged,
    SupportClipped,
    TruncationTooSmall,
    UnnormalizedWeights,
    WindowTooNarrow,
    ZeroKernel,
)
from .evolution import (
    JumpConfig,
    OffDiagonalState,
    PathSeparationWeights,
    TransitionReport,
    apply_superoperator,
    evolve_closed_form,
    gaussian_weights,
    jump_expansion_evolve,
    poisson_weights,
    transition_scan,
    visibility,
)
from .models import (
    GasKernel,
    MandelParams,
    MomentumPD,
    StableParams,
    compound_poisson_exponent,
    default_mandel_grid,
    gaussian_limit,
    mandel_cf,
    mandel_pd,
    marginal_kernel_isotropic,
    normalize_gas_kernel,
    pd_moments,
    read_two_column,
    scattering_cross_section,
    stable_exponent,
    stable_exponent_quadrature,
    stable_levy_amplitude,
)
from .sampling import (
    CompoundPoissonProcess,
    EmpiricalCF,
    GaussianProcess,
    SamplerConfig,
    StableProcess,
    empirical_cf,
    sample_total_transfer,
)
from .spectral import (
    QuadratureSpec,
    UniformGridPair,
    cf_to_pd,
    convolve_power,
    jump_integral,
    linear_density_cf,
    pd_to_cf,
    power_law_jump_integral,
)

__all__ = [name for name in dir() if not name.startswith("_")]

"""Stellar fidelity profiles of bosonic states and Gaussian conversion no-go regions."""

__version__ = "0.1.0"

from .bounds import (
    ConversionScenario,
    NoGoRegion,
    Rectangle,
    assess_protocol,
    exact_bound_check,
    nogo_region_multicopy,
    nogo_region_subadditive,
    wln_bound_check,
)
from .errors import (
    CapacityError,
    DegenerateProjection,
    DimensionError,
    InfeasibleOptimization,
    ParameterRangeError,
    PrecisionError,
    SpecError,
    StellarError,
    TruncationError,
)
from .fock import FockState, MultiIndexOrder, basis_state, fidelity, overlap, project_rank, tensor, tensor_power, trace_distance_pure
from .gaussian import (
    GaussianCircuit,
    apply_circuit,
    beamsplitter_apply,
    displacement_matrix,
    rotation_matrix,
    squeezing_matrix,
)
from .profile import (
    ApproxRankFunction,
    OptimizerOptions,
    StellarProfile,
    approx_rank_from_profile,
    profile,
    stellar_fidelity,
    subadditive_profile_bound,
)
from .states import (
    StateSpec,
    make_binomial,
    make_cat,
    make_coherent,
    make_cubic_phase,
    make_fock,
    make_gkp,
    make_superposition,
    make_trisqueezed,
)
from .wigner import WignerGrid, wigner, wln, wln_product

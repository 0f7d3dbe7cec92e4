"""Information-theoretic sample-complexity bounds for adaptive sparse recovery."""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    CsFeasibilityReport,
    PowerAllocation,
    adaptive_lower_bound,
    binary_output_bound,
    circulant_eigenvalues,
    cs_feasibility,
    fano_error_lower_bound,
    min_feasible_t,
    nonadaptive_lower_bound,
    sequence_mi_cap,
    snr_necessary,
)
from .core import (
    MeasurementHistory,
    ProblemDims,
    log_binom,
    make_rng,
    rank_support,
    unrank_support,
)
from .decoders import comp_decode, ml_decode
from .errors import (
    ConfigError,
    DomainError,
    ResourceCapError,
    SparseBoundError,
    UnsupportedOperationError,
)
from .infotheory import (
    DiscreteDesign,
    GaussianDesign,
    MiEstimate,
    SequenceMiProfile,
    binary_channel_mi_mc,
    binary_entropy,
    exact_conditional_mi,
    linear_cs_mi_closed_form,
    linear_cs_mi_mc,
    plugin_sequence_mi,
)
from .models import GroupTestingModel, LinearCsModel, OneBitCsModel
from .strategies import (
    BernoulliStrategy,
    BinarySplittingStrategy,
    GaussianStrategy,
    TwoStageCsStrategy,
    bernoulli_design,
    gaussian_design,
)

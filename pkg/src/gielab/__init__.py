"""Gaussian intrinsic entanglement toolkit.

Covariance-matrix calculus, minimal purifications, the nested
measurement optimization defining Gaussian intrinsic entanglement,
closed forms for pure and GHZ-reduction states, companion entanglement
measures, and the photon-counting bound for the CV Werner state.
"""

__version__ = "0.1.0"

from .errors import (
    DegenerateDistribution,
    GielabError,
    InvalidCM,
    InvalidDecomposition,
    NonConvergence,
    NotPure,
)
from .gie import (
    GieResult,
    MeasurementParam,
    OptimizerConfig,
    ghz_internal,
    gie,
    gie_ghz_closed,
    gie_pure_closed,
    inf_over_eve,
    mutual_info_f,
    sym_classical_mi,
    upper_bound_U,
)
from .measures import (
    entropy_of_entanglement_pure,
    gr2_ghz,
    gr2_numeric,
    log_negativity,
)
from .measurements import Measurement, ModeVariant, gaussian_condition
from .reductions import ChannelSpec, integrate_channel, reduce_purification_measurement
from .states import (
    LocalChannel,
    Purification,
    SeparableDecomposition,
    apply_local_channel,
    conditional_cm,
    find_separable_decomposition,
    ghz_cm,
    minimal_purification,
    outcome_ccm,
    ppt_separable,
    product_projecting_measurement,
    random_cm,
    tmsv_cm,
)
from .symplectic import (
    CovarianceMatrix,
    StandardForm,
    SymplecticMatrix,
    WilliamsonDecomposition,
    build_symplectic,
    format_cm_text,
    parse_cm_text,
    partial_transpose,
    rotation,
    schur_complement,
    standard_form,
    symplectic_eigenvalues,
    symplectic_form,
    williamson,
)
from .werner import (
    JointPmf,
    QubitPovm,
    WernerParams,
    conditional_mutual_info,
    eve_strategy_cmi,
    joint_pmf,
    lower_bound,
)

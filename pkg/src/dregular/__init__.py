"""Spectral simulation toolkit for random d-regular graphs."""

from .config import ConfigError, ExperimentConfig, make_config, parse_config, parse_z_grid
from .experiments import (
    DiagnosticRecord,
    EdgeSample,
    averaging_identity_probe,
    edge_fluctuations,
    esd_experiment,
    km_cdf,
    ks_distance_km,
    loop_equation_probe,
    self_consistent_scan,
)
from .graphs import (
    Ball,
    Parameters,
    RegularGraph,
    ball,
    boundary_edges,
    excess,
    is_tree,
    omega_bar_check,
)
from .kernels import (
    ExpansionCoefficients,
    SingularOperatorError,
    SpectralPoint,
    WeightedTreeOperator,
    edge_constant,
    km_density,
    stieltjes_kesten_mckay,
    stieltjes_semicircle,
    tree_green_ary,
    tree_green_regular,
    weighted_tree_operator,
    x_ell,
    y_ell,
    y_expansion_coeffs,
)
from .resampling import (
    ResamplingData,
    SwitchOperator,
    SwitchingPreconditionError,
    apply,
    exchangeability_test,
    propose,
    resolvent_update_expansion,
    reverse_data,
    second_eigenvalue,
    triangle_count,
    woodbury_f,
)
from .resolvent import (
    NormalizedAdjacency,
    ResolventCache,
    ResonanceError,
    dz_m_n,
    eigenvalues,
    green_minor,
    local_law_error,
    q_of,
    resolvent,
)
from .samplers import RejectionLimitError, SamplerConfig, directed_edges, sample, sample_many, stream

__version__ = "0.1.0"

"""Large-deviation rate functions, information projections, and sharp tail
asymptotics for finite, Gaussian, exponential, and Markov-modulated models,
cross-checked against exact combinatorial computations."""

__version__ = "0.1.0"

from .errors import LdpkitError, DomainError, ParseError
from .dist import (
    FiniteDist,
    Gaussian,
    Exponential,
    LatticeInfo,
    kl_divergence,
    tv_distance,
    relative_varentropy,
    tilt,
    condition,
    lattice_structure,
    sample,
)
from .rates import (
    CgfSpec,
    ClosedFormCgf,
    RatePoint,
    FiniteVectorDist,
    cgf,
    rate_equality,
    rate_inequality,
    rate_lower,
    rate_closed_set,
    rate_vector,
    INTERIOR,
    AT_ALPHA_MAX,
    BEYOND_ALPHA_MAX,
    DUAL_BOUNDARY,
)
from .iproject import IProjection, iproject_equality, iproject_inequality, pythagorean_gap
from .exact import (
    TypeVector,
    Halfspace,
    TvBall,
    Predicate,
    count_types,
    enumerate_types,
    type_log_prob,
    event_log_prob,
    event_prob_exact,
    halfspace_divergence,
    sanov_bound_gap,
    gibbs_conditional,
)
from .sharp import SharpApprox, strong_cramer, strong_sanov, approx_vs_exact
from .markov import (
    MarkovModel,
    load_model,
    markov_cgf,
    markov_rate,
    markov_tail_log,
    markov_tail_exact,
    stationary,
)
from .montecarlo import TailEstimate, mc_tail, is_tail, is_empirical_event
from ._backend import BACKEND

__all__ = [
    "__version__",
    "LdpkitError",
    "DomainError",
    "ParseError",
    "FiniteDist",
    "Gaussian",
    "Exponential",
    "LatticeInfo",
    "kl_divergence",
    "tv_distance",
    "relative_varentropy",
    "tilt",
    "condition",
    "lattice_structure",
    "sample",
    "CgfSpec",
    "ClosedFormCgf",
    "RatePoint",
    "FiniteVectorDist",
    "cgf",
    "rate_equality",
    "rate_inequality",
    "rate_lower",
    "rate_closed_set",
    "rate_vector",
    "INTERIOR",
    "AT_ALPHA_MAX",
    "BEYOND_ALPHA_MAX",
    "DUAL_BOUNDARY",
    "IProjection",
    "iproject_equality",
    "iproject_inequality",
    "pythagorean_gap",
    "TypeVector",
    "Halfspace",
    "TvBall",
    "Predicate",
    "count_types",
    "enumerate_types",
    "type_log_prob",
    "event_log_prob",
    "event_prob_exact",
    "halfspace_divergence",
    "sanov_bound_gap",
    "gibbs_conditional",
    "SharpApprox",
    "strong_cramer",
    "strong_sanov",
    "approx_vs_exact",
    "MarkovModel",
    "load_model",
    "markov_cgf",
    "markov_rate",
    "markov_tail_log",
    "markov_tail_exact",
    "stationary",
    "TailEstimate",
    "mc_tail",
    "is_tail",
    "is_empirical_event",
    "BACKEND",
]

"""Belief-function decisions with reject over the power set and the free
union/intersection lattice, plus a textured-image classification harness."""

from .belief import (
    CombinationReport,
    MassFunction,
    TotalConflictError,
    conjunctive,
    dempster,
    mass_from_json,
    mass_to_json,
)
from .decision import (
    REJECT,
    DecisionConfig,
    DecisionOutcome,
    decide_cardinality4_with_reject,
    decide_hyper_weighted,
    decide_max_singleton,
    decide_maxbel_reject,
    decide_two_step,
    decide_weighted_power,
)
from .fusion import (
    DegenerateScoreError,
    LinearScorer,
    MassModel,
    PairParams,
    fit_builtin_scorer,
    fit_lambdas,
    fuse_observation,
    pairwise_mass,
)
from .lattice import (
    Frame,
    HyperElement,
    ParseError,
    PowerElement,
    SpecificityWindow,
    canonical_key,
    cardinality_histogram,
    elements_in_window,
    enumerate_hyper,
    format_element,
    parse_element,
)
from .texture import (
    FeatureVector,
    Imagette,
    cooccurrence,
    haralick6,
    imagette_features,
    quantize,
    read_pgm,
    write_pgm,
)

__version__ = "0.1.0"

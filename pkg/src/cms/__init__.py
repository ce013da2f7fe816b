"""Contractive Markov systems: simulation, invariant measures, coding maps,
and Kolmogorov-Sinai entropy of the associated symbol shift."""

from ._accel import JIT_ENABLED, NUMBA_AVAILABLE
from .chain import (
    ChainConfig,
    EmpiricalMeasure,
    Trajectory,
    estimate_invariant_measure,
    first_moment,
    operator_iterate,
    push_forward_once,
    simulate,
    step,
)
from .coding import (
    CodingConfig,
    CodingResult,
    MeasureDistance,
    code_point,
    coding_increments,
    increment_ratios,
    measure_distance,
    pushforward_measure,
)
from .entropy import (
    BlockEntropyCurve,
    EntropyEstimate,
    block_entropy,
    entropy_formula,
    entropy_rate_empirical,
)
from .errors import ConfigError, InputError, SystemIntegrityError
from .graph import DirectedMultigraph, Edge, StructureFlags, structure_flags, validate_path
from .measure import (
    ConditionalTestReport,
    Cylinder,
    CylinderEstimate,
    conditional_test,
    cylinder_measure,
    path_probability,
)
from .systems import (
    BernoulliIFS,
    ContractionReport,
    FiniteChain,
    MarkovSystem,
    PlanarAffineTrig,
    PlanarParams,
    State,
    ValidationReport,
    check_image_containment,
    estimate_contraction_rate,
    make_system,
)

__version__ = "0.1.0"

__all__ = [
    "JIT_ENABLED",
    "NUMBA_AVAILABLE",
    "__version__",
    # graph
    "DirectedMultigraph", "Edge", "StructureFlags", "structure_flags", "validate_path",
    # systems
    "State", "MarkovSystem", "PlanarAffineTrig", "PlanarParams", "FiniteChain",
    "BernoulliIFS", "ValidationReport", "ContractionReport",
    "check_image_containment", "estimate_contraction_rate", "make_system",
    # chain
    "ChainConfig", "Trajectory", "EmpiricalMeasure", "step", "simulate",
    "estimate_invariant_measure", "operator_iterate", "first_moment",
    "push_forward_once",
    # coding
    "CodingConfig", "CodingResult", "MeasureDistance", "code_point",
    "coding_increments", "pushforward_measure", "increment_ratios",
    "measure_distance",
    # measure
    "Cylinder", "CylinderEstimate", "ConditionalTestReport", "path_probability",
    "cylinder_measure", "conditional_test",
    # entropy
    "EntropyEstimate", "BlockEntropyCurve", "entropy_formula", "block_entropy",
    "entropy_rate_empirical",
    # errors
    "InputError", "ConfigError", "SystemIntegrityError",
]

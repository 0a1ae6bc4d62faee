"""Workbench for operational probabilistic theories.

States are vectors in a real embedding with a unit functional, effects are
dual vectors, transformations are matrices. Polytopic theories are handled
by linear programming over their vertices; quantum theories and Euclidean
balls use exact closed forms.
"""
from .config import Tolerances, tolerances, using_tolerances
from .convex import (State, Theory, Weight, caratheodory_dimension, caratheodory_rank,
                     chaotic_state, max_alpha_prec, minimal_decomposition, mix, precedes,
                     verify_chaotic_maximality)
from .effects import Observable, Propensity, is_informationally_complete, observable, propensity
from .errors import (CutoffExceeded, NotCoexistent, NotInformationallyComplete, NullConditioning,
                     OPTWError, TheoryMismatch, UnsupportedBackend)
from .metric import (distance, distance_matrix, informational_dimension, metric_dimension,
                     orthogonal, perfectly_discriminable)
from .transforms import (Instrument, Transformation, conditional_state, instrument,
                         occurrence_prob, transformation, transformation_norm)
from .zoo import (classical_theory, gbit_theory, hypersphere_theory, polygon_theory,
                  quantum_theory)

__all__ = [
    "Tolerances", "tolerances", "using_tolerances",
    "State", "Theory", "Weight", "caratheodory_dimension", "caratheodory_rank",
    "chaotic_state", "max_alpha_prec", "minimal_decomposition", "mix", "precedes",
    "verify_chaotic_maximality",
    "Observable", "Propensity", "is_informationally_complete", "observable", "propensity",
    "CutoffExceeded", "NotCoexistent", "NotInformationallyComplete", "NullConditioning",
    "OPTWError", "TheoryMismatch", "UnsupportedBackend",
    "distance", "distance_matrix", "informational_dimension", "metric_dimension",
    "orthogonal", "perfectly_discriminable",
    "Instrument", "Transformation", "conditional_state", "instrument", "occurrence_prob",
    "transformation", "transformation_norm",
    "classical_theory", "gbit_theory", "hypersphere_theory", "polygon_theory", "quantum_theory",
]

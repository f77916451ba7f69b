"""Single-crossover recombination in the Wright-Fisher model.

Coefficient functions a_G(t) are computed three ways (nonlinear recursion,
ancestral recombination trees, exact Markov chain on link subsets) and
checked against forward iteration and Monte Carlo simulation.
"""

__version__ = "0.1.0"

from .errors import FeasibilityError, RecombError, ValidationError
from .genome import GenomeLayout

__all__ = ["GenomeLayout", "RecombError", "ValidationError", "FeasibilityError", "__version__"]

"""Newton maps of g(z) = int_0^z p(t) exp(q(t)) dt + c and numerical
evidence that their Julia sets have zero area."""

from .core import Polynomial, Problem, erf_problem, load_problem, normalize
from .dynamics import Verdict, iterate_many, iterate_orbit, newton_map
from .errors import NewtonMeasureError

__all__ = [
    "Polynomial", "Problem", "erf_problem", "load_problem", "normalize",
    "Verdict", "iterate_many", "iterate_orbit", "newton_map", "NewtonMeasureError",
]

"""Util functions needed around the repository."""

from .rng_utils import generate_standard_normal
from .rng_utils import get_new_generator
from .rng_utils import split_seeds
from .utils import DTYPE
from .utils import as_tensor
from .utils import check_square
from .utils import parallel_execution
from .utils import relative_error
from .utils import symmetrize

__all__ = [
    "DTYPE",
    "as_tensor",
    "check_square",
    "parallel_execution",
    "relative_error",
    "symmetrize",
    "generate_standard_normal",
    "get_new_generator",
    "split_seeds",
]

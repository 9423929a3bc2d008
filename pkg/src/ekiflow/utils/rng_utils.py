"""Random number helpers.

Every stochastic component owns its own ``torch.Generator``; seeds for
independent components are derived by seed splitting so results do not
depend on execution order.
"""

# stdlib
from typing import List
from typing import Union

# third party
import numpy as np
import torch

from .utils import DTYPE


def get_new_generator(seed: int) -> torch.Generator:
    """Get a generator that is initialized with seed.

    Args:
        seed (int): Seed.

    Returns:
        torch.Generator: Generator.
    """
    generator = torch.Generator()
    generator.manual_seed(int(seed))
    return generator


def split_seeds(seed: int, nr_seeds: int) -> List[int]:
    """Derive independent child seeds from a root seed.

    Args:
        seed (int): Root seed.
        nr_seeds (int): Number of child seeds.

    Returns:
        List[int]: Child seeds in [0, 2**63).

    Raises:
        ValueError: If the seed is negative.
    """
    if seed < 0:
        raise ValueError(f"Seed should be non negative, got {seed}")

    children = np.random.SeedSequence(seed).spawn(nr_seeds)
    # 63 bits so the value fits a signed torch seed
    states = [child.generate_state(1, dtype=np.uint64)[0] for child in children]
    return [int(state) >> 1 for state in states]


def generate_standard_normal(
    generator: torch.Generator,
    shape: Union[tuple, torch.Size],
) -> torch.Tensor:
    """Generate a block of independent N(0, 1) samples.

    Args:
        generator (torch.Generator): Torch Generator.
        shape (Union[tuple, torch.Size]): Shape.

    Returns:
        torch.Tensor: Random tensor.
    """
    return torch.randn(size=shape, generator=generator, dtype=DTYPE)

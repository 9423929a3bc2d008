"""Tensor helpers and parallel execution shared by every sub-package."""

# stdlib
from concurrent.futures import ProcessPoolExecutor
from concurrent.futures import ThreadPoolExecutor
import functools
from typing import Any
from typing import Callable
from typing import Dict
from typing import List
from typing import Optional
from typing import Type
from typing import Union

# third party
import torch

DTYPE = torch.float64


def as_tensor(value: Any) -> torch.Tensor:
    """Convert a nested list, numpy array or tensor to a float64 tensor.

    Args:
        value (Any): Value to convert.

    Returns:
        torch.Tensor: A float64 tensor on the cpu.
    """
    return torch.as_tensor(value, dtype=DTYPE).clone()


def symmetrize(matrix: torch.Tensor) -> torch.Tensor:
    """Replace a matrix by its symmetric part (M + Mᵀ)/2.

    Works on the last two dimensions so batches of matrices are accepted.

    Args:
        matrix (torch.Tensor): Square matrix (or batch of matrices).

    Returns:
        torch.Tensor: The symmetric part.
    """
    return (matrix + matrix.transpose(-1, -2)) / 2


def relative_error(value: torch.Tensor, reference: torch.Tensor) -> float:
    """Frobenius (or Euclidean) relative error of value against reference.

    A zero reference falls back to the absolute error.

    Args:
        value (torch.Tensor): Computed value.
        reference (torch.Tensor): Reference value.

    Returns:
        float: ‖value − reference‖ / ‖reference‖.
    """
    diff = torch.linalg.norm(value - reference).item()
    scale = torch.linalg.norm(reference).item()
    if scale == 0.0:
        return diff
    return diff / scale


def check_square(matrix: torch.Tensor, name: str) -> int:
    """Check that a tensor is a square matrix.

    Args:
        matrix (torch.Tensor): The matrix.
        name (str): Name used in the error message.

    Returns:
        int: The dimension of the matrix.

    Raises:
        ValueError: If the tensor is not a square matrix.
    """
    if matrix.dim() != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(
            f"{name} should be a square matrix, got {tuple(matrix.shape)}"
        )
    return matrix.shape[0]


def parallel_execution(
    fn: Callable[..., Any],
    max_workers: Optional[int] = None,
    cpu_bound: bool = False,
) -> Callable[..., List[Any]]:
    """Wrap a function such that it can be run in parallel on several inputs.

    Args:
        fn (Callable): The function to run.
        max_workers (Optional[int]): Upper bound for the number of workers.
            Defaults to one worker per task.
        cpu_bound (bool): Run the tasks in processes instead of threads. Processes
            need a picklable function and args. Threads suit torch code, which
            releases the GIL inside its kernels.

    Returns:
        Callable[..., List[Any]]: A Callable that returns a list of results.
    """

    @functools.wraps(fn)
    def wrapper(
        args: List[List[Any]],
        kwargs: Optional[Dict[str, Any]] = None,
    ) -> List[Any]:
        """Run every list of args and keep the results in submission order.

        Args:
            args (List[List[Any]]): One list of args per task.
            kwargs (Optional[Dict[str, Any]]): Kwargs shared by the tasks.
                Default to None.

        Returns:
            List[Any]: Results, in the same order as args.
        """
        Executor: Union[Type[ProcessPoolExecutor], Type[ThreadPoolExecutor]]
        if cpu_bound:
            Executor = ProcessPoolExecutor
        else:
            Executor = ThreadPoolExecutor

        nr_tasks = len(args)
        if nr_tasks == 0:
            return []

        if kwargs is None:
            kwargs = {}

        workers = nr_tasks
        if max_workers is not None:
            workers = max(1, min(max_workers, nr_tasks))

        futures = []
        with Executor(max_workers=workers) as executor:
            for task_args in args:
                futures.append(executor.submit(fn, *task_args, **kwargs))

        return [f.result() for f in futures]

    return wrapper

# stdlib
import threading

# third party
import numpy as np
import pytest
import torch

from ekiflow.utils import DTYPE
from ekiflow.utils import as_tensor
from ekiflow.utils import check_square
from ekiflow.utils import parallel_execution
from ekiflow.utils import relative_error
from ekiflow.utils import symmetrize


def test_as_tensor_dtype_and_copy() -> None:
    source = torch.ones(2, dtype=torch.float32)
    tensor = as_tensor(source)
    tensor[0] = 5

    assert tensor.dtype == DTYPE
    assert source[0] == 1
    assert as_tensor([[1, 2], [3, 4]]).dtype == DTYPE
    assert as_tensor(np.eye(2)).shape == (2, 2)


def test_symmetrize_batch() -> None:
    M = torch.arange(8, dtype=DTYPE).reshape(2, 2, 2)
    S = symmetrize(M)

    assert torch.equal(S, S.transpose(-1, -2))
    assert torch.equal(S[0], torch.tensor([[0.0, 1.5], [1.5, 3.0]], dtype=DTYPE))


def test_relative_error() -> None:
    reference = torch.tensor([3.0, 4.0], dtype=DTYPE)
    assert relative_error(reference * 1.1, reference) == pytest.approx(0.1)
    # zero reference falls back to the absolute error
    assert relative_error(reference, torch.zeros(2)) == pytest.approx(5.0)


def test_check_square() -> None:
    assert check_square(torch.eye(3), "E") == 3

    with pytest.raises(ValueError):
        check_square(torch.ones(2, 3), "M")

    with pytest.raises(ValueError):
        check_square(torch.ones(3), "v")


@pytest.mark.parametrize("max_workers", [None, 1, 3])
def test_parallel_execution_keeps_order(max_workers) -> None:
    def square(x: int, offset: int = 0) -> int:
        return x * x + offset

    results = parallel_execution(square, max_workers=max_workers)(
        [[i] for i in range(10)], {"offset": 1}
    )

    assert results == [i * i + 1 for i in range(10)]


def test_parallel_execution_caps_workers() -> None:
    seen = set()

    def record(i: int) -> int:
        seen.add(threading.get_ident())
        return i

    parallel_execution(record, max_workers=1)([[i] for i in range(5)])

    assert len(seen) == 1


def test_parallel_execution_empty() -> None:
    assert parallel_execution(abs)([]) == []

"""CSV and JSON output of an experiment.

Every table has a first column ``t``; vector and matrix series are flattened
into one column per entry, named ``<name>_<i>`` and ``<name>_<i>_<j>``.
Floats are written in their shortest round-trip form, so two runs with the
same configuration produce byte-identical files.
"""

# stdlib
import csv
import itertools
import json
import logging
import math
from pathlib import Path
from typing import Any
from typing import Dict
from typing import List
from typing import Tuple
from typing import Union

# third party
import torch

from ekiflow.utils import as_tensor

logger = logging.getLogger(__name__)


def _flatten(name: str, series: Any, nr_rows: int) -> Tuple[List[str], torch.Tensor]:
    values = as_tensor(series)
    if values.shape[0] != nr_rows:
        raise ValueError(
            f"Column {name} has {values.shape[0]} rows, expected {nr_rows}"
        )
    if values.dim() == 1:
        return [name], values.unsqueeze(-1)

    indices = itertools.product(*(range(size) for size in values.shape[1:]))
    headers = [name + "".join(f"_{i}" for i in index) for index in indices]
    return headers, values.reshape(nr_rows, -1)


def _format(value: float) -> str:
    return repr(float(value))


def _json_value(value: Any) -> Any:
    if isinstance(value, torch.Tensor):
        value = value.tolist()
    if isinstance(value, dict):
        return {str(key): _json_value(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(item) for item in value]
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


class ResultWriter:
    """Writes the result files of one experiment run into a directory.

    Attributes:
        output_dir (Path): Target directory, created on first write.
        written (List[Path]): Files written so far.
    """

    __slots__ = {"output_dir", "written"}

    def __init__(self, output_dir: Union[str, Path]) -> None:
        """Initializer for the ResultWriter.

        Args:
            output_dir (Union[str, Path]): Target directory.
        """
        self.output_dir = Path(output_dir)
        self.written: List[Path] = []

    def _path(self, filename: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        path = self.output_dir / filename
        self.written.append(path)
        logger.info("Writing %s", path)
        return path

    def write_table(self, filename: str, times: Any, columns: Dict[str, Any]) -> Path:
        """Write a time series table.

        Args:
            filename (str): File name, for example "trajectory.csv".
            times (Any): K times.
            columns (Dict[str, Any]): Series with K rows each, scalars, vectors
                or matrices per row. Column order follows insertion order.

        Returns:
            Path: The written file.
        """
        times = as_tensor(times).reshape(-1)
        nr_rows = times.shape[0]

        headers = ["t"]
        blocks = [times.unsqueeze(-1)]
        for name, series in columns.items():
            names, block = _flatten(name, series, nr_rows)
            headers.extend(names)
            blocks.append(block)
        table = torch.cat(blocks, dim=-1).tolist()

        path = self._path(filename)
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(headers)
            for row in table:
                writer.writerow([_format(value) for value in row])
        return path

    def write_summary(self, summary: Dict[str, Any]) -> Path:
        """Write summary.json, keys sorted.

        Non-finite floats are written as the strings "inf", "-inf" and "nan".

        Args:
            summary (Dict[str, Any]): The summary.

        Returns:
            Path: The written file.
        """
        path = self._path("summary.json")
        text = json.dumps(_json_value(summary), indent=2, sort_keys=True)
        path.write_text(text + "\n", encoding="utf-8")
        return path

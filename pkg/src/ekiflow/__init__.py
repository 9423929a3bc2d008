# -*- coding: utf-8 -*-
"""Closed-form dynamics, particle simulation and diagnostics of ensemble
Kalman inversion for linear inverse problems."""

# stdlib
from importlib.metadata import PackageNotFoundError
from importlib.metadata import version

try:
    # Change here if project is renamed and does not equal the package name
    dist_name = __name__
    __version__ = version(dist_name)
except PackageNotFoundError:
    __version__ = "unknown"
finally:
    del version, PackageNotFoundError

from . import config  # noqa: 401 E402
from . import utils  # noqa: 401 E402
from . import problem  # noqa: 401 E402
from . import linalg  # noqa: 401 E402
from . import flow  # noqa: 401 E402
from . import bayes  # noqa: 401 E402
from . import dae  # noqa: 401 E402
from . import ensemble  # noqa: 401 E402
from . import diagnostics  # noqa: 401 E402

from . import experiment  # noqa: 401 E402 isort: skip

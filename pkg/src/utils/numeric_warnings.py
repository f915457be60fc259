"""
Numeric warning suppression for EM fits and sweep workers.

Fits routinely evaluate densities far in the tails and refit nearly empty
clusters. numpy and scikit-learn report those situations as warnings, which
would flood sweep output. This module silences them inside a fit while
leaving the rest of the process untouched.

References:
    - src/engine/em_engine.py: wraps every fit
    - main.py: quiet library loggers
"""

import logging
import warnings
from contextlib import contextmanager
from typing import Iterator

import numpy as np
from sklearn.exceptions import ConvergenceWarning

NOISY_LOGGERS = ["sklearn", "numba", "matplotlib", "PIL"]


@contextmanager
def suppress_numeric_warnings() -> Iterator[None]:
    """
    Context manager to silence floating-point and convergence warnings.

    Restores the previous numpy error state and warning filters on exit.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", category=RuntimeWarning)
        warnings.simplefilter("ignore", category=ConvergenceWarning)
        with np.errstate(all="ignore"):
            yield


def quiet_library_loggers(level: int = logging.WARNING) -> None:
    """Lower the log level of third-party numerical libraries."""
    for logger_name in NOISY_LOGGERS:
        logging.getLogger(logger_name).setLevel(level)

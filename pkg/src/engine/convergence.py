"""
Convergence detection over a sliding window of regression errors.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Sequence

import numpy as np


def converged(window: Sequence[float], conv_tol: float) -> bool:
    """
    True when the errors stopped decreasing steadily and barely change.

    Args:
        window: The last n_c regression errors, oldest first
        conv_tol: Threshold T_c on the mean relative change

    Returns:
        True iff the window is not strictly decreasing and the mean of
        |e_{i+1} − e_i| / max(e_i, eps) is below conv_tol
    """
    errors = np.asarray(window, dtype=float)
    if errors.size < 2:
        return False

    steps = np.diff(errors)
    if np.all(steps < 0):
        return False

    eps = np.finfo(float).eps
    relative = np.abs(steps) / np.maximum(errors[:-1], eps)
    return bool(np.mean(relative) < conv_tol)


@dataclass
class ConvergenceState:
    """Rolling window of the last conv_window errors"""

    size: int = 7
    conv_tol: float = 1e-2
    window: Deque[float] = field(default_factory=deque)

    def push(self, error: float) -> None:
        self.window.append(float(error))
        while len(self.window) > self.size:
            self.window.popleft()

    @property
    def full(self) -> bool:
        return len(self.window) == self.size

    def check(self) -> bool:
        """Converged only once the window is full."""
        return self.full and converged(list(self.window), self.conv_tol)

    def reset(self) -> None:
        self.window.clear()

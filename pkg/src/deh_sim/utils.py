import logging
import time
from functools import wraps

import numpy as np

logger = logging.getLogger(__name__)


def log_duration(label: str):
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                logger.info(f"{label} finished in {time.perf_counter() - start_time:.3f}s")
        return wrapper
    return decorator


def phase_grid(n: int) -> np.ndarray:
    """Uniform grid of ``n`` phases on [0, 2π)."""
    if n <= 0:
        raise ValueError(f"Phase grid size must be positive: {n}")
    return 2.0 * np.pi * np.arange(n) / n


def sampled_phases(n: int, seed: int) -> np.ndarray:
    """``n`` phases drawn uniformly from [0, 2π), reproducible from ``seed``."""
    if n <= 0:
        raise ValueError(f"Phase sample size must be positive: {n}")
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 2.0 * np.pi, size=n)

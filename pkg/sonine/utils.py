"""Grid and ladder helpers shared by the suites and the CLI."""
from typing import List, Sequence

import numpy as np

from sonine.errors import ConfigError


def interior_grid(a: float, b: float, n: int, margin: float = 0.1) -> np.ndarray:
    """
    n evenly spaced points of [a + margin (b - a), b - margin (b - a)].

    Derivative checks stay clear of the endpoints, where the operators
    refuse to evaluate or carry a boundary layer.
    """
    width = b - a
    return np.linspace(a + margin * width, b - margin * width, n)


def evaluation_grid(a: float, b: float, n: int) -> np.ndarray:
    """n points of [a, b] including both endpoints."""
    if n < 2:
        raise ConfigError(f"an evaluation grid needs at least 2 points, got {n}")
    return np.linspace(a, b, n)


def parse_float_list(text: str) -> List[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"Expected a comma-separated list of numbers, got '{text}'") from None
    if not values:
        raise ConfigError("Expected at least one number")
    return values


def strictly_decreasing(values: Sequence[float]) -> bool:
    values = list(values)
    return all(later < earlier for earlier, later in zip(values, values[1:]))

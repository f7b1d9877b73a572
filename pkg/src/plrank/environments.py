"""Named benchmark instances.

geo8    8 items, geometric decay with ratio 0.875
arith10 10 items, arithmetic gaps of 0.1
har20   20 items, harmonic weights 1/i
arith50 50 items, arithmetic gaps of 0.02
"""

from __future__ import annotations

from .model import PLInstance


def _geo8() -> list[float]:
    return [0.875**i for i in range(8)]


def _arith10() -> list[float]:
    return [(10 - i) / 10 for i in range(10)]


def _har20() -> list[float]:
    return [1.0 / (i + 1) for i in range(20)]


def _arith50() -> list[float]:
    return [(50 - i) / 50 for i in range(50)]


_REGISTRY = {
    "geo8": _geo8,
    "arith10": _arith10,
    "har20": _har20,
    "arith50": _arith50,
}

ENVIRONMENT_NAMES = tuple(sorted(_REGISTRY))


def environment(name: str) -> PLInstance:
    """Look up a benchmark instance by name."""
    try:
        build = _REGISTRY[name]
    except KeyError:
        raise KeyError(
            f"unknown environment {name!r}; known: {', '.join(ENVIRONMENT_NAMES)}"
        ) from None
    return PLInstance(build())

"""Richardson-extrapolated central differences.

Used as an independent oracle against the exact jet derivatives, and as the
fallback differentiator where no closed form is available.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


def richardson(estimate: Callable[[float], np.ndarray], h: float, levels: int = 4, power: int = 2):
    """Extrapolate ``estimate(h)`` whose error is a series in ``h**power``.

    Returns ``(value, error_estimate)`` where the error estimate is the change
    between the last two diagonal entries of the Neville table.
    """
    table = [[np.asarray(estimate(h / 2**i), dtype=float)] for i in range(levels)]
    for i in range(1, levels):
        for j in range(1, i + 1):
            factor = 2.0 ** (power * j)
            table[i].append((factor * table[i][j - 1] - table[i - 1][j - 1]) / (factor - 1.0))
    best = table[-1][-1]
    err = np.max(np.abs(best - table[-2][-1])) if levels > 1 else np.inf
    return best, float(err)


def _step(x: np.ndarray, rel: float) -> np.ndarray:
    return rel * np.where(x == 0.0, 1.0, np.abs(x))


def gradient(f: Callable, x: Sequence[float], rel: float = 1e-2, levels: int = 4):
    """``df/dx_i`` stacked on a leading axis, plus the worst error estimate."""
    x = np.asarray(x, dtype=float)
    steps = _step(x, rel)
    out, worst = [], 0.0
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = 1.0

        def central(t, e=e, s=steps[i]):
            return (np.asarray(f(x + t * s * e)) - np.asarray(f(x - t * s * e))) / (2 * t * s)

        val, err = richardson(central, 1.0, levels)
        out.append(val)
        worst = max(worst, err)
    return np.array(out), worst


def hessian(f: Callable, x: Sequence[float], rel: float = 1e-2, levels: int = 4):
    """Second derivatives ``d2f/dx_i dx_j`` on the two leading axes."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    steps = _step(x, rel)
    f0 = np.asarray(f(x), dtype=float)
    out = np.zeros((n, n) + f0.shape)
    worst = 0.0
    for i in range(n):
        for j in range(i, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = steps[i]
            ej[j] = steps[j]
            if i == j:

                def est(t, ei=ei):
                    return (np.asarray(f(x + t * ei)) - 2 * f0 + np.asarray(f(x - t * ei))) / t**2

            else:

                def est(t, ei=ei, ej=ej):
                    return (
                        np.asarray(f(x + t * ei + t * ej))
                        - np.asarray(f(x + t * ei - t * ej))
                        - np.asarray(f(x - t * ei + t * ej))
                        + np.asarray(f(x - t * ei - t * ej))
                    ) / (4 * t**2)

            val, err = richardson(est, 1.0, levels)
            val = val / (steps[i] * steps[j])
            out[i, j] = out[j, i] = val
            worst = max(worst, err / (steps[i] * steps[j]))
    return out, worst

"""One-dimensional search helpers: grid-bracketed maximization and root finding."""
from __future__ import annotations

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import BracketError


def maximize_on_interval(f, a: float, b: float, grid: int = 40, xatol: float | None = None):
    """Global-ish maximum of ``f`` on ``[a, b]``.

    A uniform grid locates the best cell (earliest on ties), then a bounded
    golden-section/parabolic search refines inside the neighbouring cells.

    Returns
    -------
    x, f(x) : float
    """
    if not b > a:
        raise BracketError(f"empty interval [{a}, {b}]")
    xs = np.linspace(a, b, grid + 1)
    ys = np.array([f(x) for x in xs])
    k = int(np.argmax(ys))
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, grid)]
    if xatol is None:
        xatol = 1e-10 * max(abs(b - a), abs(b), 1e-300)
    res = minimize_scalar(lambda x: -f(x), bounds=(lo, hi), method="bounded", options={"xatol": xatol})
    if -res.fun >= ys[k]:
        return float(res.x), float(-res.fun)
    return float(xs[k]), float(ys[k])


def first_root(f, a: float, b: float, grid: int = 16, xtol: float = 1e-12, rtol: float = 1e-10) -> float:
    """Smallest root of ``f`` on ``[a, b]`` found by grid bracketing plus Brent's method.

    Raises
    ------
    BracketError
        No sign change on the grid.
    """
    xs = np.linspace(a, b, grid + 1)
    prev_x, prev_y = xs[0], f(xs[0])
    if prev_y == 0:
        return float(prev_x)
    for x in xs[1:]:
        y = f(x)
        if y == 0:
            return float(x)
        if np.sign(y) != np.sign(prev_y):
            return float(brentq(f, prev_x, x, xtol=xtol, rtol=rtol))
        prev_x, prev_y = x, y
    raise BracketError(f"no sign change of the objective on [{a}, {b}]")

"""Adaptive Simpson quadrature with an evaluation budget."""

from __future__ import annotations

__all__ = ["QuadratureError", "adaptive_simpson"]

DEFAULT_TOL = 1e-8
DEFAULT_MAX_EVALS = 2_000_000


class QuadratureError(RuntimeError):
    """Raised when the integrator cannot meet its tolerance within budget."""


class _Budget:
    __slots__ = ("remaining",)

    def __init__(self, n: int):
        self.remaining = n

    def spend(self, n: int = 1) -> None:
        self.remaining -= n
        if self.remaining < 0:
            raise QuadratureError("quadrature evaluation budget exhausted")


def adaptive_simpson(f, a: float, b: float, tol: float = DEFAULT_TOL, max_evals: int = DEFAULT_MAX_EVALS) -> float:
    """Integrate f over [a, b] to an absolute tolerance.

    Standard adaptive Simpson with the factor-15 Richardson acceptance test.
    Raises QuadratureError when the evaluation budget runs out or the
    recursion bottoms out on an interval it cannot resolve.
    """
    if b < a:
        raise ValueError(f"integration bounds reversed: [{a}, {b}]")
    if b == a:
        return 0.0
    budget = _Budget(max_evals)
    budget.spend(3)
    fa, fm, fb = f(a), f((a + b) / 2.0), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_recurse(f, a, b, fa, fm, fb, whole, tol, budget, depth=60)


def _simpson_recurse(f, a, b, fa, fm, fb, whole, tol, budget, depth):
    m = (a + b) / 2.0
    lm = (a + m) / 2.0
    rm = (m + b) / 2.0
    budget.spend(2)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    if depth <= 0:
        raise QuadratureError(f"quadrature failed to converge on [{a}, {b}]")
    half = tol / 2.0
    return _simpson_recurse(f, a, m, fa, flm, fm, left, half, budget, depth - 1) + _simpson_recurse(
        f, m, b, fm, frm, fb, right, half, budget, depth - 1
    )

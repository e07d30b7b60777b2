"""Ready-made computation descriptions for common image operations.

These builders return `calc` ASTs; wrap them in an OperatorSpec with the
matching input/output areas to use them in a chain.
"""

from __future__ import annotations

from fractions import Fraction

from .calc import Apply, Composite, Const, Conv2d, GlobalOp, Pointwise, Rank, Var

SOBEL_GX = ((-1, 0, 1), (-2, 0, 2), (-1, 0, 1))
SOBEL_GY = ((-1, -2, -1), (0, 0, 0), (1, 2, 1))


def sobel_x() -> Conv2d:
    return Conv2d(kernel=SOBEL_GX)


def sobel_y() -> Conv2d:
    return Conv2d(kernel=SOBEL_GY)


def sobel() -> Composite:
    """Gradient magnitude |gx| + |gy| (L1, so integer arithmetic stays exact)."""
    return Composite(stages=(sobel_x(), sobel_y()), combine="magnitude")


def identity() -> Pointwise:
    return Pointwise(expr=Var())


def scale(factor) -> Pointwise:
    return Pointwise(expr=Apply("mul", (Var(), Const(Fraction(factor)))))


def threshold(level) -> Pointwise:
    """Binary threshold: 1 where pixel >= level, else 0."""
    return Pointwise(expr=Apply("compare", (Var(), Const(Fraction(level)))))


def invert(maxval: int) -> Pointwise:
    return Pointwise(expr=Apply("sub", (Const(Fraction(maxval)), Var())))


def box_mean(k: int) -> Conv2d:
    """k x k box average with exact 1/k^2 scaling."""
    row = tuple(Fraction(1) for _ in range(k))
    return Conv2d(kernel=tuple(row for _ in range(k)), post_scale=Fraction(1, k * k))


def median() -> Rank:
    return Rank(statistic="median")


def erode() -> Rank:
    return Rank(statistic="min")


def dilate() -> Rank:
    return Rank(statistic="max")


def hough_lines() -> GlobalOp:
    return GlobalOp(name="hough_lines")


def histogram() -> GlobalOp:
    return GlobalOp(name="histogram")

"""Formal descriptions of an operator's per-frame computation.

Five kinds cover the usual pipeline stages: per-pixel arithmetic
(``Pointwise``), windowed stencils (``Conv2d``, ``Rank``), whole-frame
transforms (``GlobalOp``), and ordered combinations (``Composite``).
A composite with no stages is *opaque*: rate and bandwidth analysis still
work from the declared input/output areas, but functional execution and
compute-cost estimation refuse it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

ONE = Fraction(1)

# Pointwise expression functions and their arities.  `compare` yields 1 when
# its first argument is >= the second, else 0, which makes thresholds binary.
FUNCTIONS = {
    "add": 2,
    "sub": 2,
    "mul": 2,
    "div": 2,
    "abs": 1,
    "min": 2,
    "max": 2,
    "clamp": 3,
    "compare": 2,
}

RANK_STATISTICS = ("min", "max", "median")
GLOBAL_NAMES = ("hough_lines", "histogram")
COMBINES = ("sum", "magnitude", "last")


@dataclass(frozen=True)
class Var:
    """The centre pixel of the input window (the only addressable variable)."""

    name: str = "p"

    def __post_init__(self):
        if self.name != "p":
            raise ValueError(f"unknown variable {self.name!r}; only 'p' exists")


@dataclass(frozen=True)
class Const:
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Apply:
    fn: str
    args: tuple["Expr", ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        arity = FUNCTIONS.get(self.fn)
        if arity is None:
            raise ValueError(f"unknown function {self.fn!r}")
        if len(self.args) != arity:
            raise ValueError(f"{self.fn} expects {arity} arguments, got {len(self.args)}")


Expr = Union[Var, Const, Apply]


def node_count(expr: Expr) -> int:
    """Number of nodes in an expression tree (the pointwise cost measure)."""
    if isinstance(expr, Apply):
        return 1 + sum(node_count(a) for a in expr.args)
    return 1


@dataclass(frozen=True)
class Conv2d:
    """Windowed weighted sum; kernel rows top-to-bottom, no kernel flip.

    The weighted sum is multiplied by `post_scale` and rounded half away
    from zero, so integer kernels stay exact.
    """

    kernel: tuple[tuple[Fraction, ...], ...]
    post_scale: Fraction = ONE

    def __post_init__(self):
        rows = tuple(tuple(Fraction(v) for v in row) for row in self.kernel)
        object.__setattr__(self, "kernel", rows)
        object.__setattr__(self, "post_scale", Fraction(self.post_scale))
        if not rows or not rows[0]:
            raise ValueError("conv2d kernel must be non-empty")
        if len({len(r) for r in rows}) != 1:
            raise ValueError("conv2d kernel rows must have equal length")

    @property
    def width(self) -> int:
        return len(self.kernel[0])

    @property
    def height(self) -> int:
        return len(self.kernel)


@dataclass(frozen=True)
class Pointwise:
    expr: Expr


@dataclass(frozen=True)
class Rank:
    """Order statistic over the input window."""

    statistic: str

    def __post_init__(self):
        if self.statistic not in RANK_STATISTICS:
            raise ValueError(f"unknown rank statistic {self.statistic!r}")


@dataclass(frozen=True)
class GlobalOp:
    """A named whole-frame transform from the built-in library."""

    name: str

    def __post_init__(self):
        if self.name not in GLOBAL_NAMES:
            raise ValueError(f"unknown global operation {self.name!r}")


@dataclass(frozen=True)
class Composite:
    """Stages applied independently to the input, then combined per pixel."""

    stages: tuple["BaseCalc", ...]
    combine: str = "last"

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if self.combine not in COMBINES:
            raise ValueError(f"unknown combine mode {self.combine!r}")


BaseCalc = Union[Conv2d, Pointwise, Rank, GlobalOp, Composite]


def opaque() -> Composite:
    """The empty computation: analysable from its areas, not executable."""
    return Composite(stages=(), combine="last")


def is_opaque(calc: BaseCalc) -> bool:
    return isinstance(calc, Composite) and not calc.stages


def contains_global(calc: BaseCalc) -> bool:
    """True when the calc is or contains a whole-frame stage."""
    if isinstance(calc, GlobalOp):
        return True
    if isinstance(calc, Composite):
        return any(contains_global(s) for s in calc.stages)
    return False

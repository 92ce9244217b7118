"""Renyi-order arithmetic and the classification of related order triples.

Orders are plain floats; ``math.inf`` is a valid order.  The map
``x -> x/(x-1)`` (called ``ratio`` here) is its own inverse, which makes the
relation ratio(alpha) = ratio(beta) + ratio(gamma) solvable in closed form.
At order 1 the ratio is infinite; the relation is then taken to hold only
for the joint limit alpha = beta = gamma = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .linalg import ValidationError

INF = math.inf
RELATION_TOL = 1e-9
BOUNDARY_TOL = 1e-12

CASES = ("Case1", "Case2", "Case3", "Case4")


def check_order(a) -> float:
    a = float(a)
    if not a > 0:
        raise ValidationError(f"Renyi order must be positive, got {a!r}")
    return a


def is_one(a: float) -> bool:
    return a == 1.0


def prime(a: float) -> float:
    """(a - 1) / a, equal to 1 at a = inf."""
    a = check_order(a)
    return 1.0 if math.isinf(a) else (a - 1.0) / a


def ratio(a: float) -> float:
    """a / (a - 1) = 1 / prime(a); inf at a = 1."""
    a = check_order(a)
    if math.isinf(a):
        return 1.0
    if a == 1.0:
        return INF
    return a / (a - 1.0)


def from_ratio(r: float) -> float:
    """Inverse of `ratio` (the same map)."""
    if math.isinf(r):
        return 1.0
    if r == 1.0:
        return INF
    return r / (r - 1.0)


def hat(a: float) -> float:
    """a / (2a - 1); inf at a = 1/2, 1/2 at a = inf, negative below 1/2."""
    a = check_order(a)
    if math.isinf(a):
        return 0.5
    if a == 0.5:
        return INF
    return a / (2.0 * a - 1.0)


class DerivedQuantities(NamedTuple):
    prime: float
    hat: float


def derived_quantities(a) -> DerivedQuantities:
    return DerivedQuantities(prime(a), hat(a))


def sign_of(x: float) -> int:
    return (x > 0) - (x < 0)


def sign_product(*orders: float) -> int:
    """Sign of prod (a_i - 1); inf counts as positive."""
    s = 1
    for a in orders:
        s *= 1 if math.isinf(a) else sign_of(a - 1.0)
    return s


SIGN_NAMES = {1: "positive", -1: "negative", 0: "zero"}


def relation_residual(a: float, b: float, g: float) -> float:
    """Scaled residual of ratio(a) = ratio(b) + ratio(g).

    The difference is divided by 1 + max |ratio| so that orders near 1
    (with large ratios) are judged at relative precision.
    """
    ones = [is_one(check_order(x)) for x in (a, b, g)]
    if any(ones):
        return 0.0 if all(ones) else INF
    ra, rb, rg = ratio(a), ratio(b), ratio(g)
    return abs(ra - rb - rg) / (1.0 + max(abs(ra), abs(rb), abs(rg)))


def solve_third(a, b) -> float | None:
    """The gamma with ratio(a) = ratio(b) + ratio(gamma), or None if gamma < 1/2."""
    a, b = check_order(a), check_order(b)
    if is_one(a) or is_one(b):
        return 1.0 if is_one(a) and is_one(b) else None
    r = ratio(a) - ratio(b)
    if abs(r - 1.0) <= BOUNDARY_TOL * max(1.0, abs(ratio(a))):
        return INF
    if r == 0.0:
        return None
    g = r / (r - 1.0)
    if abs(g - 0.5) <= BOUNDARY_TOL:
        g = 0.5
    if not g >= 0.5:
        return None
    return g


def _in(x: float, lo: float, hi: float, lo_closed: bool, hi_closed: bool) -> bool:
    """Interval membership; an open upper end at inf admits inf itself."""
    above = x >= lo - BOUNDARY_TOL if lo_closed else x > lo
    if math.isinf(hi):
        return above
    below = x <= hi if hi_closed else x < hi
    return above and below


@dataclass(frozen=True)
class OrderTriple:
    """(alpha, beta, gamma) with its case and sign of prod(order - 1)."""

    alpha: float
    beta: float
    gamma: float
    residual: float
    case: str
    sign: str

    @property
    def valid(self) -> bool:
        return self.case != "Invalid"

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)


def _case_of(a: float, b: float, g: float) -> str | None:
    # b >= g by canonicalization
    if _in(a, 1, 2, False, False) and _in(b, 1, INF, False, False) and _in(g, 1, INF, False, False):
        return "Case1"
    if _in(a, 2 / 3, 1, True, False) and _in(b, 0.5, 1, True, False) and _in(g, 0.5, 1, True, False):
        return "Case2"
    if _in(g, 0.5, 1, True, False) and _in(b, 1, 2, False, False) and _in(a, 1, INF, False, False):
        return "Case3"
    if _in(a, 0, 1, False, False) and _in(g, 0.5, 1, True, False) and _in(b, 1, INF, False, False):
        return "Case4"
    return None


def classify_triple(a, b, g, tol: float = RELATION_TOL) -> OrderTriple:
    """Assign the case (Case1-Case4) of a related triple (beta <-> gamma symmetric)."""
    a, b, g = check_order(a), check_order(b), check_order(g)
    res = relation_residual(a, b, g)
    sgn = sign_product(a, b, g)
    if is_one(a) and is_one(b) and is_one(g):
        case = "Order1"
    elif res > tol or min(b, g) < 0.5 - BOUNDARY_TOL:
        case = "Invalid"
    else:
        hi, lo = (b, g) if b >= g else (g, b)
        case = _case_of(a, hi, lo) or "Invalid"
    return OrderTriple(a, b, g, res, case, SIGN_NAMES[sgn])


@dataclass(frozen=True)
class OrderQuad:
    alpha: float
    beta: float
    gamma: float
    delta: float
    residual: float

    @property
    def valid(self) -> bool:
        return self.residual <= RELATION_TOL


def make_quad(a, b, g, d) -> OrderQuad:
    """ratio(d) = ratio(a) + ratio(b) + ratio(g), with the all-ones limit accepted."""
    a, b, g, d = (check_order(x) for x in (a, b, g, d))
    ones = [is_one(x) for x in (a, b, g, d)]
    if any(ones):
        res = 0.0 if all(ones) else INF
    else:
        rs = [ratio(x) for x in (a, b, g, d)]
        res = abs(rs[3] - rs[0] - rs[1] - rs[2]) / (1.0 + max(abs(r) for r in rs))
    return OrderQuad(a, b, g, d, res)


def solve_delta(a, b, g) -> float | None:
    ones = [is_one(check_order(x)) for x in (a, b, g)]
    if any(ones):
        return 1.0 if all(ones) else None
    d = from_ratio(ratio(a) + ratio(b) + ratio(g))
    return d if d > 0.5 else None


def theorem2_feasible(a, b, g, tol: float = RELATION_TOL) -> bool:
    """alpha > 2/3, 1/2 <= beta, gamma <= 4/3, ratio(a) <= 1/(b-1) + 1/(g-1), sign < 0.

    The 4/3 upper end is closed so that the alpha -> inf pairing (1/2, 4/3)
    is admitted; alpha = beta = gamma = 1 is admitted as the Hall limit.
    """
    a, b, g = check_order(a), check_order(b), check_order(g)
    if is_one(a) and is_one(b) and is_one(g):
        return True
    if not a > 2 / 3:
        return False
    if not (_in(b, 0.5, 4 / 3, True, True) and _in(g, 0.5, 4 / 3, True, True)):
        return False
    if sign_product(a, b, g) >= 0:
        return False
    lhs = ratio(a)
    rhs = 1.0 / (b - 1.0) + 1.0 / (g - 1.0)
    return lhs <= rhs + tol * (1.0 + abs(lhs) + abs(rhs))


def cor4_partner(a) -> float:
    """Second mutual-information order (2a - 3)/(a - 2) paired with a at min-entropy."""
    a = check_order(a)
    if a == 2.0:
        return INF
    return (2.0 * a - 3.0) / (a - 2.0)


# -- sampling --------------------------------------------------------------------


def _uniform(rng, lo, hi):
    return float(rng.uniform(lo, hi))


def sample_triple(case: str, rng: np.random.Generator, margin: float = 0.03) -> OrderTriple:
    """A random related triple from the interior of a case (beta >= gamma)."""
    if case == "Case1":
        # keeps the beta-ratio interval (1, ratio(a) - 1) nonempty after the margins
        a = _uniform(rng, 1 + margin, from_ratio(2 + 3 * margin))
        ra = ratio(a)
        rb = _uniform(rng, 1 + margin, ra - 1 - margin)
        b, g = from_ratio(rb), from_ratio(ra - rb)
    elif case == "Case2":
        a = _uniform(rng, 2 / 3 + margin, 1 - margin)
        ra = ratio(a)
        rb = _uniform(rng, ra + 1, -1)
        b, g = from_ratio(rb), from_ratio(ra - rb)
    elif case == "Case3":
        a = _uniform(rng, 1 + margin, 8)
        g = _uniform(rng, 0.5 + margin, 1 - margin)
        b = from_ratio(ratio(a) - ratio(g))
    elif case == "Case4":
        a = _uniform(rng, 0.3, 1 - margin)
        ra = ratio(a)
        top = min(-1.0, ra - 1.0) - margin
        rg = _uniform(rng, top - 4.0, top)
        g = from_ratio(rg)
        b = from_ratio(ra - rg)
    else:
        raise ValidationError(f"unknown case {case!r}")
    if g > b:
        b, g = g, b
    t = classify_triple(a, b, g)
    if t.case != case:
        # interior sampling can still land on a boundary after rounding
        return sample_triple(case, rng, margin)
    return t

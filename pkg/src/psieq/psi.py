"""Exact Psi_k functions of weight multisets.

``Psi_k(A)`` is ``k!`` times the complete homogeneous symmetric polynomial of
degree ``k`` in the elements of ``A`` (``Psi_0 = 1``, ``Psi_1 = sum``). Values are
maintained incrementally with

    Psi_k(A + {b}) = Psi_k(A) + k * b * Psi_{k-1}(A + {b})

which costs O(kmax) per insertion or removal.

Fractional powers (k-th roots) never touch floating point: they are bracketed
between rationals by exact integer root extraction and the brackets are
tightened until the comparison is decided.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

import gmpy2

# Root brackets start at this many decimal digits and double until decided.
_START_DIGITS = 40
_MAX_DIGITS = 2560


@dataclass(frozen=True)
class PsiAggregate:
    """``(Psi_0, ..., Psi_kmax)`` of an implicit multiset, plus its size."""

    values: tuple[Fraction, ...]
    count: int = 0

    @classmethod
    def empty(cls, kmax: int) -> PsiAggregate:
        return cls((Fraction(1),) + (Fraction(0),) * kmax, 0)

    @property
    def kmax(self) -> int:
        return len(self.values) - 1

    @property
    def load(self) -> Fraction:
        """Sum of the held elements, ``L(A) = Psi_1(A)``."""
        return self.values[1] if len(self.values) > 1 else Fraction(0)

    def __getitem__(self, k: int) -> Fraction:
        return self.values[k]

    def insert(self, w: Fraction) -> PsiAggregate:
        if w < 0:
            raise ValueError(f"multiset elements must be non-negative, got {w}")
        vals = [Fraction(1)]
        for k in range(1, len(self.values)):
            vals.append(self.values[k] + k * w * vals[k - 1])
        return PsiAggregate(tuple(vals), self.count + 1)

    def remove(self, w: Fraction) -> PsiAggregate:
        if self.count <= 0:
            raise ValueError("cannot remove from an empty aggregate")
        if w < 0:
            raise ValueError(f"multiset elements must be non-negative, got {w}")
        cur = self.values
        vals = [Fraction(1)] + [cur[k] - k * w * cur[k - 1] for k in range(1, len(cur))]
        if self.count == 1:
            # an emptied multiset is exactly (1, 0, ..., 0) by definition
            vals = [Fraction(1)] + [Fraction(0)] * (len(cur) - 1)
        return PsiAggregate(tuple(vals), self.count - 1)


def psi_insert(agg: PsiAggregate, w: Fraction) -> PsiAggregate:
    return agg.insert(w)


def psi_remove(agg: PsiAggregate, w: Fraction) -> PsiAggregate:
    return agg.remove(w)


def psi_aggregate(multiset: Iterable[Fraction], kmax: int) -> PsiAggregate:
    if kmax < 0:
        raise ValueError("kmax must be non-negative")
    agg = PsiAggregate.empty(kmax)
    for w in multiset:
        agg = agg.insert(Fraction(w))
    return agg


def psi_vector(multiset: Iterable[Fraction], kmax: int) -> tuple[Fraction, ...]:
    """``(Psi_0(A), ..., Psi_kmax(A))`` by repeated insertion.

    >>> psi_vector([2, 3], 2)
    (Fraction(1, 1), Fraction(5, 1), Fraction(38, 1))
    """
    return psi_aggregate(multiset, kmax).values


def psi(multiset: Iterable[Fraction], k: int) -> Fraction:
    return psi_vector(multiset, k)[k]


def psi_add_element_expansion(values: Sequence[Fraction], b: Fraction, k: int) -> Fraction:
    """Psi_k(A + {b}) from the Psi values of A via the binomial-type expansion."""
    return sum((Fraction(factorial(k), factorial(k - t)) * b**t * values[k - t] for t in range(k + 1)),
               Fraction(0))


def psi_union(a: Sequence[Fraction], b: Sequence[Fraction], k: int) -> Fraction:
    """Psi_k(A + B) from the Psi vectors of A and B (convolution identity)."""
    return sum((comb(k, t) * a[k - t] * b[t] for t in range(k + 1)), Fraction(0))


# ---------------------------------------------------------------------------
# rational brackets for k-th roots


def root_bounds(x: Fraction, k: int, digits: int = _START_DIGITS) -> tuple[Fraction, Fraction]:
    """Rationals ``lo <= x**(1/k) <= hi`` with ``hi - lo <= 10**-digits``.

    ``lo == hi`` exactly when ``x`` is a k-th power of a rational.
    """
    if x < 0:
        raise ValueError("root of a negative number")
    if k < 1:
        raise ValueError("root order must be >= 1")
    if x == 0 or k == 1:
        return x, x
    p, q = x.numerator, x.denominator
    rp, ep = gmpy2.iroot(gmpy2.mpz(p), k)
    rq, eq = gmpy2.iroot(gmpy2.mpz(q), k)
    if ep and eq:
        r = Fraction(int(rp), int(rq))
        return r, r
    # (p/q)^(1/k) = (p q^(k-1))^(1/k) / q
    scale = 10**digits
    root, _ = gmpy2.iroot(gmpy2.mpz(p) * gmpy2.mpz(q) ** (k - 1) * gmpy2.mpz(scale) ** k, k)
    root = int(root)
    return Fraction(root, q * scale), Fraction(root + 1, q * scale)


def rational_kth_root(x: Fraction, k: int) -> Fraction | None:
    lo, hi = root_bounds(x, k)
    return lo if lo == hi else None


def leq_power_of_root_sum(lhs: Fraction, x: Fraction, y: Fraction, k: int) -> bool:
    """Decide ``lhs <= (x**(1/k) + y**(1/k))**k`` exactly for non-negative rationals.

    Handles the equality cases (a vanishing term, or ``x/y`` a rational k-th
    power) in closed form; otherwise tightens root brackets until the sign is
    known. Returns ``False`` if still undecided at the precision cap.
    """
    if x < 0 or y < 0:
        raise ValueError("terms must be non-negative")
    if x == 0 or y == 0:
        return lhs <= x + y
    ratio = rational_kth_root(x / y, k)
    if ratio is not None:
        return lhs <= y * (1 + ratio) ** k
    digits = _START_DIGITS
    while digits <= _MAX_DIGITS:
        xl, xh = root_bounds(x, k, digits)
        yl, yh = root_bounds(y, k, digits)
        if lhs <= (xl + yl) ** k:
            return True
        if lhs > (xh + yh) ** k:
            return False
        digits *= 2
    return False


def check_psi_properties(multiset: Sequence[Fraction], b: Fraction, k: int) -> dict[str, bool]:
    """Evaluate the six standard Psi_k inequalities/identities at one point.

    Keys ``a``..``f``; all should be ``True`` for ``k >= 1`` and non-negative data.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    base = psi_vector(multiset, k)
    grown = psi_vector(list(multiset) + [b], k)
    load = base[1]
    solo_k = factorial(k) * b**k
    return {
        "a": load**k <= base[k] <= factorial(k) * load**k,
        "b": base[k - 1] ** k <= base[k] ** (k - 1),
        "c": grown[k] == psi_add_element_expansion(base, b, k),
        "d": grown[k] - base[k] == k * b * grown[k - 1],
        "e": base[k] <= k * base[1] * base[k - 1],
        "f": leq_power_of_root_sum(grown[k], solo_k, base[k], k),
    }


def check_minkowski(alphas: Sequence[Fraction], betas: Sequence[Fraction], k: int) -> bool:
    """``sum (a_t + b_t)^k <= ((sum a_t^k)^(1/k) + (sum b_t^k)^(1/k))^k``, decided exactly."""
    if len(alphas) != len(betas):
        raise ValueError("vectors must have equal length")
    lhs = sum(((a + b) ** k for a, b in zip(alphas, betas)), Fraction(0))
    x = sum((Fraction(a) ** k for a in alphas), Fraction(0))
    y = sum((Fraction(b) ** k for b in betas), Fraction(0))
    return leq_power_of_root_sum(lhs, x, y, k)


def check_concavity_claim(z: Fraction, alpha: Fraction) -> bool:
    """Decide ``z**alpha - 1 >= alpha * (z - 1) * z**(alpha - 1)`` for z > 1, 0 < alpha < 1.

    Rewritten as ``y * (1 - alpha*(z-1)/z) >= 1`` with ``y = z**alpha``; the
    coefficient is positive, so the lower bracket of ``y`` decides it
    conservatively.
    """
    z, alpha = Fraction(z), Fraction(alpha)
    if z <= 1:
        raise ValueError(f"z must exceed 1, got {z}")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    coef = 1 - alpha * (z - 1) / z
    power = z ** alpha.numerator
    digits = _START_DIGITS
    while digits <= _MAX_DIGITS:
        lo, hi = root_bounds(power, alpha.denominator, digits)
        if lo * coef >= 1:
            return True
        if hi * coef < 1:
            return False
        digits *= 2
    return False

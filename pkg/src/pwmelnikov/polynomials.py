"""Univariate polynomials in h with exact rational coefficients."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence


def as_fraction(value) -> Fraction:
    """Convert ints, Fractions, floats and 'p/q' strings to an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


class RationalPoly:
    """Polynomial c0 + c1 h + c2 h^2 + ... over the rationals.

    Coefficients are stored ascending with trailing zeros stripped, so the
    zero polynomial has an empty coefficient tuple and degree -1.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        c = [as_fraction(v) for v in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(c)

    @classmethod
    def constant(cls, value) -> "RationalPoly":
        return cls([value])

    @classmethod
    def monomial(cls, power: int, value=1) -> "RationalPoly":
        return cls([0] * power + [value])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __repr__(self) -> str:
        if not self.coeffs:
            return "RationalPoly(0)"
        terms = []
        for k, c in enumerate(self.coeffs):
            if c:
                terms.append(f"({c})" + ("" if k == 0 else f"*h^{k}"))
        return "RationalPoly(" + " + ".join(terms) + ")"

    def __eq__(self, other) -> bool:
        if isinstance(other, RationalPoly):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self.coeffs == RationalPoly([other]).coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __add__(self, other) -> "RationalPoly":
        other = _lift(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (n - len(other.coeffs))
        return RationalPoly(x + y for x, y in zip(a, b))

    __radd__ = __add__

    def __neg__(self) -> "RationalPoly":
        return RationalPoly(-c for c in self.coeffs)

    def __sub__(self, other) -> "RationalPoly":
        return self + (-_lift(other))

    def __rsub__(self, other) -> "RationalPoly":
        return _lift(other) - self

    def __mul__(self, other) -> "RationalPoly":
        if not isinstance(other, RationalPoly):
            s = as_fraction(other)
            return RationalPoly(s * c for c in self.coeffs)
        if not self.coeffs or not other.coeffs:
            return RationalPoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return RationalPoly(out)

    __rmul__ = __mul__

    def shift(self, k: int) -> "RationalPoly":
        """Multiply by h**k (k >= 0)."""
        if k < 0:
            raise ValueError("shift expects a nonnegative power")
        if not self.coeffs or k == 0:
            return self
        return RationalPoly((Fraction(0),) * k + self.coeffs)

    def low_order(self) -> int:
        """Largest k with h**k dividing the polynomial (-1 for zero)."""
        for k, c in enumerate(self.coeffs):
            if c:
                return k
        return -1

    def unshift(self, k: int) -> "RationalPoly":
        """Exact division by h**k; raises if h**k does not divide."""
        if any(self.coeffs[:k]):
            raise ValueError(f"h^{k} does not divide {self!r}")
        return RationalPoly(self.coeffs[k:])

    def deriv(self) -> "RationalPoly":
        return RationalPoly(k * c for k, c in enumerate(self.coeffs) if k > 0)

    def __call__(self, h):
        """Horner evaluation; exact for Fraction input, float otherwise."""
        if isinstance(h, (int, Fraction)):
            acc = Fraction(0)
            for c in reversed(self.coeffs):
                acc = acc * h + c
            return acc
        acc = 0.0 * h
        for c in reversed(self.coeffs):
            acc = acc * h + float(c)
        return acc

    def to_pairs(self) -> list[list[int]]:
        return [[c.numerator, c.denominator] for c in self.coeffs]

    @classmethod
    def from_pairs(cls, pairs: Sequence[Sequence[int]]) -> "RationalPoly":
        return cls(Fraction(int(p), int(q)) for p, q in pairs)


def _lift(value) -> RationalPoly:
    if isinstance(value, RationalPoly):
        return value
    return RationalPoly([value])


ZERO = RationalPoly()
ONE = RationalPoly([1])
H = RationalPoly([0, 1])


class PolyMatrix:
    """Small dense matrix of RationalPoly entries (row-major lists)."""

    def __init__(self, rows: Sequence[Sequence]):
        self.rows = [[_lift(v) for v in row] for row in rows]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.rows[0]) if self.rows else 0

    @classmethod
    def linear(cls, A, B) -> "PolyMatrix":
        """The matrix A*h + B for rational matrices A, B."""
        return cls([[RationalPoly([b, a]) for a, b in zip(ra, rb)] for ra, rb in zip(A, B)])

    @classmethod
    def identity(cls, n: int) -> "PolyMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __matmul__(self, other: "PolyMatrix") -> "PolyMatrix":
        n, k = self.shape
        k2, m = other.shape
        if k != k2:
            raise ValueError("shape mismatch")
        out = []
        for i in range(n):
            row = []
            for j in range(m):
                acc = ZERO
                for t in range(k):
                    acc = acc + self.rows[i][t] * other.rows[t][j]
                row.append(acc)
            out.append(row)
        return PolyMatrix(out)

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        return PolyMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other: "PolyMatrix") -> "PolyMatrix":
        return PolyMatrix([[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def scale(self, p) -> "PolyMatrix":
        return PolyMatrix([[a * p for a in r] for r in self.rows])

    def left_apply(self, vec: Sequence[RationalPoly]) -> list[RationalPoly]:
        """Row vector times matrix."""
        n, m = self.shape
        out = []
        for j in range(m):
            acc = ZERO
            for i in range(n):
                acc = acc + vec[i] * self.rows[i][j]
            out.append(acc)
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyMatrix) and self.rows == other.rows

    def __repr__(self) -> str:
        return f"PolyMatrix({self.rows!r})"

    def evaluate(self, h: float):
        import numpy as np

        return np.array([[p(h) for p in row] for row in self.rows], dtype=float)


def frac_matrix(rows) -> list[list[Fraction]]:
    return [[as_fraction(v) for v in row] for row in rows]


def frac_inverse(M: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    """Gauss-Jordan inverse of a small rational matrix."""
    n = len(M)
    a = [list(map(as_fraction, row)) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [v / p for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]

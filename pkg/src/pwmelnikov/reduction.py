"""Exact reduction of Abelian integrals to a finite basis.

Every I_{i,j} is a combination of the basis integrals with coefficients that
are polynomials in h, divided by a power of h (LV only):

    LV basis  I_{0,1}, I_{-1,1}, I_{1,0}, I_{0,0}, I_{0,2}
    BT basis  I_{0,0}, I_{1,0}, I_{0,1}, I_{1,1}

All arithmetic is over the rationals. Decompositions are memoised per system
and are immutable once stored.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .errors import InvariantViolation, UnsupportedIndexError
from .polynomials import ONE, ZERO, RationalPoly
from .systems import BT, LV, Perturbation, SystemId

Index = tuple[int, int]

BASIS: dict[SystemId, tuple[Index, ...]] = {
    LV: ((0, 1), (-1, 1), (1, 0), (0, 0), (0, 2)),
    BT: ((0, 0), (1, 0), (0, 1), (1, 1)),
}


def basis_label(index: Index) -> str:
    return f"I[{index[0]},{index[1]}]"


@dataclass(frozen=True)
class BasisDecomposition:
    """value(h) = h^(-denom_power) * sum_e coeffs[e](h) * e(h)."""

    sys: SystemId
    denom_power: int
    coeffs: Mapping[Index, RationalPoly]

    def __post_init__(self):
        if self.denom_power < 0:
            raise ValueError("denom_power must be nonnegative")
        if self.sys is BT and self.denom_power:
            raise ValueError("BT decompositions never carry a power of h in the denominator")
        basis = BASIS[self.sys]
        if set(self.coeffs) != set(basis):
            raise ValueError("coefficients must be given for exactly the basis integrals")
        object.__setattr__(self, "coeffs", {e: self.coeffs[e] for e in basis})

    @classmethod
    def zero(cls, sys: SystemId) -> "BasisDecomposition":
        return cls(sys, 0, {e: ZERO for e in BASIS[sys]})

    @classmethod
    def element(cls, sys: SystemId, index: Index) -> "BasisDecomposition":
        return cls(sys, 0, {e: (ONE if e == index else ZERO) for e in BASIS[sys]})

    def is_zero(self) -> bool:
        return all(p.is_zero() for p in self.coeffs.values())

    def lift(self, m: int) -> "BasisDecomposition":
        """Same value written over h^m (m >= denom_power)."""
        k = m - self.denom_power
        if k < 0:
            raise ValueError("cannot lower the denominator power by lifting")
        return BasisDecomposition(self.sys, m, {e: p.shift(k) for e, p in self.coeffs.items()})

    def normalized(self) -> "BasisDecomposition":
        """Cancel common factors of h so that denom_power is minimal."""
        if self.is_zero():
            return BasisDecomposition.zero(self.sys)
        k = min([p.low_order() for p in self.coeffs.values() if p] + [self.denom_power])
        if k == 0:
            return self
        return BasisDecomposition(self.sys, self.denom_power - k, {e: p.unshift(k) for e, p in self.coeffs.items()})

    def __add__(self, other: "BasisDecomposition") -> "BasisDecomposition":
        m = max(self.denom_power, other.denom_power)
        a, b = self.lift(m), other.lift(m)
        return BasisDecomposition(self.sys, m, {e: a.coeffs[e] + b.coeffs[e] for e in a.coeffs}).normalized()

    def scaled(self, factor) -> "BasisDecomposition":
        """Multiply by a rational or a RationalPoly in h."""
        return BasisDecomposition(self.sys, self.denom_power,
                                  {e: p * factor for e, p in self.coeffs.items()}).normalized()

    def over_h(self) -> "BasisDecomposition":
        if self.sys is BT:
            raise UnsupportedIndexError("BT reductions never divide by h")
        return BasisDecomposition(self.sys, self.denom_power + 1, dict(self.coeffs)).normalized()

    def degrees(self) -> dict[Index, int]:
        return {e: p.degree for e, p in self.coeffs.items()}

    def evaluate(self, h: float, basis_values: Mapping[Index, float]) -> float:
        total = sum(p(h) * basis_values[e] for e, p in self.coeffs.items())
        return total / h**self.denom_power if self.denom_power else total

    def to_dict(self) -> dict:
        return {
            "system": self.sys.value,
            "denom_power": self.denom_power,
            "coefficients": [
                {"basis": basis_label(e), "i": e[0], "j": e[1], "poly": p.to_pairs()} for e, p in self.coeffs.items()
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "BasisDecomposition":
        sys = SystemId.parse(data["system"])
        coeffs = {(int(c["i"]), int(c["j"])): RationalPoly.from_pairs(c["poly"]) for c in data["coefficients"]}
        return cls(sys, int(data["denom_power"]), coeffs)


# --- LV recurrences -------------------------------------------------------
# On the level curve y^2 = 2h x^3 + 9/4 x^2 - 3/2 x + 1/4 (integrals carry x^(i-4)).


def _lv_reduce(i: int, j: int, get) -> BasisDecomposition:
    E = lambda idx: BasisDecomposition.element(LV, idx)  # noqa: E731
    h = RationalPoly([0, 1])
    if (i, j) in BASIS[LV]:
        return E((i, j))
    if j >= 2:
        w = 2 * i + 3 * j - 6
        if w != 0:
            k = Fraction(2 * j, w)
            return (get(i + 2, j - 2).scaled(k * Fraction(9, 8))
                    + get(i + 1, j - 2).scaled(k * Fraction(-3, 2))
                    + get(i, j - 2).scaled(k * Fraction(3, 8)))
        # multiply the curve equation through by x^(i-4) y^(j-2)
        return (get(i + 3, j - 2).scaled(2 * h)
                + get(i + 2, j - 2).scaled(Fraction(9, 4))
                + get(i + 1, j - 2).scaled(Fraction(-3, 2))
                + get(i, j - 2).scaled(Fraction(1, 4)))
    if j == 1:
        if i == 1:
            return E((0, 1))
        if i >= 2:
            return _lv_lower_i(i, 1, get)
        return _lv_raise_i(i, 1, get)
    if j == 0:
        if i == 2:
            return E((1, 0)).scaled(Fraction(4, 3)) + E((0, 0)).scaled(Fraction(-1, 3))
        if i == 3:
            return (E((0, 2)).scaled(Fraction(1, 2)) + E((1, 0)).scaled(Fraction(-3, 4))
                    + E((0, 0)).scaled(Fraction(1, 4))).over_h()
        if i >= 4:
            return _lv_lower_i(i, 0, get)
        return _lv_raise_i(i, 0, get)
    raise UnsupportedIndexError(f"LV integral I[{i},{j}] has a negative y-power")


def _lv_i_relation(i: int, j: int):
    """Coefficients of (2i+3j-6) h I_{i,j} = c1 I_{i-1,j} + c2 I_{i-2,j} + c3 I_{i-3,j}."""
    return (2 * i + 3 * j - 6,
            Fraction(-9, 4) * (i + j - 4),
            Fraction(3, 4) * (2 * i + j - 10),
            Fraction(-(i - 6), 4))


def _lv_lower_i(i: int, j: int, get) -> BasisDecomposition:
    w, c1, c2, c3 = _lv_i_relation(i, j)
    out = get(i - 1, j).scaled(c1) + get(i - 2, j).scaled(c2) + get(i - 3, j).scaled(c3)
    return out.scaled(Fraction(1, w)).over_h()


def _lv_raise_i(i: int, j: int, get) -> BasisDecomposition:
    # the same relation written at i+3 and solved for its lowest term
    w, c1, c2, c3 = _lv_i_relation(i + 3, j)
    h = RationalPoly([0, 1])
    out = get(i + 3, j).scaled(h * w) + get(i + 2, j).scaled(-c1) + get(i + 1, j).scaled(-c2)
    return out.scaled(1 / c3)


# --- BT recurrences -------------------------------------------------------
# y^2 = 2h - 2x + 2/3 x^3.


def _bt_reduce(i: int, j: int, get) -> BasisDecomposition:
    if i < 0 or j < 0:
        raise UnsupportedIndexError(f"BT integral I[{i},{j}] needs nonnegative indices")
    if (i, j) in BASIS[BT]:
        return BasisDecomposition.element(BT, (i, j))
    if j >= 2:
        k = Fraction(6 * j, 2 * i + 3 * j + 2)
        return get(i, j - 2).scaled(RationalPoly([0, k])) + get(i + 1, j - 2).scaled(k * Fraction(-2, 3))
    if i == 2:
        return get(0, j)
    return get(i - 2, j) + get(i - 3, j + 2).scaled(Fraction(-(i - 2), j + 2))


_REDUCERS = {LV: _lv_reduce, BT: _bt_reduce}
_MEMO: dict[SystemId, dict[Index, BasisDecomposition]] = {LV: {}, BT: {}}
_LOCK = threading.Lock()


def reduce_monomial(sys: SystemId, i: int, j: int) -> BasisDecomposition:
    """Decompose I_{i,j} over the basis of ``sys`` exactly."""
    if j < 0:
        raise UnsupportedIndexError("the y-power must be nonnegative")
    memo = _MEMO[sys]
    hit = memo.get((i, j))
    if hit is not None:
        return hit
    reducer = _REDUCERS[sys]
    # explicit stack so that deep (i, j) never hit the recursion limit
    stack = [(i, j)]
    while stack:
        key = stack[-1]
        if key in memo:
            stack.pop()
            continue
        missing = []

        def get(a, b):
            got = memo.get((a, b))
            if got is None:
                if b < 0:
                    raise UnsupportedIndexError(f"I[{a},{b}] is not reachable")
                missing.append((a, b))
                return BasisDecomposition.zero(sys)
            return got

        value = reducer(key[0], key[1], get)
        if missing:
            if len(stack) > 100_000:
                raise UnsupportedIndexError(f"reduction of I[{i},{j}] does not terminate")
            stack.extend(missing)
            continue
        with _LOCK:
            memo.setdefault(key, value)
        stack.pop()
    return memo[(i, j)]


# --- shift coefficients ---------------------------------------------------


def rho_from_perturbation(sys: SystemId, p: Perturbation) -> dict[Index, Fraction]:
    """Weights rho_{i,j} with M(h) = sum rho_{i,j} I_{i,j}(h).

    The lower-branch integrals are folded in with J_{i,j} = (-1)^(j+1) I_{i,j},
    and each f-monomial's dy-integral becomes a dx-integral through
    -int x^k y^j dy = k/(j+1) int x^(k-1) y^(j+1) dx.
    """
    off = sys.x_power_offset
    rho: dict[Index, Fraction] = {}

    def add(key, value):
        if value:
            rho[key] = rho.get(key, Fraction(0)) + value

    for (i, j), c in p.b_plus.items():
        add((i, j), c)
    for (i, j), c in p.b_minus.items():
        add((i, j), c * (-1) ** (j + 1))
    for coeffs, lower in ((p.a_plus, False), (p.a_minus, True)):
        for (i, j), c in coeffs.items():
            k = i + off
            if k == 0:
                continue
            w = Fraction(k, j + 1) * c
            if lower:
                w *= (-1) ** (j + 2)
            add((i - 1, j + 1), w)
    return {k: v for k, v in sorted(rho.items()) if v}


# --- representation -------------------------------------------------------


def target_denom_power(sys: SystemId, n: int) -> int:
    """Power of h in the denominator of the assembled representation."""
    if sys is BT or n <= 1:
        return 0
    return n - 2 if n <= 3 else n - 3


def degree_caps(sys: SystemId, n: int) -> dict[Index, int]:
    """Upper bounds on coefficient degrees (over h^target_denom_power); -1 means identically zero."""
    if sys is BT:
        return {(0, 0): n // 2, (1, 0): (n - 1) // 2, (0, 1): (n - 1) // 2, (1, 1): (n - 2) // 2}
    m = target_denom_power(sys, n)
    caps = {e: m for e in BASIS[LV]}
    if n == 1:
        caps[(0, 2)] = -1
    return caps


@dataclass(frozen=True)
class MelnikovRepresentation:
    sys: SystemId
    n: int
    decomposition: BasisDecomposition

    def over_target(self) -> BasisDecomposition | None:
        """Decomposition over h^target_denom_power, or None if that power is too small."""
        m = target_denom_power(self.sys, self.n)
        if self.decomposition.denom_power > m:
            return None
        return self.decomposition.lift(m)

    def degree_violations(self) -> list[str]:
        """Human-readable list of broken degree bounds (empty when all hold)."""
        lifted = self.over_target()
        if lifted is None:
            return [f"denominator h^{self.decomposition.denom_power} exceeds h^{target_denom_power(self.sys, self.n)}"]
        out = []
        for e, cap in degree_caps(self.sys, self.n).items():
            d = lifted.coeffs[e].degree
            if d > cap:
                out.append(f"{basis_label(e)}: degree {d} > {cap}")
        return out

    def check_degrees(self) -> None:
        bad = self.degree_violations()
        if bad:
            raise InvariantViolation(f"{self.sys.value} n={self.n}: " + "; ".join(bad))

    def block(self, name: str) -> dict[Index, RationalPoly]:
        """Coefficients of one block over the target denominator.

        LV: 'sigma' on (I_{0,1}, I_{-1,1}), 'tau' on (I_{1,0}, I_{0,0}, I_{0,2}).
        BT: 'first' on (I_{0,0}, I_{1,0}), 'second' on (I_{0,1}, I_{1,1}).
        """
        names = {LV: {"sigma": ((0, 1), (-1, 1)), "tau": ((1, 0), (0, 0), (0, 2))},
                 BT: {"first": ((0, 0), (1, 0)), "second": ((0, 1), (1, 1))}}[self.sys]
        lifted = self.over_target() or self.decomposition
        return {e: lifted.coeffs[e] for e in names[name]}

    def __add__(self, other: "MelnikovRepresentation") -> "MelnikovRepresentation":
        return MelnikovRepresentation(self.sys, max(self.n, other.n), self.decomposition + other.decomposition)

    def scaled(self, factor) -> "MelnikovRepresentation":
        return MelnikovRepresentation(self.sys, self.n, self.decomposition.scaled(factor))

    def to_json(self) -> str:
        data = {"n": self.n, **self.decomposition.to_dict()}
        return json.dumps(data, indent=2, sort_keys=False)

    @classmethod
    def from_json(cls, text: str) -> "MelnikovRepresentation":
        data = json.loads(text)
        return cls(SystemId.parse(data["system"]), int(data["n"]), BasisDecomposition.from_dict(data))


def melnikov_representation(sys: SystemId, p: Perturbation) -> MelnikovRepresentation:
    if p.n < 1:
        raise ValueError("perturbation degree must be at least 1")
    total = BasisDecomposition.zero(sys)
    for (i, j), w in rho_from_perturbation(sys, p).items():
        total = total + reduce_monomial(sys, i, j).scaled(w)
    return MelnikovRepresentation(sys, p.n, total.normalized())


def evaluate_representation(rep: MelnikovRepresentation | BasisDecomposition, h: float,
                            basis_values: Mapping[Index, float] | None = None) -> float:
    """Numeric value at h, pairing the exact coefficients with quadrature basis values."""
    from .quadrature import basis_values as compute_basis

    dec = rep.decomposition if isinstance(rep, MelnikovRepresentation) else rep
    if dec.is_zero():
        return 0.0
    if basis_values is None:
        basis_values = compute_basis(dec.sys, h)
    return dec.evaluate(h, basis_values)

"""Picard-Fuchs systems, annihilating operators and Riccati ratios.

Each block V of basis integrals satisfies V = (A h + B) V'. Differentiating
gives (E - A) V' = (A h + B) V'', so whenever E - A is invertible the block
and its first derivative are polynomial combinations of V''. The LV block
(I_{1,0}, I_{0,0}, I_{0,2}) has singular E - A; there V' is the natural frame
and h (2h + 1) V'' is a polynomial combination of V'.

The annihilator L = P2 d^2/dh^2 + P1 d/dh + P0 is found from the kernel of an
exact rational linear system expressing L[c V] = 0 in such a frame.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Sequence

from .errors import InvariantViolation, PreconditionError, RatioDenominatorError, SingularLocusError
from .polynomials import ONE, ZERO, PolyMatrix, RationalPoly, frac_inverse, frac_matrix
from .quadrature import abelian_derivative, abelian_integral
from .reduction import MelnikovRepresentation, reduce_monomial, target_denom_power
from .systems import BT, LV, SystemId, oval_endpoints

Index = tuple[int, int]

BLOCKS: dict[tuple[SystemId, str], tuple[Index, ...]] = {
    (LV, "V1"): ((0, 1), (-1, 1)),
    (LV, "V2"): ((1, 0), (0, 0), (0, 2)),
    (BT, "V1"): ((0, 0), (1, 0)),
    (BT, "V2"): ((0, 1), (1, 1)),
}

# target block of the annihilator and the complementary block, per system
TARGET_BLOCK = {LV: "V1", BT: "V2"}
OTHER_BLOCK = {LV: "V2", BT: "V1"}

SINGULAR_STANDOFF = 1e-3


@dataclass(frozen=True)
class PFSystem:
    sys: SystemId
    block: str
    A: tuple[tuple[Fraction, ...], ...]
    B: tuple[tuple[Fraction, ...], ...]

    @property
    def basis(self) -> tuple[Index, ...]:
        return BLOCKS[(self.sys, self.block)]

    def matrix(self) -> PolyMatrix:
        return PolyMatrix.linear(self.A, self.B)


def _pf(sys, block, A, B) -> PFSystem:
    return PFSystem(sys, block, tuple(map(tuple, frac_matrix(A))), tuple(map(tuple, frac_matrix(B))))


F = Fraction
PF_SYSTEMS: dict[tuple[SystemId, str], PFSystem] = {
    (LV, "V1"): _pf(LV, "V1", [[F(3, 2), 0], [F(3, 2), F(3, 4)]], [[F(9, 8), F(-3, 8)], [F(27, 16), F(-9, 16)]]),
    (LV, "V2"): _pf(
        LV, "V2",
        [[F(11, 2), -1, 0], [10, -1, 0], [F(13, 4), -1, 1]],
        [[F(27, 8), F(-9, 8), 0], [F(27, 4), F(-9, 4), 0], [F(27, 16), F(-9, 16), 0]],
    ),
    (BT, "V1"): _pf(BT, "V1", [[3, 0], [0, F(3, 2)]], [[0, -2], [-1, 0]]),
    (BT, "V2"): _pf(BT, "V2", [[F(6, 5), 0], [0, F(6, 7)]], [[0, F(-4, 5)], [F(-4, 7), 0]]),
}


def pf_system(sys: SystemId, block: str) -> PFSystem:
    return PF_SYSTEMS[(sys, block)]


def _poly_matrix(rows) -> PolyMatrix:
    """Rows of coefficient lists (ascending powers of h)."""
    return PolyMatrix([[RationalPoly(c) for c in row] for row in rows])


# Second-order relations as printed in the literature. BT entries map the
# derivative order k to M(h) with V^(k) = M(h) V''; the LV entry is N(h) with
# h(2h+1) V2'' = N(h) (I_{1,0}', I_{0,0}')^T.
PRINTED_SECOND = {
    (LV, "V2"): _poly_matrix([
        [[F(-171, 18), F(-116, 18)], [0, F(4, 9)]],
        [[F(-513, 18), F(-800, 18)], [0, F(4, 9)]],
        [[-15, -30], [F(1, 2), 1]],
    ]),
    (BT, "V1"): {
        0: _poly_matrix([[[-4, 0, F(-9, 2)], [0, 9]], [[0, F(9, 2)], [-1, 0, F(-9, 2)]]]),
        1: _poly_matrix([[[0, F(-3, 2)], [1]], [[2], [0, -3]]]),
    },
    (BT, "V2"): {
        0: _poly_matrix([[[F(16, 5), 0, F(-36, 5)], []], [[], [F(-16, 7), 0, F(36, 7)]]]),
        1: _poly_matrix([[[0, -6], [4]], [[4], [0, 6]]]),
    },
}


def check_standoff(sys: SystemId, h: float, standoff: float = SINGULAR_STANDOFF) -> None:
    """Refuse energies too close to a singular point of the relations."""
    points = (0.0, -0.5) if sys is LV else (-2.0 / 3.0, 2.0 / 3.0)
    for s in points:
        if abs(h - s) < standoff:
            raise SingularLocusError(f"h = {h!r} is within {standoff} of the singular point {s}")


def block_values(sys: SystemId, block: str, h: float, order: int = 0, tol: float = 1e-12) -> list[float]:
    out = []
    oval = oval_endpoints(sys, h)
    for i, j in BLOCKS[(sys, block)]:
        if order == 0:
            out.append(abelian_integral(sys, i, j, h, tol, oval))
        else:
            out.append(abelian_derivative(sys, i, j, h, order, tol, oval))
    return out


def _max_abs(values) -> float:
    return max(abs(v) for v in values)


def pf_residual(pf: PFSystem, h: float) -> float:
    """max |V - (A h + B) V'| / (1 + max |V|)."""
    V = block_values(pf.sys, pf.block, h)
    dV = block_values(pf.sys, pf.block, h, 1)
    M = pf.matrix().evaluate(h)
    res = [V[r] - sum(M[r][c] * dV[c] for c in range(len(V))) for r in range(len(V))]
    return _max_abs(res) / (1.0 + _max_abs(V))


def differentiated_pf_residual(pf: PFSystem, h: float) -> float:
    """max |(A h + B) V'' - (E - A) V'| / (1 + max |(E - A) V'|)."""
    dV = block_values(pf.sys, pf.block, h, 1)
    d2V = block_values(pf.sys, pf.block, h, 2)
    M = pf.matrix().evaluate(h)
    k = len(dV)
    lhs = [sum(M[r][c] * d2V[c] for c in range(k)) for r in range(k)]
    rhs = [dV[r] - sum(float(pf.A[r][c]) * dV[c] for c in range(k)) for r in range(k)]
    return _max_abs([a - b for a, b in zip(lhs, rhs)]) / (1.0 + _max_abs(rhs))


def derived_second_order(sys: SystemId, block: str):
    """Second-order relations recomputed exactly from the first-order PF pair.

    Same layout as the PRINTED_SECOND entries.
    """
    if (sys, block) == (LV, "V2"):
        return PolyMatrix([row[:2] for row in lv_v2_second_matrix().rows])
    if sys is LV:
        raise PreconditionError("no second-order relation is tabulated for LV/V1")
    fr = frame(sys, block)
    return {0: fr.W0, 1: fr.W1}


def second_order_table(sys: SystemId, block: str, table: str = "printed"):
    if table == "printed":
        if (sys, block) not in PRINTED_SECOND:
            raise PreconditionError(f"no printed second-order relation for {sys.value}/{block}")
        return PRINTED_SECOND[(sys, block)]
    if table == "derived":
        return derived_second_order(sys, block)
    raise ValueError(f"unknown table {table!r}")


def second_order_residual(sys: SystemId, block: str, h: float, table: str = "printed", relations=None,
                          standoff: float = SINGULAR_STANDOFF) -> float:
    """Normalised residual of the second-order relation(s) for one block.

    BT blocks: V = M0(h) V'' and V' = M1(h) V'' (both checked, maximum returned).
    LV/V2: h (2h+1) V2'' = N(h) (I_{1,0}', I_{0,0}'). ``table`` picks the
    printed matrices or the ones derived exactly from the PF pair;
    ``relations`` overrides both.
    """
    check_standoff(sys, h, standoff)
    rel = relations if relations is not None else second_order_table(sys, block, table)
    if sys is LV:
        N = rel
        dV = block_values(LV, "V2", h, 1)
        d2V = block_values(LV, "V2", h, 2)
        Nh = N.evaluate(h)
        w = h * (2 * h + 1)
        lhs = [w * v for v in d2V]
        rhs = [Nh[r][0] * dV[0] + Nh[r][1] * dV[1] for r in range(3)]
        return _max_abs([a - b for a, b in zip(lhs, rhs)]) / (1.0 + _max_abs(lhs))
    d2V = block_values(BT, block, h, 2)
    worst = 0.0
    for order, M in rel.items():
        lhs = block_values(BT, block, h, order)
        Mh = M.evaluate(h)
        rhs = [sum(Mh[r][c] * d2V[c] for c in range(2)) for r in range(2)]
        worst = max(worst, _max_abs([a - b for a, b in zip(lhs, rhs)]) / (1.0 + _max_abs(lhs)))
    return worst


def derive_pf_matrices(sys: SystemId, block: str) -> tuple[list[list[Fraction]], list[list[Fraction]]]:
    """Recompute (A, B) exactly from the reduction engine.

    With D = diag(1/(j+2)) and R(h) = R0 + R1 h the decomposition of the
    shifted integrals I_{i-s, j+2} (s = 3 for LV, 0 for BT), the derivative
    identity gives V = D (R1 V + R V'), hence V = (E - D R1)^{-1} D R V'.
    """
    basis = BLOCKS[(sys, block)]
    shift = 3 if sys is LV else 0
    k = len(basis)
    R0 = [[Fraction(0)] * k for _ in range(k)]
    R1 = [[Fraction(0)] * k for _ in range(k)]
    for r, (i, j) in enumerate(basis):
        dec = reduce_monomial(sys, i - shift, j + 2)
        if dec.denom_power:
            raise InvariantViolation(f"shifted integral of {basis[r]} carries a power of h in the denominator")
        for e, p in dec.coeffs.items():
            if e not in basis:
                if p:
                    raise InvariantViolation(f"shifted integral of {basis[r]} leaves the block")
                continue
            if p.degree > 1:
                raise InvariantViolation(f"shifted integral of {basis[r]} is not linear in h")
            c = basis.index(e)
            coeffs = p.coeffs + (Fraction(0),) * (2 - len(p.coeffs))
            R0[r][c] = coeffs[0] / (j + 2)
            R1[r][c] = coeffs[1] / (j + 2)
    E_minus = [[Fraction(int(r == c)) - R1[r][c] for c in range(k)] for r in range(k)]
    Minv = frac_inverse(E_minus)
    mul = lambda X, Y: [[sum(X[r][t] * Y[t][c] for t in range(k)) for c in range(k)] for r in range(k)]  # noqa: E731
    return mul(Minv, R1), mul(Minv, R0)


# --- frames: V, V', V'' as polynomial combinations of a base vector ----------


@dataclass(frozen=True)
class Frame:
    """V = W0 base, V' = W1 base, den * V'' = W2 base."""

    base_order: int
    W0: PolyMatrix
    W1: PolyMatrix
    W2: PolyMatrix
    den: RationalPoly


def _adjugate3(M: PolyMatrix) -> PolyMatrix:
    a = M.rows
    cof = [[ZERO] * 3 for _ in range(3)]
    for r in range(3):
        for c in range(3):
            rr = [x for x in range(3) if x != r]
            cc = [x for x in range(3) if x != c]
            minor = a[rr[0]][cc[0]] * a[rr[1]][cc[1]] - a[rr[0]][cc[1]] * a[rr[1]][cc[0]]
            cof[r][c] = minor if (r + c) % 2 == 0 else -minor
    return PolyMatrix([[cof[c][r] for c in range(3)] for r in range(3)])


def lv_v2_second_matrix() -> PolyMatrix:
    """Exact N3(h) with h (2h+1) V2'' = N3(h) V2', derived from the PF pair."""
    pf = pf_system(LV, "V2")
    M = pf.matrix()
    E_minus_A = PolyMatrix([[int(r == c) - pf.A[r][c] for c in range(3)] for r in range(3)])
    prod = _adjugate3(M) @ E_minus_A
    # det(A2 h + B2) = (9/4) h^2 (2h + 1), so h(2h+1) M^{-1} = adj(M) / ((9/4) h)
    return PolyMatrix([[p.unshift(1) * Fraction(4, 9) for p in row] for row in prod.rows])


def frame(sys: SystemId, block: str) -> Frame:
    pf = pf_system(sys, block)
    M = pf.matrix()
    k = len(pf.basis)
    if (sys, block) == (LV, "V2"):
        return Frame(1, M, PolyMatrix.identity(3), lv_v2_second_matrix(), RationalPoly([0, 1, 2]))
    inv = frac_inverse([[Fraction(int(r == c)) - pf.A[r][c] for c in range(k)] for r in range(k)])
    K = PolyMatrix(inv) @ M
    return Frame(2, M @ K, K, PolyMatrix.identity(k), ONE)


def _row_times(vec: Sequence[RationalPoly], M: PolyMatrix) -> list[RationalPoly]:
    return M.left_apply(list(vec))


def _combine(a: Sequence[RationalPoly], b: Sequence[RationalPoly], s=1) -> list[RationalPoly]:
    return [x + y * s for x, y in zip(a, b)]


def _operator_parts(c: Sequence[RationalPoly], fr: Frame):
    """Row vectors (over the frame base) multiplied by P2, P1, P0 in den * L[c V]."""
    dc = [p.deriv() for p in c]
    d2c = [p.deriv() for p in dc]
    part2 = _combine(
        [p * fr.den for p in _combine(_row_times(d2c, fr.W0), _row_times(dc, fr.W1), 2)],
        _row_times(c, fr.W2),
    )
    part1 = [p * fr.den for p in _combine(_row_times(dc, fr.W0), _row_times(c, fr.W1))]
    part0 = [p * fr.den for p in _row_times(c, fr.W0)]
    return part2, part1, part0


# --- annihilator ------------------------------------------------------------


def annihilator_degree_caps(sys: SystemId, n: int) -> tuple[int, int, int]:
    if sys is BT:
        return n + 1, n, n - 1
    d = target_denom_power(sys, n)
    return 2 * d + 3, 2 * d + 2, 2 * d + 1


@dataclass(frozen=True)
class Annihilator:
    sys: SystemId
    n: int
    P2: RationalPoly
    P1: RationalPoly
    P0: RationalPoly
    kernel_dim: int = 1

    def __post_init__(self):
        if self.P2.is_zero() and self.P1.is_zero() and self.P0.is_zero():
            raise ValueError("an annihilator needs a nonzero coefficient")

    @property
    def coefficients(self) -> tuple[RationalPoly, RationalPoly, RationalPoly]:
        return self.P2, self.P1, self.P0

    def degree_violations(self) -> list[str]:
        caps = annihilator_degree_caps(self.sys, self.n)
        return [f"P{2 - k}: degree {p.degree} > {cap}"
                for k, (p, cap) in enumerate(zip(self.coefficients, caps)) if p.degree > cap]

    def apply(self, h: float, value: float, d1: float, d2: float) -> float:
        return self.P2(h) * d2 + self.P1(h) * d1 + self.P0(h) * value

    def scaled(self, factor) -> "Annihilator":
        return Annihilator(self.sys, self.n, self.P2 * factor, self.P1 * factor, self.P0 * factor, self.kernel_dim)

    def to_json(self) -> str:
        data = {
            "system": self.sys.value,
            "n": self.n,
            "kernel_dim": self.kernel_dim,
            "P2": self.P2.to_pairs(),
            "P1": self.P1.to_pairs(),
            "P0": self.P0.to_pairs(),
        }
        return json.dumps(data, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Annihilator":
        d = json.loads(text)
        return cls(SystemId.parse(d["system"]), int(d["n"]), RationalPoly.from_pairs(d["P2"]),
                   RationalPoly.from_pairs(d["P1"]), RationalPoly.from_pairs(d["P0"]), int(d.get("kernel_dim", 1)))


def block_coefficients(rep: MelnikovRepresentation, block: str) -> list[RationalPoly]:
    """Coefficient row of one PF block of the representation numerator (over the target h-power)."""
    lifted = rep.over_target() or rep.decomposition
    return [lifted.coeffs[e] for e in BLOCKS[(rep.sys, block)]]


def _integer_row(row: Sequence[Fraction]) -> list[int]:
    den = 1
    for v in row:
        den = den * v.denominator // gcd(den, v.denominator)
    ints = [int(v * den) for v in row]
    g = 0
    for v in ints:
        g = gcd(g, v)
    return [v // g for v in ints] if g > 1 else ints


def nullspace_vector(rows: Sequence[Sequence[Fraction]], ncols: int) -> tuple[list[Fraction], int]:
    """One kernel vector of a rational matrix and the kernel dimension.

    Rows are scaled to integers and eliminated fraction-free (row operations
    with integer cross-multiplication, content removed after each step). The
    vector sets the first free unknown to 1 and the others to 0; it is then
    scaled so that its first nonzero entry is 1.
    """
    mat = [_integer_row(r) for r in rows if any(r)]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((k for k in range(r, len(mat)) if mat[k][c] != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        p = mat[r][c]
        for k in range(len(mat)):
            if k != r and mat[k][c] != 0:
                f = mat[k][c]
                mat[k] = _integer_row([Fraction(p * a - f * b) for a, b in zip(mat[k], mat[r])])
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    free = [c for c in range(ncols) if c not in pivots]
    if not free:
        return [], 0
    x = [Fraction(0)] * ncols
    x[free[0]] = Fraction(1)
    for k, c in enumerate(pivots):
        x[c] = -Fraction(sum(mat[k][t] * x[t] for t in free), mat[k][c])
    lead = next(v for v in x if v != 0)
    return [v / lead for v in x], len(free)


def _assemble(sys: SystemId, c: Sequence[RationalPoly], caps: tuple[int, int, int]):
    fr = frame(sys, TARGET_BLOCK[sys])
    parts = _operator_parts(c, fr)
    columns = []  # one list of row-vector polynomials per unknown
    for part, cap in zip(parts, caps):
        for k in range(cap + 1):
            columns.append([p.shift(k) for p in part])
    ncomp = len(c)
    top = max((p.degree for col in columns for p in col), default=-1)
    rows = []
    for comp in range(ncomp):
        for power in range(top + 1):
            rows.append([col[comp].coeffs[power] if power < len(col[comp].coeffs) else Fraction(0)
                         for col in columns])
    return rows, len(columns)


def construct_annihilator(sys: SystemId, rep: MelnikovRepresentation) -> Annihilator:
    """L = P2 D^2 + P1 D + P0 with L[target block of the numerator] = 0 exactly.

    The target block is (I_{0,1}, I_{-1,1}) for LV and (I_{0,1}, I_{1,1}) for BT.
    """
    if rep.sys is not sys:
        raise PreconditionError("representation belongs to another system")
    c = block_coefficients(rep, TARGET_BLOCK[sys])
    if all(p.is_zero() for p in c):
        raise PreconditionError("the targeted block of the representation is identically zero")
    caps = annihilator_degree_caps(sys, rep.n)
    rows, ncols = _assemble(sys, c, caps)
    vec, dim = nullspace_vector(rows, ncols)
    if dim == 0:
        raise InvariantViolation("annihilator system has a trivial kernel")
    polys = []
    start = 0
    for cap in caps:
        polys.append(RationalPoly(vec[start:start + cap + 1]))
        start += cap + 1
    ann = Annihilator(sys, rep.n, polys[0], polys[1], polys[2], dim)
    if any(not p.is_zero() for p in annihilation_remainder(rep, ann)):
        raise InvariantViolation("kernel vector does not annihilate the target block")
    return ann


def _apply_symbolic(rep: MelnikovRepresentation, ann: Annihilator, block: str) -> list[RationalPoly]:
    fr = frame(rep.sys, block)
    parts = _operator_parts(block_coefficients(rep, block), fr)
    out = [ZERO] * len(parts[0])
    for P, part in zip(ann.coefficients, parts):
        out = [a + P * b for a, b in zip(out, part)]
    return out


def annihilation_remainder(rep: MelnikovRepresentation, ann: Annihilator) -> list[RationalPoly]:
    """Coefficients of L[target block] over its frame base; all zero when L annihilates it."""
    return _apply_symbolic(rep, ann, TARGET_BLOCK[rep.sys])


@dataclass(frozen=True)
class ResidualPolynomials:
    """R(h) = sum_k Q_k(h) / divisor_k(h) * base_k(h) for the complementary block."""

    base: tuple[tuple[Index, int], ...]  # (basis integral, derivative order)
    Q: tuple[RationalPoly, ...]
    divisors: tuple[RationalPoly, ...]

    def evaluate(self, sys: SystemId, h: float, tol: float = 1e-12) -> float:
        total = 0.0
        oval = oval_endpoints(sys, h)
        for ((i, j), order), q, d in zip(self.base, self.Q, self.divisors):
            total += q(h) / d(h) * abelian_derivative(sys, i, j, h, order, tol, oval)
        return total


def residual_polynomials(rep: MelnikovRepresentation, ann: Annihilator) -> ResidualPolynomials:
    block = OTHER_BLOCK[rep.sys]
    fr = frame(rep.sys, block)
    raw = _apply_symbolic(rep, ann, block)
    base = tuple((e, fr.base_order) for e in BLOCKS[(rep.sys, block)])
    Q, div = [], []
    for (e, _), q in zip(base, raw):
        if rep.sys is LV and e == (0, 2):
            # the I_{0,2}' column of the frame's V'' matrix vanishes, so den divides exactly
            quot, rem = _divide(q, fr.den)
            if not rem.is_zero():
                raise InvariantViolation("I_{0,2}' coefficient is not divisible by h(2h+1)")
            Q.append(quot)
            div.append(ONE)
        else:
            Q.append(q)
            div.append(fr.den)
    return ResidualPolynomials(base, tuple(Q), tuple(div))


def _divide(num: RationalPoly, den: RationalPoly) -> tuple[RationalPoly, RationalPoly]:
    rem = list(num.coeffs)
    dc = den.coeffs
    if len(rem) < len(dc):
        return ZERO, num
    quot = [Fraction(0)] * (len(rem) - len(dc) + 1)
    for k in range(len(quot) - 1, -1, -1):
        f = rem[k + len(dc) - 1] / dc[-1]
        quot[k] = f
        for t, d in enumerate(dc):
            rem[k + t] -= f * d
    return RationalPoly(quot), RationalPoly(rem)


def numerator_derivatives(rep: MelnikovRepresentation, h: float, tol: float = 1e-12) -> tuple[float, float, float]:
    """(N, N', N'') at h for the numerator N = h^m M of the representation."""
    lifted = rep.over_target() or rep.decomposition
    oval = oval_endpoints(rep.sys, h)
    n0 = n1 = n2 = 0.0
    for (i, j), p in lifted.coeffs.items():
        if p.is_zero():
            continue
        v0 = abelian_integral(rep.sys, i, j, h, tol, oval)
        v1 = abelian_derivative(rep.sys, i, j, h, 1, tol, oval)
        v2 = abelian_derivative(rep.sys, i, j, h, 2, tol, oval)
        dp = p.deriv()
        c0, c1, c2 = p(h), dp(h), dp.deriv()(h)
        n0 += c0 * v0
        n1 += c1 * v0 + c0 * v1
        n2 += c2 * v0 + 2 * c1 * v1 + c0 * v2
    return n0, n1, n2


def annihilator_residual(sys: SystemId, rep: MelnikovRepresentation, ann: Annihilator, h: float,
                         standoff: float = SINGULAR_STANDOFF) -> float:
    """R(h) = L[h^m M](h), applying L to the numerator with exact basis derivatives."""
    check_standoff(sys, h, standoff)
    n0, n1, n2 = numerator_derivatives(rep, h)
    return ann.apply(h, n0, n1, n2)


def operator_scale(ann: Annihilator, rep: MelnikovRepresentation, h: float) -> float:
    """Magnitude of the individual terms of L[N](h), used to normalise residuals."""
    n0, n1, n2 = numerator_derivatives(rep, h)
    return abs(ann.P2(h) * n2) + abs(ann.P1(h) * n1) + abs(ann.P0(h) * n0)


# --- Riccati ratios -----------------------------------------------------------

RICCATI_KINDS = ("omega_LV", "chi_BT_V2", "omega_BT_second")


def riccati_residual(sys: SystemId, kind: str, h: float, standoff: float = SINGULAR_STANDOFF,
                     min_denominator: float = 1e-8) -> float:
    """Normalised residual G(h) w'(h) - (quadratic in w) for the ratio w named by ``kind``.

    omega_LV:        w = I_{-1,1} / I_{0,1},    G = h(2h+1)
    chi_BT_V2:       w = I_{1,1} / I_{0,1},     G = (4/35)(9h^2 - 4)
    omega_BT_second: w = I_{1,0}'' / I_{0,0}'', G = (1/5)((9/4)h^2 - 1)
    """
    expected = {"omega_LV": LV, "chi_BT_V2": BT, "omega_BT_second": BT}
    if kind not in expected:
        raise ValueError(f"unknown Riccati kind {kind!r}")
    if expected[kind] is not sys:
        raise PreconditionError(f"{kind} belongs to {expected[kind].value}")
    check_standoff(sys, h, standoff)
    oval = oval_endpoints(sys, h)
    if kind == "omega_LV":
        num, den, order, label = (-1, 1), (0, 1), 0, "I[0,1]"
    elif kind == "chi_BT_V2":
        num, den, order, label = (1, 1), (0, 1), 0, "I[0,1]"
    else:
        num, den, order, label = (1, 0), (0, 0), 2, "I[0,0]''"

    def val(idx, k):
        if k == 0:
            return abelian_integral(sys, idx[0], idx[1], h, 1e-12, oval)
        return abelian_derivative(sys, idx[0], idx[1], h, k, 1e-12, oval)

    u, du = val(num, order), val(num, order + 1)
    v, dv = val(den, order), val(den, order + 1)
    if abs(v) < min_denominator * (1.0 + abs(u)):
        raise RatioDenominatorError(f"{label} is numerically zero at h = {h!r}")
    w = u / v
    dw = (du * v - u * dv) / (v * v)
    if kind == "omega_LV":
        G = h * (2 * h + 1)
        terms = (-2.0 / 3.0 * w * w, (4 * h + 9) / 3.0 * w, -(8 * h + 9) / 3.0)
    elif kind == "chi_BT_V2":
        G = 4.0 / 35.0 * (9 * h * h - 4)
        terms = (-0.8 * w * w, 12.0 / 35.0 * h * w, 4.0 / 7.0)
    else:
        G = 0.2 * (2.25 * h * h - 1)
        terms = (0.4 * w * w, 0.15 * h * w, -0.5)
    lhs = G * dw
    return abs(lhs - sum(terms)) / (1.0 + max(abs(lhs), *map(abs, terms)))

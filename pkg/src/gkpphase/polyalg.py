"""Exact rational algebra for polynomial phase stabilizers.

A polynomial phase gate exp(2πi P(x)) acts on a grid code through the values
P takes on the integers, so everything here is done in exact rational
arithmetic (`fractions.Fraction`).  The module provides

* the integer-valued basis polynomials L_n (Pólya's binomial-type basis,
  leading coefficient exactly 1/n!),
* membership testing for integer-valued polynomials,
* starting representations x^(2^(m-1))/2^m of the level-m diagonal gate and
  the squaring lift between levels,
* the coefficient-reduction procedure that subtracts integer multiples of
  L_n from the highest degree downward until every |a_k| <= 1/(2 k!),
  forking at exact boundary remainders and keeping all lexicographic minima,
* the multivariate generalisation used for CS / CCZ synthesis.

Conventions: coefficients are indexed by degree with the constant term at
index 0; constant terms are global phases and are reduced mod 1 and dropped
by the reduction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Iterable, Mapping

Rational = Fraction

# Hard safety cap on simultaneous reduction branches.  Boundary remainders
# are exact-rational events, so in practice a handful of branches survive.
MAX_BRANCHES = 65536


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


class RationalPolynomial:
    """Dense univariate polynomial with exact Fraction coefficients.

    Immutable; trailing zero coefficients are trimmed on construction.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coefficients: Iterable = ()):
        cs = [_as_fraction(c) for c in coefficients]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls) -> "RationalPolynomial":
        return cls(())

    @classmethod
    def monomial(cls, degree: int, coefficient=1) -> "RationalPolynomial":
        c = _as_fraction(coefficient)
        if c == 0:
            return cls(())
        return cls((0,) * degree + (c,))

    @classmethod
    def from_dict(cls, terms: Mapping[int, object]) -> "RationalPolynomial":
        if not terms:
            return cls(())
        deg = max(terms)
        cs = [Fraction(0)] * (deg + 1)
        for k, c in terms.items():
            cs[k] = _as_fraction(c)
        return cls(cs)

    # -- basic queries -----------------------------------------------------

    @property
    def degree(self) -> int:
        """Highest nonzero index; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def coeff(self, k: int) -> Fraction:
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return Fraction(0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, x) -> Fraction:
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def evaluate_float(self, x: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + float(c)
        return acc

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "RationalPolynomial") -> "RationalPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        return RationalPolynomial(
            [self.coeff(k) + other.coeff(k) for k in range(n)]
        )

    def __sub__(self, other: "RationalPolynomial") -> "RationalPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        return RationalPolynomial(
            [self.coeff(k) - other.coeff(k) for k in range(n)]
        )

    def __neg__(self) -> "RationalPolynomial":
        return RationalPolynomial([-c for c in self.coeffs])

    def __mul__(self, other) -> "RationalPolynomial":
        if isinstance(other, RationalPolynomial):
            if self.is_zero() or other.is_zero():
                return RationalPolynomial(())
            out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                if a == 0:
                    continue
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
            return RationalPolynomial(out)
        c = _as_fraction(other)
        return RationalPolynomial([c * a for a in self.coeffs])

    __rmul__ = __mul__

    def scale_argument(self, s) -> "RationalPolynomial":
        """Return P(s*x) for an exact rational s (x -> -x reflection etc.)."""
        s = _as_fraction(s)
        return RationalPolynomial([c * s**k for k, c in enumerate(self.coeffs)])

    def drop_constant(self) -> "RationalPolynomial":
        if not self.coeffs:
            return self
        return RationalPolynomial((Fraction(0),) + self.coeffs[1:])

    # -- protocol -----------------------------------------------------------

    def __eq__(self, other) -> bool:
        return isinstance(other, RationalPolynomial) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"RationalPolynomial({self})"

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for k in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            mag = abs(c)
            if k == 0:
                term = str(mag)
            else:
                xs = "x" if k == 1 else f"x^{k}"
                if mag == 1:
                    term = xs
                elif mag.numerator == 1:
                    term = f"{xs}/{mag.denominator}"
                else:
                    term = f"{mag.numerator}{xs}/{mag.denominator}" if mag.denominator != 1 else f"{mag.numerator}{xs}"
            sign = "-" if c < 0 else "+"
            parts.append((sign, term))
        head_sign, head = parts[0]
        out = ("-" if head_sign == "-" else "") + head
        for sign, term in parts[1:]:
            out += f" {sign} {term}"
        return out

    def fraction_strings(self) -> list[str]:
        """Coefficients by degree as "num/den" strings (CLI wire format)."""
        return [f"{c.numerator}/{c.denominator}" for c in self.coeffs]


class LexOrder(enum.Enum):
    LESS = "less"
    GREATER = "greater"
    EQUAL = "equal"
    # Kept for API completeness; the magnitude scan below is total, so this
    # value is never produced.
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class BranchStep:
    """One reduction step: subtracted multiplier n_j of L_j at degree j."""

    degree: int
    multiplier: int
    boundary: bool


@dataclass(frozen=True)
class ReductionOutcome:
    """All lexicographically minimal survivors of a coefficient reduction."""

    minima: tuple[RationalPolynomial, ...]
    branch_log: tuple[BranchStep, ...]

    @property
    def tied(self) -> bool:
        return len(self.minima) > 1


# ---------------------------------------------------------------------------
# Integer-valued basis
# ---------------------------------------------------------------------------


def basis_polynomial(n: int) -> RationalPolynomial:
    """Integer-valued basis polynomial L_n.

    L_n(x) = (1/n!) prod_{i=1..n} (x + i - n/2)        for even n,
             (1/n!) prod_{i=1..n} (x + i - (n+1)/2)    for odd n.

    Leading coefficient is exactly 1/n!.
    """
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"basis_polynomial requires an integer n >= 1, got {n!r}")
    return _basis(n)


_BASIS_CACHE: dict[int, RationalPolynomial] = {}


def _basis(n: int) -> RationalPolynomial:
    """L_n for n >= 1, plus L_0 = 1 used internally by the multivariate basis."""
    if n == 0:
        return RationalPolynomial((1,))
    cached = _BASIS_CACHE.get(n)
    if cached is not None:
        return cached
    shift = Fraction(n, 2) if n % 2 == 0 else Fraction(n + 1, 2)
    poly = RationalPolynomial((1,))
    x = RationalPolynomial((0, 1))
    for i in range(1, n + 1):
        poly = poly * (x + RationalPolynomial((Fraction(i) - shift,)))
    poly = poly * Fraction(1, factorial(n))
    _BASIS_CACHE[n] = poly
    return poly


def is_integer_valued(poly: RationalPolynomial) -> bool:
    """Exact test for P(Z) ⊆ Z via greedy expansion in the L_n basis.

    The expansion is triangular (L_n has leading coefficient 1/n!), so the
    coefficients c_n = a_n * n! are forced; P is integer-valued iff every
    c_n and the residual constant are integers.
    """
    rem = poly
    for j in range(poly.degree, 0, -1):
        c = rem.coeff(j) * factorial(j)
        if c.denominator != 1:
            return False
        if c != 0:
            rem = rem - c * _basis(j)
    return rem.coeff(0).denominator == 1


# ---------------------------------------------------------------------------
# Gate representations
# ---------------------------------------------------------------------------


def starting_representation(m: int) -> RationalPolynomial:
    """Trivial representation x^(2^(m-1)) / 2^m of the level-m diagonal gate."""
    if not isinstance(m, int) or m < 1:
        raise ValueError(f"starting_representation requires m >= 1, got {m!r}")
    return RationalPolynomial.monomial(2 ** (m - 1), Fraction(1, 2**m))


def lift_representation(poly: RationalPolynomial, m: int) -> RationalPolynomial:
    """Square a level-m representation into a level-(m+1) starting point.

    Returns 2^(m-1) * P(x)^2, which picks up half the phase of P on odd
    integers.  Requires that P actually implements the level-m gate.
    """
    if not verify_gate(poly, m):
        raise ValueError(
            f"lift_representation: polynomial does not implement the level-{m} gate"
        )
    return Fraction(2 ** (m - 1)) * (poly * poly)


def verify_gate(poly: RationalPolynomial, m: int, k_range: int = 50) -> bool:
    """Check the defining phase action: P(k) ≡ 0 (even k), 2^-m (odd k) mod 1.

    A degree-d polynomial integer-valued on d+1 consecutive integers is
    integer-valued everywhere, so |k| <= deg+2 would suffice; |k| <= 50 is a
    safety margin, not a correctness requirement.
    """
    if m < 1:
        raise ValueError(f"verify_gate requires m >= 1, got {m!r}")
    target = Fraction(1, 2**m)
    for k in range(-k_range, k_range + 1):
        val = poly(k)
        frac = val - (val.numerator // val.denominator)
        want = Fraction(0) if k % 2 == 0 else target
        if frac != want:
            return False
    return True


def lex_compare(p: RationalPolynomial, q: RationalPolynomial) -> LexOrder:
    """Compare coefficient magnitudes from the highest degree downward.

    The first strict |coefficient| difference decides; full magnitude ties
    are EQUAL (sign variants of one minimum compare equal).
    """
    top = max(p.degree, q.degree, 0)
    for k in range(top, -1, -1):
        a, b = abs(p.coeff(k)), abs(q.coeff(k))
        if a < b:
            return LexOrder.LESS
        if a > b:
            return LexOrder.GREATER
    return LexOrder.EQUAL


def _split_coefficient(a: Fraction, lead: Fraction) -> list[tuple[int, Fraction, bool]]:
    """Decompose a = n*lead + r with |r| <= lead/2; both n at exact boundary.

    Returns (n, r, boundary) choices, the smaller |n| first.
    """
    t = a / lead
    n_floor = t.numerator // t.denominator
    frac = t - n_floor
    if frac == Fraction(1, 2):
        lo = (n_floor, a - n_floor * lead, True)
        hi = (n_floor + 1, a - (n_floor + 1) * lead, True)
        return [lo, hi] if abs(n_floor) <= abs(n_floor + 1) else [hi, lo]
    n = n_floor if frac < Fraction(1, 2) else n_floor + 1
    return [(n, a - n * lead, False)]


def reduce(poly: RationalPolynomial) -> ReductionOutcome:
    """Coefficient reduction to the lexicographically minimal gate polynomial.

    Walks from the highest degree down to 1.  At degree j it writes
    a_j = n_j/j! + r_j with |r_j| <= 1/(2 j!) and subtracts n_j L_j.  When
    |r_j| hits the boundary exactly both choices of n_j are explored; after
    each degree only branches whose fixed (degree >= j) magnitude profile is
    minimal survive, since lower-degree subtractions cannot change it.  The
    constant term is reduced mod 1 and dropped (a global phase).
    """
    deg = poly.degree
    if deg <= 0:
        return ReductionOutcome((poly.drop_constant(),), ())

    branches: list[tuple[RationalPolynomial, tuple[BranchStep, ...]]] = [(poly, ())]
    for j in range(deg, 0, -1):
        lead = Fraction(1, factorial(j))
        grown: list[tuple[RationalPolynomial, tuple[BranchStep, ...]]] = []
        for cur, log in branches:
            for n_j, _r, boundary in _split_coefficient(cur.coeff(j), lead):
                nxt = cur - n_j * _basis(j) if n_j else cur
                grown.append((nxt, log + (BranchStep(j, n_j, boundary),)))
        # Lexicographic pruning on the already-final degrees >= j.
        profiles = [
            tuple(abs(b.coeff(k)) for k in range(deg, j - 1, -1)) for b, _ in grown
        ]
        best = min(profiles)
        branches = []
        seen: set[tuple[Fraction, ...]] = set()
        for (b, log), prof in zip(grown, profiles):
            if prof != best:
                continue
            key = b.coeffs
            if key in seen:
                continue
            seen.add(key)
            branches.append((b, log))
        if len(branches) > min(MAX_BRANCHES, 2 ** max(deg, 1)):
            raise RuntimeError(
                f"reduction branch explosion: {len(branches)} active branches"
            )

    c0 = branches[0][0].coeff(0)
    n0 = c0.numerator // c0.denominator
    log0 = branches[0][1] + ((BranchStep(0, n0, False),) if n0 else ())
    # Deduplicate (dropping constants can merge branches) and order tied
    # minima deterministically, positive leading coefficient first.
    uniq: list[RationalPolynomial] = []
    for b, _log in branches:
        p = b.drop_constant()
        if p not in uniq:
            uniq.append(p)
    uniq.sort(key=lambda p: (p.coeff(p.degree) < 0, p.coeffs))
    return ReductionOutcome(tuple(uniq), log0)


# ---------------------------------------------------------------------------
# Multivariate gates
# ---------------------------------------------------------------------------

Exponent = tuple[int, ...]


class MultiRationalPolynomial:
    """Sparse polynomial in N variables with exact rational coefficients."""

    __slots__ = ("n_vars", "terms")

    def __init__(self, n_vars: int, terms: Mapping[Exponent, object] | None = None):
        if n_vars < 1:
            raise ValueError("n_vars must be >= 1")
        clean: dict[Exponent, Fraction] = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != n_vars or any(e < 0 for e in exp):
                raise ValueError(f"bad exponent tuple {exp} for n_vars={n_vars}")
            c = _as_fraction(c)
            if c != 0:
                clean[exp] = clean.get(exp, Fraction(0)) + c
        object.__setattr__(self, "n_vars", n_vars)
        object.__setattr__(
            self, "terms", {e: c for e, c in clean.items() if c != 0}
        )

    def coeff(self, exp: Exponent) -> Fraction:
        return self.terms.get(tuple(exp), Fraction(0))

    @property
    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def __sub__(self, other: "MultiRationalPolynomial") -> "MultiRationalPolynomial":
        if other.n_vars != self.n_vars:
            raise ValueError("variable-count mismatch")
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, Fraction(0)) - c
        return MultiRationalPolynomial(self.n_vars, out)

    def __call__(self, xs) -> Fraction:
        acc = Fraction(0)
        for exp, c in self.terms.items():
            t = c
            for x, e in zip(xs, exp):
                t *= Fraction(x) ** e
            acc += t
        return acc

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MultiRationalPolynomial)
            and self.n_vars == other.n_vars
            and self.terms == other.terms
        )

    def __hash__(self) -> int:
        return hash((self.n_vars, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        if not self.terms:
            return "MultiRationalPolynomial(0)"
        bits = []
        for exp in sorted(self.terms, key=lambda e: (-sum(e), tuple(-x for x in e))):
            mono = "*".join(
                f"x{i+1}" + (f"^{e}" if e > 1 else "")
                for i, e in enumerate(exp)
                if e > 0
            )
            bits.append(f"({self.terms[exp]})*{mono or '1'}")
        return "MultiRationalPolynomial(" + " + ".join(bits) + ")"


def control_gate_start(n_qubits: int, m: int) -> MultiRationalPolynomial:
    """Starting representation (x1···xN)^(2^(m-1)) / 2^m of C^{N-1}Λ_m."""
    if not isinstance(n_qubits, int) or n_qubits < 1:
        raise ValueError(f"control_gate_start requires N >= 1, got {n_qubits!r}")
    if not isinstance(m, int) or m < 1:
        raise ValueError(f"control_gate_start requires m >= 1, got {m!r}")
    e = 2 ** (m - 1)
    return MultiRationalPolynomial(
        n_qubits, {(e,) * n_qubits: Fraction(1, 2**m)}
    )


def _basis_product(exps: Exponent) -> MultiRationalPolynomial:
    """Product L_{d1}(x1)···L_{dN}(xN) expanded into the sparse form."""
    factors = [_basis(d) for d in exps]
    acc: dict[Exponent, Fraction] = {(): Fraction(1)}
    for f in factors:
        nxt: dict[Exponent, Fraction] = {}
        for exp, c in acc.items():
            for k, fk in enumerate(f.coeffs):
                if fk == 0:
                    continue
                ne = exp + (k,)
                nxt[ne] = nxt.get(ne, Fraction(0)) + c * fk
        acc = nxt
    return MultiRationalPolynomial(len(exps), acc)


@dataclass(frozen=True)
class MultiReductionOutcome:
    """Minimal multivariate representative plus boundary-tie metadata."""

    minimum: MultiRationalPolynomial
    tie_monomials: tuple[Exponent, ...] = ()


def multivariate_reduce(poly: MultiRationalPolynomial) -> MultiReductionOutcome:
    """Reduce monomial coefficients from the highest total degree downward.

    Within one total degree the monomials reduce independently (the basis
    product for exponent d only touches monomials <= d componentwise).  At
    an exact boundary remainder the multiplier closer to zero is kept — the
    coefficient stays put — and the monomial is recorded as a tie.
    """
    cur = poly
    ties: list[Exponent] = []
    for total in range(cur.total_degree, 0, -1):
        monos = sorted(
            (e for e in cur.terms if sum(e) == total),
            key=lambda e: tuple(-x for x in e),
        )
        for exp in monos:
            a = cur.coeff(exp)
            if a == 0:
                continue
            lead = Fraction(1)
            for d in exp:
                lead /= factorial(d)
            choices = _split_coefficient(a, lead)
            n, _r, boundary = choices[0]  # smaller |n| first: half rounds to zero
            if boundary:
                ties.append(exp)
            if n:
                cur = cur - MultiRationalPolynomial(
                    cur.n_vars,
                    {e: n * c for e, c in _basis_product(exp).terms.items()},
                )
    # Constant term: global phase, reduced mod 1 and dropped.
    zero_exp = (0,) * cur.n_vars
    c0 = cur.coeff(zero_exp)
    if c0 != 0:
        cur = cur - MultiRationalPolynomial(cur.n_vars, {zero_exp: c0})
    return MultiReductionOutcome(cur, tuple(ties))


def verify_control_gate(
    poly: MultiRationalPolynomial, m: int, k_range: int = 6
) -> bool:
    """Phase check for C^{N-1}Λ_m: 2^-m mod 1 on all-odd inputs, else 0."""
    n = poly.n_vars
    target = Fraction(1, 2**m)
    from itertools import product

    for xs in product(range(-k_range, k_range + 1), repeat=n):
        val = poly(xs)
        frac = val - (val.numerator // val.denominator)
        want = target if all(x % 2 for x in xs) else Fraction(0)
        if frac != want:
            return False
    return True

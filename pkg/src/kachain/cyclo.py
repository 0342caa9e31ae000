"""Exact arithmetic in cyclotomic fields Q(zeta_M).

Scalars are stored as rational coefficient vectors over the power basis
1, z, ..., z^(d-1) of Q[x]/Phi_M(x) where z is a primitive M-th root of
unity and d = deg Phi_M.  Reduction mod Phi_M is deterministic, so equality
is coefficient-wise.  The text form accepted by :func:`parse_scalar` is a
'+'-joined list of terms `a/b*z^e` (rational coefficient, exponent 0 <= e < M),
e.g. ``1/2*z^0 + -1/2*z^3``.
"""

from __future__ import annotations

import cmath
import math
import re
from fractions import Fraction
from functools import lru_cache

from .errors import ScalarParseError

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _poly_divmod(num: list[int], den: list[int]) -> tuple[list[int], list[int]]:
    """Exact division of integer polynomials (coefficient lists, low to high)."""
    num = list(num)
    d = len(den) - 1
    lead = den[-1]
    quot = [0] * max(len(num) - d, 1)
    while len(num) - 1 >= d and any(num):
        k = len(num) - 1 - d
        c = num[-1]
        if c % lead != 0:
            raise ArithmeticError("non-exact polynomial division")
        q = c // lead
        quot[k] = q
        for i, dc in enumerate(den):
            num[k + i] -= q * dc
        while len(num) > 1 and num[-1] == 0:
            num.pop()
    return quot, num


@lru_cache(maxsize=None)
def cyclotomic_polynomial(M: int) -> tuple[int, ...]:
    """Integer coefficients of Phi_M, low degree first."""
    if M < 1:
        raise ValueError("conductor must be positive")
    # x^M - 1 divided by the product of Phi_d over proper divisors d of M
    poly = [-1] + [0] * (M - 1) + [1]
    for d in range(1, M):
        if M % d == 0:
            poly, rem = _poly_divmod(poly, list(cyclotomic_polynomial(d)))
            if any(rem):
                raise ArithmeticError("cyclotomic recursion failed")
    return tuple(poly)


@lru_cache(maxsize=None)
def _reduction_table(M: int) -> tuple[int, tuple[tuple[tuple[int, int], ...], ...]]:
    """Representations of z^e, 0 <= e < 2M, over the power basis mod Phi_M.

    Returns (d, table) with d = deg Phi_M and table[e] a tuple of
    (index, integer coefficient) pairs.
    """
    phi = cyclotomic_polynomial(M)
    d = len(phi) - 1
    rows: list[dict[int, int]] = [{e: 1} for e in range(d)]
    # z^d = -(phi[0] + phi[1] z + ... + phi[d-1] z^(d-1)); phi is monic
    for e in range(d, 2 * M):
        prev = rows[e - 1]
        nxt: dict[int, int] = {}
        for j, c in prev.items():
            if j + 1 < d:
                nxt[j + 1] = nxt.get(j + 1, 0) + c
            else:
                for k in range(d):
                    if phi[k]:
                        nxt[k] = nxt.get(k, 0) - c * phi[k]
        rows.append({k: v for k, v in nxt.items() if v})
    table = tuple(tuple(sorted(r.items())) for r in rows)
    return d, table


class CycloScalar:
    """An element of Q(zeta_M), exact.

    Immutable by convention; all arithmetic returns fresh objects.
    """

    __slots__ = ("conductor", "coeffs", "_hash")

    def __init__(self, conductor: int, coeffs: dict[int, Fraction] | None = None):
        self.conductor = conductor
        self.coeffs = {} if coeffs is None else coeffs
        self._hash = None

    # -- constructors ------------------------------------------------------

    @staticmethod
    def rational(value, conductor: int = 1) -> "CycloScalar":
        q = Fraction(value)
        return CycloScalar(conductor, {0: q} if q else {})

    @staticmethod
    def zeta_power(conductor: int, e: int) -> "CycloScalar":
        d, table = _reduction_table(conductor)
        e %= conductor
        return CycloScalar(conductor, {j: Fraction(c) for j, c in table[e]})

    # -- helpers -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_rational(self) -> bool:
        return all(j == 0 for j in self.coeffs)

    def as_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"not rational: {self}")
        return self.coeffs.get(0, _ZERO)

    def embed(self, conductor: int) -> "CycloScalar":
        """View this scalar inside Q(zeta_conductor); conductor must be a multiple."""
        if conductor == self.conductor:
            return self
        if conductor % self.conductor:
            raise ValueError("conductor embedding requires divisibility")
        # re-express the power basis of the small field through zeta powers
        ratio = conductor // self.conductor
        out: dict[int, Fraction] = {}
        d, table = _reduction_table(conductor)
        for j, c in self.coeffs.items():
            for k, ic in table[(j * ratio) % (2 * conductor)]:
                v = out.get(k, _ZERO) + c * ic
                if v:
                    out[k] = v
                elif k in out:
                    del out[k]
        return CycloScalar(conductor, out)

    @staticmethod
    def lift_pair(a: "CycloScalar", b: "CycloScalar"):
        if a.conductor == b.conductor:
            return a, b
        M = math.lcm(a.conductor, b.conductor)
        return a.embed(M), b.embed(M)

    def _coerce(self, other):
        if isinstance(other, CycloScalar):
            return CycloScalar.lift_pair(self, other)
        if isinstance(other, (int, Fraction)):
            return self, CycloScalar.rational(other, self.conductor)
        return NotImplemented

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        pair = self._coerce(other)
        if pair is NotImplemented:
            return NotImplemented
        a, b = pair
        out = dict(a.coeffs)
        for j, c in b.coeffs.items():
            v = out.get(j, _ZERO) + c
            if v:
                out[j] = v
            elif j in out:
                del out[j]
        return CycloScalar(a.conductor, out)

    __radd__ = __add__

    def __neg__(self):
        return CycloScalar(self.conductor, {j: -c for j, c in self.coeffs.items()})

    def __sub__(self, other):
        pair = self._coerce(other)
        if pair is NotImplemented:
            return NotImplemented
        a, b = pair
        return a + (-b)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            q = Fraction(other)
            if not q:
                return CycloScalar(self.conductor)
            return CycloScalar(self.conductor, {j: c * q for j, c in self.coeffs.items()})
        if not isinstance(other, CycloScalar):
            return NotImplemented
        a, b = CycloScalar.lift_pair(self, other)
        if a.is_rational():
            return b * a.as_fraction() if a.coeffs else CycloScalar(a.conductor)
        if b.is_rational():
            return a * b.as_fraction() if b.coeffs else CycloScalar(a.conductor)
        d, table = _reduction_table(a.conductor)
        out: dict[int, Fraction] = {}
        for i, ci in a.coeffs.items():
            for j, cj in b.coeffs.items():
                c = ci * cj
                for k, ic in table[i + j]:
                    v = out.get(k, _ZERO) + c * ic
                    if v:
                        out[k] = v
                    elif k in out:
                        del out[k]
        return CycloScalar(a.conductor, out)

    __rmul__ = __mul__

    def inverse(self) -> "CycloScalar":
        if self.is_zero():
            raise ZeroDivisionError("cyclotomic division by zero")
        if self.is_rational():
            return CycloScalar.rational(1 / self.as_fraction(), self.conductor)
        M = self.conductor
        d, _ = _reduction_table(M)
        # solve self * x = 1 by Gaussian elimination on the multiplication matrix
        cols = [self * CycloScalar(M, {j: _ONE}) for j in range(d)]
        rows = [[cols[j].coeffs.get(i, _ZERO) for j in range(d)] + [_ONE if i == 0 else _ZERO]
                for i in range(d)]
        n = d
        for col in range(n):
            piv = next((r for r in range(col, n) if rows[r][col]), None)
            if piv is None:
                raise ZeroDivisionError("singular multiplication matrix")
            rows[col], rows[piv] = rows[piv], rows[col]
            pv = rows[col][col]
            rows[col] = [v / pv for v in rows[col]]
            for r in range(n):
                if r != col and rows[r][col]:
                    f = rows[r][col]
                    rows[r] = [v - f * w for v, w in zip(rows[r], rows[col])]
        return CycloScalar(M, {j: rows[j][n] for j in range(n) if rows[j][n]})

    def __truediv__(self, other):
        pair = self._coerce(other)
        if pair is NotImplemented:
            return NotImplemented
        a, b = pair
        return a * b.inverse()

    def __rtruediv__(self, other):
        return CycloScalar.rational(other, self.conductor) / self

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = CycloScalar.rational(1, self.conductor)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conj(self) -> "CycloScalar":
        """Complex conjugation, zeta_M -> zeta_M^(-1)."""
        M = self.conductor
        d, table = _reduction_table(M)
        out: dict[int, Fraction] = {}
        for j, c in self.coeffs.items():
            for k, ic in table[(-j) % M]:
                v = out.get(k, _ZERO) + c * ic
                if v:
                    out[k] = v
                elif k in out:
                    del out[k]
        return CycloScalar(M, out)

    # -- comparisons / output ----------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = CycloScalar.rational(other, self.conductor)
        if not isinstance(other, CycloScalar):
            return NotImplemented
        a, b = CycloScalar.lift_pair(self, other)
        return a.coeffs == b.coeffs

    def __hash__(self):
        if self._hash is None:
            if self.is_rational():
                self._hash = hash(self.coeffs.get(0, _ZERO))
            else:
                self._hash = hash((self.conductor, tuple(sorted(self.coeffs.items()))))
        return self._hash

    def to_complex(self) -> complex:
        z = cmath.exp(2j * cmath.pi / self.conductor)
        return sum((complex(c) * z ** j for j, c in self.coeffs.items()), 0j)

    def __repr__(self):
        return f"CycloScalar({self.conductor}, {format_scalar(self)!r})"

    def __str__(self):
        return format_scalar(self)


def format_scalar(s: CycloScalar) -> str:
    if s.is_zero():
        return "0"
    parts = []
    for j in sorted(s.coeffs):
        c = s.coeffs[j]
        parts.append(f"{c.numerator}/{c.denominator}*z^{j}")
    return " + ".join(parts)


_TERM_RE = re.compile(
    r"^\s*(?P<num>[+-]?\d+)\s*(?:/\s*(?P<den>\d+))?\s*(?:\*\s*z\s*\^\s*(?P<exp>\d+))?\s*$"
)
_BARE_Z_RE = re.compile(r"^\s*(?P<sign>[+-])?\s*z\s*\^\s*(?P<exp>\d+)\s*$")


def parse_scalar(text: str, conductor: int) -> CycloScalar:
    """Parse the `a/b*z^e + ...` literal grammar."""
    out = CycloScalar(conductor)
    if text.strip() in ("0", ""):
        return out
    for term in text.split("+"):
        m = _TERM_RE.match(term)
        if m:
            num = int(m.group("num"))
            den = int(m.group("den") or 1)
            exp = int(m.group("exp") or 0)
        else:
            m = _BARE_Z_RE.match(term)
            if not m:
                raise ScalarParseError(f"bad scalar term {term!r}")
            num = -1 if m.group("sign") == "-" else 1
            den = 1
            exp = int(m.group("exp"))
        if den == 0:
            raise ScalarParseError(f"zero denominator in {term!r}")
        if exp >= conductor:
            raise ScalarParseError(f"exponent {exp} out of range for conductor {conductor}")
        out = out + CycloScalar.zeta_power(conductor, exp) * Fraction(num, den)
    return out


def _squarefree_split(n: int) -> tuple[int, int]:
    """n = k^2 * m with m squarefree; returns (k, m)."""
    k, m = 1, 1
    d = 2
    nn = n
    while d * d <= nn:
        e = 0
        while nn % d == 0:
            nn //= d
            e += 1
        k *= d ** (e // 2)
        if e % 2:
            m *= d
        d += 1
    if nn > 1:
        m *= nn
    return k, m


def sqrt_integer_in_cyclotomic(n: int, conductor: int | None = None) -> CycloScalar:
    """The positive square root of a positive integer, exactly.

    Perfect squares land in Q (conductor 1); otherwise the result lives in
    Q(zeta_4n) via products of quadratic Gauss sums, positive under the
    standard embedding zeta_M -> exp(2*pi*i/M).
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    k, m = _squarefree_split(n)
    if m == 1:
        s = CycloScalar.rational(k, conductor or 1)
        return s
    M = conductor or 4 * n
    if (4 * n) and M % 4:
        raise ValueError("conductor must allow a fourth root of unity")
    root = CycloScalar.rational(k, M)
    for p in _prime_factors(m):
        root = root * _sqrt_prime(p, M)
    if root.to_complex().real < 0:
        root = -root
    if root * root != CycloScalar.rational(n, M):
        raise ArithmeticError(f"sqrt construction failed for n={n}")
    return root


def _prime_factors(m: int) -> list[int]:
    out = []
    d = 2
    while d * d <= m:
        if m % d == 0:
            out.append(d)
            while m % d == 0:
                m //= d
        d += 1
    if m > 1:
        out.append(m)
    return out


def _sqrt_prime(p: int, M: int) -> CycloScalar:
    if p == 2:
        if M % 8:
            raise ValueError("sqrt(2) needs an eighth root of unity")
        e = M // 8
        return CycloScalar.zeta_power(M, e) + CycloScalar.zeta_power(M, M - e)
    if M % p:
        raise ValueError(f"sqrt({p}) needs a {p}-th root of unity")
    step = M // p
    gauss = CycloScalar(M)
    for a in range(1, p):
        legendre = pow(a, (p - 1) // 2, p)
        sign = 1 if legendre == 1 else -1
        gauss = gauss + CycloScalar.zeta_power(M, (a * step) % M) * sign
    if p % 4 == 3:
        # gauss^2 = -p here; divide by i
        i = CycloScalar.zeta_power(M, M // 4)
        gauss = gauss * i.inverse()
    if gauss.to_complex().real < 0:
        gauss = -gauss
    return gauss

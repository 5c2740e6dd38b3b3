"""Exact arithmetic in twisted group rings and truncated Novikov series.

The coefficient group is pi = Z^k, written multiplicatively as monomials
``x^v`` with ``v`` an integer exponent vector.  The monodromy ``zeta`` acts on
monomials through an invertible integer matrix: ``zeta(x^v) = x^(A v)``.

Series in ``z`` obey the commutation law ``a z = z zeta(a)``.  Substituting
``a = zeta^-1(b)`` gives ``z b = zeta^-1(b) z``, and by induction
``z^i b = zeta^-i(b) z^i``, so that::

    (a z^i) (b z^j) = a zeta^-i(b) z^(i+j)

which is the product implemented by :meth:`NovikovElement.__mul__`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import sympy


class RingError(ValueError):
    pass


class ContextMismatch(RingError):
    pass


class NegativeDegreePresent(RingError):
    pass


class NotUnit(RingError):
    pass


class ZeroElement(RingError):
    pass


@dataclass(frozen=True)
class RingContext:
    """The pair (pi = Z^rank, zeta) shared by all elements of one ring."""

    rank: int = 0
    twist: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        if self.rank < 0:
            raise RingError("rank must be nonnegative")
        twist = tuple(tuple(int(a) for a in row) for row in self.twist)
        if self.rank == 0:
            if twist:
                raise RingError("rank 0 requires the empty twist")
        else:
            if not twist:
                twist = tuple(
                    tuple(int(i == j) for j in range(self.rank)) for i in range(self.rank)
                )
            if len(twist) != self.rank or any(len(r) != self.rank for r in twist):
                raise RingError("twist must be a rank x rank matrix")
            if abs(sympy.Matrix(twist).det()) != 1:
                raise RingError("twist must be invertible over the integers")
        object.__setattr__(self, "twist", twist)

    @classmethod
    def untwisted(cls, rank: int = 0) -> "RingContext":
        return cls(rank)

    @property
    def is_untwisted(self) -> bool:
        return all(
            self.twist[i][j] == int(i == j)
            for i in range(self.rank)
            for j in range(self.rank)
        )

    def act(self, v: tuple[int, ...], power: int) -> tuple[int, ...]:
        """Apply zeta^power to an exponent vector."""
        if power == 0 or self.rank == 0:
            return v
        m = _matrix_power(self.twist, power)
        return tuple(sum(m[i][j] * v[j] for j in range(self.rank)) for i in range(self.rank))

    # convenience constructors --------------------------------------------
    def zero(self, precision: int | None = None) -> "NovikovElement":
        return make_element({}, precision, self)

    def one(self, precision: int | None = None) -> "NovikovElement":
        return self.monomial(1, 0, precision=precision)

    def z(self, power: int = 1, precision: int | None = None) -> "NovikovElement":
        return self.monomial(1, power, precision=precision)

    def monomial(
        self,
        coeff: int,
        zdeg: int = 0,
        exponent: Iterable[int] | None = None,
        precision: int | None = None,
    ) -> "NovikovElement":
        v = tuple(exponent) if exponent is not None else (0,) * self.rank
        a = GroupRingElement({v: coeff}, self)
        return make_element({zdeg: a}, precision, self)

    def constant(self, c: int, precision: int | None = None) -> "NovikovElement":
        return self.monomial(c, 0, precision=precision)

    def group_element(self, coeff: int, exponent: Iterable[int] | None = None) -> "GroupRingElement":
        v = tuple(exponent) if exponent is not None else (0,) * self.rank
        return GroupRingElement({v: coeff}, self)

    def to_json(self) -> dict:
        return {"rank": self.rank, "twist": [list(r) for r in self.twist]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "RingContext":
        return cls(int(obj.get("rank", 0)), tuple(tuple(r) for r in obj.get("twist", ())))


@lru_cache(maxsize=256)
def _matrix_power(m: tuple[tuple[int, ...], ...], power: int) -> tuple[tuple[int, ...], ...]:
    mat = sympy.Matrix(m)
    if power < 0:
        mat = mat.inv()
        power = -power
    res = mat**power
    return tuple(tuple(int(res[i, j]) for j in range(res.cols)) for i in range(res.rows))


@dataclass(frozen=True, eq=False)
class GroupRingElement:
    """Finite integer combination of monomials x^v, v in Z^rank."""

    terms: Mapping[tuple[int, ...], int]
    context: RingContext = field(default_factory=RingContext)

    def __post_init__(self):
        clean = {}
        for v, c in self.terms.items():
            v = tuple(int(a) for a in v)
            if len(v) != self.context.rank:
                raise RingError(f"exponent {v} does not have length {self.context.rank}")
            c = int(c)
            if c:
                clean[v] = clean.get(v, 0) + c
        clean = {v: c for v, c in sorted(clean.items()) if c}
        object.__setattr__(self, "terms", clean)

    def _check(self, other: "GroupRingElement"):
        if self.context != other.context:
            raise ContextMismatch(f"{self.context} vs {other.context}")

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, int):
            return self == GroupRingElement({(0,) * self.context.rank: other}, self.context)
        if not isinstance(other, GroupRingElement):
            return NotImplemented
        return self.context == other.context and self.terms == other.terms

    def __hash__(self):
        return hash((tuple(self.terms.items()), self.context))

    def __add__(self, other: "GroupRingElement") -> "GroupRingElement":
        if not isinstance(other, GroupRingElement):
            return NotImplemented
        self._check(other)
        out = dict(self.terms)
        for v, c in other.terms.items():
            out[v] = out.get(v, 0) + c
        return GroupRingElement(out, self.context)

    def __neg__(self):
        return GroupRingElement({v: -c for v, c in self.terms.items()}, self.context)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, int):
            return GroupRingElement({v: c * other for v, c in self.terms.items()}, self.context)
        if not isinstance(other, GroupRingElement):
            return NotImplemented
        self._check(other)
        out: dict[tuple[int, ...], int] = {}
        for v, c in self.terms.items():
            for w, d in other.terms.items():
                u = tuple(a + b for a, b in zip(v, w))
                out[u] = out.get(u, 0) + c * d
        return GroupRingElement(out, self.context)

    __rmul__ = __mul__

    def twist(self, power: int) -> "GroupRingElement":
        """zeta^power applied termwise."""
        if power == 0 or self.context.rank == 0:
            return self
        return GroupRingElement(
            {self.context.act(v, power): c for v, c in self.terms.items()}, self.context
        )

    def unit_inverse(self) -> "GroupRingElement | None":
        """Inverse of +-x^v, or None when self is not of that form."""
        if len(self.terms) != 1:
            return None
        (v, c), = self.terms.items()
        if c not in (1, -1):
            return None
        return GroupRingElement({tuple(-a for a in v): c}, self.context)

    def __repr__(self):
        return f"GroupRingElement({format_group_ring(self)!r})"


def format_group_ring(a: GroupRingElement, zdeg: int | None = None) -> str:
    if not a.terms:
        return "0"
    parts = []
    for v, c in a.terms.items():
        s = f"({c})"
        if a.context.rank:
            s += "*x^[" + ",".join(str(e) for e in v) + "]"
        if zdeg is not None:
            s += f"*z^{zdeg}"
        parts.append(s)
    return " + ".join(parts)


def _inf(p):
    return math.inf if p is None else p


class NovikovElement:
    """Twisted Laurent series sum_j a_j z^j, known below ``precision``.

    ``precision=None`` means exact (a finite Laurent polynomial); see
    :class:`LaurentPolynomial`.  Instances are immutable.
    """

    __slots__ = ("coeffs", "precision", "context")

    def __init__(
        self,
        coeffs: Mapping[int, GroupRingElement] | None = None,
        precision: int | None = None,
        context: RingContext | None = None,
    ):
        context = context or RingContext()
        clean = {}
        for j, a in (coeffs or {}).items():
            if isinstance(a, int):
                a = context.group_element(a)
            if a.context != context:
                raise ContextMismatch("coefficient context differs from element context")
            if precision is not None and j >= precision:
                continue
            if a:
                clean[int(j)] = a
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))
        object.__setattr__(self, "precision", precision)
        object.__setattr__(self, "context", context)

    def __setattr__(self, key, value):
        raise AttributeError("NovikovElement is immutable")

    # -- basic queries -------------------------------------------------
    @property
    def is_exact(self) -> bool:
        return self.precision is None

    def is_zero(self) -> bool:
        """True when every known coefficient vanishes."""
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    @property
    def order(self) -> float:
        """Lowest z-degree; for a (possibly truncated) zero, its precision."""
        if self.coeffs:
            return next(iter(self.coeffs))
        return _inf(self.precision)

    @property
    def top_degree(self) -> int | None:
        return next(reversed(self.coeffs)) if self.coeffs else None

    def coefficient(self, j: int) -> GroupRingElement:
        if self.precision is not None and j >= self.precision:
            raise RingError(f"degree {j} is beyond precision {self.precision}")
        return self.coeffs.get(j, self.context.group_element(0))

    def truncate(self, n: int | None) -> "NovikovElement":
        """Forget everything from degree n on."""
        if n is None:
            return self
        prec = n if self.precision is None else min(n, self.precision)
        return make_element(self.coeffs, prec, self.context)

    def with_precision(self, n: int | None) -> "NovikovElement":
        return self.truncate(n) if n is not None else self

    def zero_mod(self, n: int) -> bool:
        """True iff all coefficients of degree < n are known and zero."""
        if self.precision is not None and self.precision < n:
            # undetermined coefficients between precision and n
            if any(j < n for j in self.coeffs):
                return False
            raise PrecisionError(f"cannot decide congruence mod z^{n} at precision {self.precision}")
        return all(j >= n for j in self.coeffs)

    # -- arithmetic ----------------------------------------------------
    def _coerce(self, other) -> "NovikovElement":
        if isinstance(other, NovikovElement):
            if other.context != self.context:
                raise ContextMismatch(f"{self.context} vs {other.context}")
            return other
        if isinstance(other, int):
            return self.context.constant(other)
        if isinstance(other, GroupRingElement):
            if other.context != self.context:
                raise ContextMismatch(f"{self.context} vs {other.context}")
            return make_element({0: other}, None, self.context)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        prec = _min_prec(self.precision, other.precision)
        out = dict(self.coeffs)
        for j, a in other.coeffs.items():
            out[j] = out[j] + a if j in out else a
        return make_element(out, prec, self.context)

    __radd__ = __add__

    def __neg__(self):
        return make_element({j: -a for j, a in self.coeffs.items()}, self.precision, self.context)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return ring_mul(self, other)

    def __rmul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return ring_mul(other, self)

    def __pow__(self, e: int):
        if e < 0:
            raise RingError("use invert_unit for negative powers")
        out = self.context.one()
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.context.constant(other, self.precision)
        if not isinstance(other, NovikovElement):
            return NotImplemented
        return (
            self.context == other.context
            and self.precision == other.precision
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((tuple(self.coeffs.items()), self.precision, self.context))

    def __repr__(self):
        return f"{type(self).__name__}({format_element(self)!r})"

    def __str__(self):
        return format_element(self)

    # -- ring-specific operations (thin wrappers) ----------------------
    def augment(self) -> GroupRingElement:
        return augment(self)

    def is_unit(self):
        return is_unit(self)

    def invert(self, n: int) -> "NovikovElement":
        return invert_unit(self, n)

    def twist(self, power: int) -> "NovikovElement":
        return make_element({j: a.twist(power) for j, a in self.coeffs.items()}, self.precision, self.context)


class LaurentPolynomial(NovikovElement):
    """A Novikov element with no truncation: an element of Z[pi]_zeta[z, 1/z]."""

    __slots__ = ()

    def __init__(self, coeffs=None, context=None, precision=None):
        if precision is not None:
            raise RingError("LaurentPolynomial is exact")
        super().__init__(coeffs, None, context)


class PrecisionError(RingError):
    pass


def _min_prec(a: int | None, b: int | None) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def make_element(coeffs, precision, context) -> NovikovElement:
    if precision is None:
        return LaurentPolynomial(coeffs, context)
    return NovikovElement(coeffs, precision, context)


def ring_mul(a: NovikovElement, b: NovikovElement) -> NovikovElement:
    """Twisted product ``(a_i z^i)(b_j z^j) = a_i zeta^-i(b_j) z^(i+j)``.

    The result is known below ``min(prec(a) + ord(b), prec(b) + ord(a))``.
    """
    if a.context != b.context:
        raise ContextMismatch(f"{a.context} vs {b.context}")
    ctx = a.context
    prec = min(_inf(a.precision) + b.order, _inf(b.precision) + a.order)
    if not a.coeffs or not b.coeffs:
        prec_out = None if prec == math.inf else int(prec)
        return make_element({}, prec_out, ctx)
    out: dict[int, GroupRingElement] = {}
    for i, ai in a.coeffs.items():
        for j, bj in b.coeffs.items():
            if i + j >= prec:
                break
            term = ai * bj.twist(-i)
            out[i + j] = out[i + j] + term if (i + j) in out else term
    prec_out = None if prec == math.inf else int(prec)
    return make_element(out, prec_out, ctx)


def augment(a: NovikovElement) -> GroupRingElement:
    """The specialization z -> 0 on nonnegative-degree elements."""
    if a.coeffs and next(iter(a.coeffs)) < 0:
        raise NegativeDegreePresent(f"{a} has negative z-degrees")
    if a.precision is not None and a.precision <= 0:
        raise PrecisionError("degree-0 coefficient is unknown")
    return a.coefficient(0)


@dataclass(frozen=True)
class UnitWitness:
    sign: int
    exponent: tuple[int, ...]
    order: int


def is_unit(a: NovikovElement) -> tuple[bool, UnitWitness | None]:
    """A series is a unit iff its lowest coefficient is +-x^v."""
    if not a.coeffs:
        raise ZeroElement("zero (to known precision) is never a unit")
    j, lead = next(iter(a.coeffs.items()))
    if lead.unit_inverse() is None:
        return False, None
    (v, c), = lead.terms.items()
    return True, UnitWitness(c, v, j)


def invert_unit(a: NovikovElement, n: int) -> NovikovElement:
    """Inverse b with ``a * b == 1 mod z^n``.

    Solved degree by degree from the lowest coefficient.  The inverse is
    returned at precision ``n - ord(a)`` (or less, if ``a`` itself is only
    known to lower precision).
    """
    ok, w = is_unit(a)
    if not ok:
        raise NotUnit(f"{a} is not a unit")
    ctx = a.context
    v = w.order
    lead_inv = a.coeffs[v].unit_inverse()
    m_max = n if a.precision is None else min(n, a.precision - v)
    b: dict[int, GroupRingElement] = {}
    zero = ctx.group_element(0)
    for m in range(m_max):
        # coefficient of z^m in a*b, excluding the leading term of a
        acc = zero
        for i, ai in a.coeffs.items():
            if i == v:
                continue
            k = m - i
            if k in b:
                acc = acc + ai * b[k].twist(-i)
        target = ctx.group_element(1 if m == 0 else 0) - acc
        # a_v zeta^-v(b_{m-v}) = target
        b[m - v] = (lead_inv * target).twist(v)
    return make_element(b, m_max - v, ctx)


# -- text serialization ---------------------------------------------------

def format_element(a: NovikovElement) -> str:
    """Sorted term list, e.g. ``(-1)*x^[2]*z^3 + O(z^5)``."""
    parts = [format_group_ring(c, j) for j, c in a.coeffs.items()]
    s = " + ".join(parts) if parts else "0"
    if a.precision is not None:
        s += f" + O(z^{a.precision})"
    return s


_TERM = re.compile(r"^\((-?\d+)\)(?:\*x\^\[([-\d,\s]*)\])?\*z\^(-?\d+)$")
_BIGO = re.compile(r"^O\(z\^(-?\d+)\)$")


def parse_element(text: str, context: RingContext | None = None) -> NovikovElement:
    """Inverse of :func:`format_element`."""
    context = context or RingContext()
    text = text.strip()
    precision = None
    coeffs: dict[int, dict[tuple[int, ...], int]] = {}
    for raw in text.split(" + "):
        tok = raw.strip()
        if tok == "0":
            continue
        m = _BIGO.match(tok)
        if m:
            precision = int(m.group(1))
            continue
        m = _TERM.match(tok)
        if not m:
            raise RingError(f"cannot parse term {tok!r}")
        c, xs, j = m.groups()
        v = tuple(int(e) for e in xs.split(",")) if xs else ()
        if len(v) != context.rank:
            raise RingError(f"term {tok!r} does not match rank {context.rank}")
        slot = coeffs.setdefault(int(j), {})
        slot[v] = slot.get(v, 0) + int(c)
    return make_element(
        {j: GroupRingElement(t, context) for j, t in coeffs.items()}, precision, context
    )

"""Based free chain complexes, chain maps, homotopies and mapping cones.

Matrices act on column vectors: the column of ``d[i]`` indexed by a basis
element of degree ``i`` lists the coefficients of its boundary in degree
``i - 1``.  Coefficients are integers (``ring is None``) or twisted Laurent
series over a :class:`~novikov.rings.RingContext`, either exact
(``precision is None``) or truncated at ``z^precision``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from sympy import Matrix, ZZ
from sympy.matrices.normalforms import invariant_factors

from . import matrix as mx
from .rings import NovikovElement, RingContext, format_element, parse_element


class ChainError(ValueError):
    pass


class NotAChainMap(ChainError):
    pass


class HomotopyIdentityFails(ChainError):
    pass


class WrongCoefficients(ChainError):
    pass


class PrecisionExhausted(ChainError):
    pass


class ShapeMismatch(ChainError):
    pass


@dataclass(frozen=True)
class Label:
    name: str
    degree: int
    value: Fraction | None = None

    def to_json(self) -> dict:
        out = {"name": self.name, "degree": self.degree}
        if self.value is not None:
            out["value"] = str(self.value)
        return out

    @classmethod
    def from_json(cls, obj) -> "Label":
        v = obj.get("value")
        return cls(obj["name"], int(obj["degree"]), None if v is None else Fraction(v))


class ChainComplex:
    """A based, finitely generated free chain complex."""

    def __init__(
        self,
        basis: Mapping[int, Sequence[Label | str]],
        differentials: Mapping[int, object] | None = None,
        ring: RingContext | None = None,
        precision: int | None = None,
    ):
        self.ring = ring
        self.precision = precision
        if ring is None and precision is not None:
            raise WrongCoefficients("integer complexes carry no precision")
        self.basis: dict[int, tuple[Label, ...]] = {}
        for i, labels in sorted(basis.items()):
            labs = tuple(
                lab if isinstance(lab, Label) else Label(str(lab), int(i)) for lab in labels
            )
            if any(lab.degree != i for lab in labs):
                raise ChainError(f"label degree disagrees with basis degree {i}")
            if labs:
                self.basis[int(i)] = labs
        names = [lab.name for labs in self.basis.values() for lab in labs]
        if len(set(names)) != len(names):
            raise ChainError("basis labels must be unique")
        self._index = {
            lab.name: (i, k) for i, labs in self.basis.items() for k, lab in enumerate(labs)
        }
        self.d: dict[int, np.ndarray] = {}
        for i, m in (differentials or {}).items():
            i = int(i)
            mat = mx.asmatrix(m, self.rank(i - 1), self.rank(i))
            if ring is not None and mat.size:
                mat = mx.to_series(mat, ring, precision)
            elif ring is None and not mx.is_integer_matrix(mat):
                raise WrongCoefficients("integer complex with non-integer entries")
            if mat.size:
                self.d[i] = mat

    # -- shape ------------------------------------------------------------
    @property
    def degrees(self) -> list[int]:
        return sorted(self.basis)

    def degree_range(self) -> range:
        if not self.basis:
            return range(0)
        return range(min(self.basis), max(self.basis) + 1)

    def rank(self, i: int) -> int:
        return len(self.basis.get(i, ()))

    def labels(self, i: int) -> tuple[Label, ...]:
        return self.basis.get(i, ())

    def names(self, i: int) -> list[str]:
        return [lab.name for lab in self.labels(i)]

    def all_labels(self) -> list[Label]:
        return [lab for i in self.degrees for lab in self.basis[i]]

    def index(self, name: str) -> tuple[int, int]:
        return self._index[name]

    def diff(self, i: int) -> np.ndarray:
        m = self.d.get(i)
        if m is None:
            return mx.zeros(self.rank(i - 1), self.rank(i))
        return m

    def zero_entry(self):
        if self.ring is None:
            return 0
        return self.ring.zero(self.precision)

    def one_entry(self):
        if self.ring is None:
            return 1
        return self.ring.one(self.precision)

    def entry(self, target: str, source: str):
        i, c = self.index(source)
        j, r = self.index(target)
        if j != i - 1:
            return self.zero_entry()
        return self.diff(i)[r, c]

    def like(self, basis, differentials) -> "ChainComplex":
        return ChainComplex(basis, differentials, self.ring, self.precision)

    def __repr__(self):
        ranks = {i: self.rank(i) for i in self.degrees}
        return f"ChainComplex(ranks={ranks}, ring={self.ring}, precision={self.precision})"

    def __eq__(self, other):
        if not isinstance(other, ChainComplex):
            return NotImplemented
        if (self.ring, self.precision) != (other.ring, other.precision):
            return False
        if self.basis != other.basis:
            return False
        return all(mx.equal(self.diff(i), other.diff(i)) for i in self.degrees)

    # -- constructions ------------------------------------------------------
    def shift(self, k: int = 1) -> "ChainComplex":
        """``C_{*+k}``: degree i holds C_{i+k}; the differential gets sign (-1)^k."""
        sign = -1 if k % 2 else 1
        basis = {
            i - k: [Label(lab.name, i - k, lab.value) for lab in labs]
            for i, labs in self.basis.items()
        }
        diffs = {i - k: mx.scale(sign, m) for i, m in self.d.items()}
        return self.like(basis, diffs)

    def with_coefficients(self, ring: RingContext, precision: int | None) -> "ChainComplex":
        return ChainComplex(self.basis, self.d, ring, precision)

    def truncate(self, n: int) -> "ChainComplex":
        if self.ring is None:
            return self
        prec = n if self.precision is None else min(n, self.precision)
        return ChainComplex(self.basis, {i: mx.truncate(m, prec) for i, m in self.d.items()}, self.ring, prec)

    def permuted(self, orders: Mapping[int, Sequence[int]]) -> "ChainComplex":
        """Reorder the basis of each degree; ``orders[i][k]`` is the old index of new slot k."""
        basis = {i: [self.basis[i][k] for k in orders.get(i, range(self.rank(i)))] for i in self.basis}
        diffs = {}
        for i in self.degree_range():
            cols = list(orders.get(i, range(self.rank(i))))
            rows = list(orders.get(i - 1, range(self.rank(i - 1))))
            m = self.diff(i)
            diffs[i] = m[np.ix_(rows, cols)] if m.size else m
        return self.like(basis, diffs)

    def to_json(self) -> dict:
        out = {
            "ring": None if self.ring is None else self.ring.to_json(),
            "precision": self.precision,
            "basis": {
                str(i): [lab.to_json() for lab in self.basis[i]] for i in self.degrees
            },
            "differentials": {},
        }
        for i in sorted(self.d):
            m = self.d[i]
            out["differentials"][str(i)] = [
                [_entry_to_json(v) for v in row] for row in m
            ]
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "ChainComplex":
        ring = None if obj.get("ring") is None else RingContext.from_json(obj["ring"])
        precision = obj.get("precision")
        basis = {
            int(i): [
                Label.from_json(lab) if isinstance(lab, Mapping) else Label(str(lab), int(i))
                for lab in labs
            ]
            for i, labs in obj.get("basis", {}).items()
        }
        diffs = {}
        for i, rows in obj.get("differentials", {}).items():
            diffs[int(i)] = [[_entry_from_json(v, ring, precision) for v in r] for r in rows]
        return cls(basis, diffs, ring, precision)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _entry_to_json(v):
    if isinstance(v, NovikovElement):
        return format_element(v)
    return int(v)


def _entry_from_json(v, ring, precision):
    if isinstance(v, str):
        e = parse_element(v, ring or RingContext())
        return e if precision is None else e.truncate(precision)
    return int(v)


@dataclass(frozen=True)
class ValueFiltration:
    """Critical values of basis labels and the smallest gap between them."""

    values: Mapping[str, Fraction]

    @classmethod
    def of(cls, c: ChainComplex) -> "ValueFiltration":
        vals = {lab.name: lab.value for lab in c.all_labels() if lab.value is not None}
        return cls(vals)

    @property
    def gap(self) -> Fraction | None:
        distinct = sorted(set(self.values.values()))
        if len(distinct) < 2:
            return None
        return min(b - a for a, b in zip(distinct, distinct[1:]))

    def value(self, name: str) -> Fraction:
        return self.values[name]


def direct_sum(*complexes: ChainComplex) -> ChainComplex:
    first = complexes[0]
    degrees = sorted({i for c in complexes for i in c.degree_range()})
    basis = {i: [lab for c in complexes for lab in c.labels(i)] for i in degrees}
    diffs = {}
    for i in degrees:
        diffs[i] = mx.block(
            [[a.diff(i) if a is b else None for b in complexes] for a in complexes],
            [c.rank(i - 1) for c in complexes],
            [c.rank(i) for c in complexes],
        )
    return first.like(basis, diffs)


def verify_complex(c: ChainComplex, n: int | None = None) -> list[tuple[int, int, int]]:
    """Every (i, row, col) where d_{i-1} d_i does not vanish (mod z^n)."""
    if n is None:
        n = c.precision
    report = []
    for i in c.degree_range():
        dd = mx.matmul(c.diff(i - 1), c.diff(i))
        for r, col in mx.nonzero_entries(dd, n):
            report.append((i, r, col))
    return report


@dataclass
class ChainMap:
    """Matrices ``maps[i]: source_i -> target_{i+shift}``.

    ``anticommute`` declares ``d phi = -phi d`` instead of ``d phi = phi d``.
    """

    source: ChainComplex
    target: ChainComplex
    maps: dict[int, np.ndarray] = field(default_factory=dict)
    shift: int = 0
    anticommute: bool = False

    def __post_init__(self):
        clean = {}
        for i, m in self.maps.items():
            mat = mx.asmatrix(m, self.target.rank(i + self.shift), self.source.rank(i))
            if mat.size:
                clean[int(i)] = mat
        self.maps = clean

    def matrix(self, i: int) -> np.ndarray:
        m = self.maps.get(i)
        if m is None:
            return mx.zeros(self.target.rank(i + self.shift), self.source.rank(i))
        return m

    def degrees(self) -> list[int]:
        return sorted(set(self.source.degree_range()) | {i - self.shift for i in self.target.degree_range()})

    def check(self, n: int | None = None) -> list[tuple[int, int, int]]:
        """Positions where the declared (anti)commutation with d fails."""
        if n is None:
            n = _common_precision(self.source, self.target)
        sign = -1 if self.anticommute else 1
        bad = []
        for i in self.degrees():
            lhs = mx.matmul(self.target.diff(i + self.shift), self.matrix(i))
            rhs = mx.matmul(self.matrix(i - 1), self.source.diff(i))
            diff = lhs - mx.scale(sign, rhs)
            bad.extend((i, r, c) for r, c in mx.nonzero_entries(diff, n))
        return bad

    def is_chain_map(self, n: int | None = None) -> bool:
        return not self.check(n)

    def as_degree_zero(self) -> "ChainMap":
        """Re-read a degree -1 anticommuting map as a degree 0 map out of C_{*+1}."""
        if self.shift == 0:
            if self.anticommute:
                raise NotAChainMap("degree 0 map must commute with d")
            return self
        if self.shift != -1 or not self.anticommute:
            raise NotAChainMap("only degree -1 anticommuting maps can be regraded")
        src = self.source.shift(1)
        return ChainMap(src, self.target, {i - 1: m for i, m in self.maps.items()})

    def compose(self, first: "ChainMap") -> "ChainMap":
        """``self o first``."""
        maps = {}
        for i in first.degrees():
            maps[i] = mx.matmul(self.matrix(i + first.shift), first.matrix(i))
        return ChainMap(
            first.source,
            self.target,
            maps,
            self.shift + first.shift,
            self.anticommute != first.anticommute,
        )

    def __eq__(self, other):
        if not isinstance(other, ChainMap):
            return NotImplemented
        if self.shift != other.shift:
            return False
        return all(mx.equal(self.matrix(i), other.matrix(i)) for i in set(self.degrees()) | set(other.degrees()))


def identity_map(c: ChainComplex) -> ChainMap:
    return ChainMap(c, c, {i: mx.identity(c.rank(i), c.one_entry()) for i in c.degrees})


def zero_map(source: ChainComplex, target: ChainComplex, shift: int = 0, anticommute: bool = False) -> ChainMap:
    return ChainMap(source, target, {}, shift, anticommute)


def _common_precision(*cs: ChainComplex) -> int | None:
    precs = [c.precision for c in cs if c.precision is not None]
    return min(precs) if precs else None


@dataclass
class ChainHomotopy:
    """``psi[i]: C_i -> D_{i+1}`` with ``d psi + psi d = phi - phi_prime``.

    This sign makes ``[[1, psi], [0, 1]]`` a chain map ``C(phi) -> C(phi_prime)``.
    """

    phi: ChainMap
    phi_prime: ChainMap
    maps: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        src, tgt = self.phi.source, self.phi.target
        self.maps = {
            int(i): mx.asmatrix(m, tgt.rank(i + 1), src.rank(i)) for i, m in self.maps.items()
        }

    def matrix(self, i: int) -> np.ndarray:
        m = self.maps.get(i)
        if m is None:
            return mx.zeros(self.phi.target.rank(i + 1), self.phi.source.rank(i))
        return m

    def check(self) -> list[tuple[int, int, int]]:
        src, tgt = self.phi.source, self.phi.target
        n = _common_precision(src, tgt)
        bad = []
        for i in self.phi.degrees():
            lhs = mx.matmul(tgt.diff(i + 1), self.matrix(i)) + mx.matmul(self.matrix(i - 1), src.diff(i))
            rhs = self.phi.matrix(i) - self.phi_prime.matrix(i)
            bad.extend((i, r, c) for r, c in mx.nonzero_entries(lhs - rhs, n))
        return bad

    def reverse(self) -> "ChainHomotopy":
        return ChainHomotopy(self.phi_prime, self.phi, {i: mx.scale(-1, m) for i, m in self.maps.items()})


def cone_labels(source: ChainComplex, suffix: str) -> dict[int, list[Label]]:
    return {
        i + 1: [Label(lab.name + suffix, i + 1, lab.value) for lab in labs]
        for i, labs in source.basis.items()
    }


def mapping_cone(phi: ChainMap, suffix: str = "[+1]") -> ChainComplex:
    """``C(phi)_i = D_i + C_{i-1}`` with ``d = [[d_D, phi], [0, -d_C]]``."""
    phi = phi.as_degree_zero() if phi.shift else phi
    bad = phi.check()
    if bad:
        raise NotAChainMap(f"not a chain map at {bad[:5]}")
    c, d = phi.source, phi.target
    shifted = cone_labels(c, suffix)
    degrees = sorted(set(d.degree_range()) | set(shifted))
    basis = {i: list(d.labels(i)) + shifted.get(i, []) for i in degrees}
    diffs = {}
    for i in range(min(degrees, default=0), max(degrees, default=-1) + 2):
        diffs[i] = mx.block(
            [[d.diff(i), phi.matrix(i - 1)], [None, mx.scale(-1, c.diff(i - 1))]],
            [d.rank(i - 1), c.rank(i - 2)],
            [d.rank(i), c.rank(i - 1)],
        )
    basis = {i: labs for i, labs in basis.items() if labs}
    diffs = {i: m for i, m in diffs.items() if m.size}
    return ChainComplex(basis, diffs, d.ring, _common_precision(c, d))


def cone_iso(h: ChainHomotopy) -> ChainMap:
    """The block map ``[[1, psi], [0, 1]]: C(phi) -> C(phi_prime)``."""
    bad = h.check()
    if bad:
        raise HomotopyIdentityFails(f"d psi + psi d != phi - phi' at {bad[:5]}")
    src = mapping_cone(h.phi)
    tgt = mapping_cone(h.phi_prime)
    c, d = h.phi.source, h.phi.target
    one = d.one_entry()
    maps = {}
    for i in src.degrees:
        maps[i] = mx.block(
            [[mx.identity(d.rank(i), one), h.matrix(i - 1)], [None, mx.identity(c.rank(i - 1), one)]],
            [d.rank(i), c.rank(i - 1)],
            [d.rank(i), c.rank(i - 1)],
        )
    out = ChainMap(src, tgt, maps)
    if out.check():
        raise HomotopyIdentityFails("block map is not a chain map")
    return out


def is_block_unitriangular(m: np.ndarray, split: int, n: int | None = None) -> bool:
    """Upper block-triangular with identity diagonal blocks at the given split."""
    k = m.shape[0]
    if m.shape != (k, k):
        return False
    one = mx.identity(k)
    for (r, c) in mx.nonzero_entries(m - one, n):
        if not (r < split <= c):
            return False
    return True


# -- homology --------------------------------------------------------------

@dataclass(frozen=True)
class HomologyGroup:
    betti: int
    torsion: tuple[int, ...] = ()

    def __str__(self):
        parts = []
        if self.betti == 1:
            parts.append("Z")
        elif self.betti > 1:
            parts.append(f"Z^{self.betti}")
        parts.extend(f"Z/{t}" for t in self.torsion)
        return " + ".join(parts) if parts else "0"


def _integer_invariants(m: np.ndarray) -> list[int]:
    if m.size == 0:
        return []
    facs = invariant_factors(Matrix([[int(v) for v in row] for row in m]), domain=ZZ)
    return [abs(int(f)) for f in facs if int(f) != 0]


def homology_Z(c: ChainComplex) -> dict[int, HomologyGroup]:
    """Integral homology per degree via Smith normal form."""
    if c.ring is not None:
        raise WrongCoefficients("homology_Z needs integer coefficients")
    invariants = {i: _integer_invariants(c.diff(i)) for i in range(min(c.degrees, default=0), max(c.degrees, default=-1) + 2)}
    out = {}
    for i in c.degree_range():
        rank_out = len(invariants.get(i, []))
        incoming = invariants.get(i + 1, [])
        betti = c.rank(i) - rank_out - len(incoming)
        out[i] = HomologyGroup(betti, tuple(t for t in incoming if t > 1))
    return out


def homology_string(h: Mapping[int, HomologyGroup]) -> str:
    return ", ".join(str(h[i]) for i in sorted(h))


def novikov_rank(m: np.ndarray, n: int) -> int:
    """Rank over the field of rational Laurent series, certified mod z^n.

    Fraction-free elimination choosing pivots of minimal z-order.  A pivot of
    order >= n raises :class:`PrecisionExhausted`, and so does a leftover entry
    that is only known to vanish modulo a power of z smaller than n.
    """
    rows = []
    for row in m:
        out_row = []
        for v in row:
            if isinstance(v, NovikovElement):
                if v.context.rank:
                    raise WrongCoefficients("Novikov ranks need the rank-0 ring")
                out_row.append(v)
            else:
                out_row.append(RingContext().constant(int(v)))
        rows.append(out_row)
    rank = 0
    active_rows = list(range(len(rows)))
    active_cols = list(range(m.shape[1] if m.ndim == 2 else 0))
    while active_rows and active_cols:
        best = None
        for r in active_rows:
            for c in active_cols:
                e = rows[r][c]
                if e.coeffs:
                    key = (e.order, r, c)
                    if best is None or key < best:
                        best = key
        if best is None:
            for r in active_rows:
                for c in active_cols:
                    p = rows[r][c].precision
                    if p is not None and p < n:
                        raise PrecisionExhausted(f"entry ({r},{c}) is only known to be 0 mod z^{p}")
            break
        order, pr, pc = best
        if order >= n:
            raise PrecisionExhausted(f"pivot of order {order} needs precision > {n}")
        piv = rows[pr][pc]
        for r in active_rows:
            if r == pr:
                continue
            e = rows[r][pc]
            if e.coeffs:
                rows[r] = [piv * rows[r][c] - e * rows[pr][c] for c in range(len(rows[r]))]
        active_rows.remove(pr)
        active_cols.remove(pc)
        rank += 1
    return rank


def novikov_ranks(c: ChainComplex, n: int) -> dict[int, int]:
    """Betti numbers over Q((z)) for a complex over the rank-0 Novikov ring."""
    if c.ring is None:
        raise WrongCoefficients("novikov_ranks needs Novikov coefficients")
    if c.ring.rank != 0:
        raise WrongCoefficients("novikov_ranks is defined for trivial pi only")
    if c.precision is not None and c.precision < n:
        raise PrecisionExhausted(f"complex known only to precision {c.precision}")
    lo, hi = min(c.degrees, default=0), max(c.degrees, default=-1)
    ranks = {i: novikov_rank(c.diff(i), n) for i in range(lo, hi + 2)}
    return {i: c.rank(i) - ranks.get(i, 0) - ranks.get(i + 1, 0) for i in c.degree_range()}

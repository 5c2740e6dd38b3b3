"""Circle-valued assembly: algebraic cobordisms, the E-complex and F-hat.

An algebraic cobordism ``(F, D, theta, theta', psi)`` records one fundamental
domain: ``theta: F_i -> D_{i-1}`` and ``theta': D_i -> F_i`` count paths to and
from the cut, and ``psi: D_i -> D_i`` counts paths crossing a whole domain.
Gluing infinitely many domains gives the Novikov differential
``d_F + z theta' (1 - z psi)^{-1} theta``, summed as a truncated series.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import matrix as mx
from .chain import (
    ChainComplex,
    ChainError,
    ChainMap,
    Label,
    _entry_from_json,
    _entry_to_json,
    verify_complex,
)
from .rings import (
    GroupRingElement,
    NegativeDegreePresent,
    NovikovElement,
    RingContext,
    augment,
)


class AssemblyError(ValueError):
    pass


class InvalidGamma(AssemblyError):
    pass


class NotFilteredShape(AssemblyError):
    pass


class BasisMismatch(AssemblyError):
    pass


def _series(a: np.ndarray, ctx: RingContext, n: int | None) -> np.ndarray:
    return mx.to_series(a, ctx, n)


@dataclass
class AlgebraicCobordism:
    f: ChainComplex
    d: ChainComplex
    theta: Mapping[int, np.ndarray]
    thetaprime: Mapping[int, np.ndarray]
    psi: Mapping[int, np.ndarray]
    context: RingContext = RingContext()

    def __post_init__(self):
        f, d = self.f, self.d
        self.theta = {int(i): mx.asmatrix(m, d.rank(int(i) - 1), f.rank(int(i))) for i, m in self.theta.items()}
        self.thetaprime = {int(i): mx.asmatrix(m, f.rank(int(i)), d.rank(int(i))) for i, m in self.thetaprime.items()}
        self.psi = {int(i): mx.asmatrix(m, d.rank(int(i)), d.rank(int(i))) for i, m in self.psi.items()}

    def block(self, name: str, i: int) -> np.ndarray:
        f, d = self.f, self.d
        if name == "theta":
            return self.theta.get(i, mx.zeros(d.rank(i - 1), f.rank(i)))
        if name == "thetaprime":
            return self.thetaprime.get(i, mx.zeros(f.rank(i), d.rank(i)))
        if name == "psi":
            return self.psi.get(i, mx.zeros(d.rank(i), d.rank(i)))
        raise KeyError(name)

    @property
    def degrees(self) -> list[int]:
        return sorted(set(self.f.degree_range()) | set(self.d.degree_range()))

    def to_json(self) -> dict:
        def blocks(name):
            return {
                str(i): [[_entry_to_json(v) for v in row] for row in self.block(name, i)]
                for i in self.degrees
                if self.block(name, i).size
            }

        return {
            "F": self.f.to_json(),
            "D": self.d.to_json(),
            "theta": blocks("theta"),
            "thetaprime": blocks("thetaprime"),
            "psi": blocks("psi"),
            "twist": self.context.to_json(),
        }

    @classmethod
    def from_json(cls, obj) -> "AlgebraicCobordism":
        ctx = RingContext.from_json(obj["twist"]) if obj.get("twist") else RingContext()

        def blocks(name):
            return {
                int(i): [[_entry_from_json(v, ctx, None) for v in row] for row in rows]
                for i, rows in obj.get(name, {}).items()
            }

        return cls(
            ChainComplex.from_json(obj["F"]),
            ChainComplex.from_json(obj["D"]),
            blocks("theta"),
            blocks("thetaprime"),
            blocks("psi"),
            ctx,
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _e_complex(g: AlgebraicCobordism, n: int, suffix: str = "[+1]") -> tuple[ChainComplex, list[str]]:
    ctx = g.context
    f, d = g.f, g.d
    z = ctx.z(1, n)
    one = ctx.one(n)
    shifted = {i + 1: [Label(l.name + suffix, i + 1, l.value) for l in labs] for i, labs in d.basis.items()}
    degrees = sorted(set(g.degrees) | set(shifted))
    basis = {i: shifted.get(i, []) + list(d.labels(i)) + list(f.labels(i)) for i in degrees}

    def ser(a):
        return _series(a, ctx, n)

    diffs = {}
    for i in range(degrees[0], degrees[-1] + 1):
        k = i - 1  # degree of the shifted D block in this column
        one_minus = ser(mx.identity(d.rank(k), one)) - mx.scale(z, ser(g.block("psi", k)))
        diffs[i] = mx.block(
            [
                [mx.scale(-1, ser(d.diff(k))), None, None],
                [one_minus, ser(d.diff(i)), ser(g.block("theta", i))],
                [mx.scale(-z, ser(g.block("thetaprime", k))), None, ser(f.diff(i))],
            ],
            [d.rank(k - 1), d.rank(i - 1), f.rank(i - 1)],
            [d.rank(k), d.rank(i), f.rank(i)],
        )
    blocks = []
    for i in degrees:
        blocks.append((i, ["Dshift"] * d.rank(i - 1) + ["D"] * d.rank(i) + ["F"] * f.rank(i)))
    out = ChainComplex({i: b for i, b in basis.items() if b}, diffs, ctx, n)
    return out, dict(blocks)


def validate_gamma(g: AlgebraicCobordism, n: int) -> list[str]:
    """Empty iff the E-complex squares to zero mod z^n; otherwise names the failing blocks."""
    try:
        e, kinds = _e_complex(g, n)
    except (ValueError, ChainError) as exc:
        return [f"shape: {exc}"]
    report = []
    for i, r, c in verify_complex(e, n):
        src = kinds[i][c]
        tgt = kinds[i - 2][r]
        report.append(f"d_E^2 in degree {i}: {src} column {e.labels(i)[c].name} -> {tgt} row {e.labels(i - 2)[r].name}")
    return report


def build_E(g: AlgebraicCobordism, n: int) -> ChainComplex:
    """``E_i = D_{i-1} + D_i + F_i`` with ``[[-d_D, 0, 0], [1 - z psi, d_D, theta], [-z theta', 0, d_F]]``."""
    report = validate_gamma(g, n)
    if report:
        raise InvalidGamma("; ".join(report[:5]))
    return _e_complex(g, n)[0]


def fhat_matrix(g: AlgebraicCobordism, i: int, n: int) -> np.ndarray:
    """``d_F + sum_{j>=0} (z theta') (z psi)^j theta`` in degree i, mod z^n."""
    ctx = g.context
    f = g.f
    z = ctx.z(1, n)
    out = _series(f.diff(i), ctx, n)
    zt = mx.scale(z, _series(g.block("thetaprime", i - 1), ctx, n))
    zpsi = mx.scale(z, _series(g.block("psi", i - 1), ctx, n))
    term = _series(g.block("theta", i), ctx, n)
    for _ in range(max(n - 1, 0)):
        out = out + mx.matmul(zt, term)
        term = mx.matmul(zpsi, term)
    return mx.truncate(out, n)


def assemble_fhat(g: AlgebraicCobordism, n: int, check: bool = True) -> ChainComplex:
    if check:
        report = validate_gamma(g, n)
        if report:
            raise InvalidGamma("; ".join(report[:5]))
    f = g.f
    diffs = {i: fhat_matrix(g, i, n) for i in f.degree_range()}
    out = ChainComplex(f.basis, diffs, g.context, n)
    if verify_complex(out, n):
        raise InvalidGamma("assembled differential does not square to zero")
    return out


@dataclass
class Stage:
    complex: ChainComplex
    projection: ChainMap | None


def finite_stage(c: ChainComplex, level: int) -> Stage:
    """Coefficients reduced mod z^{level+1}, with the projection from the next stage."""
    if c.ring is None:
        raise AssemblyError("finite stages need Novikov coefficients")
    for i, m in c.d.items():
        for v in m.flat:
            if isinstance(v, NovikovElement) and v.coeffs and v.order < 0:
                raise NegativeDegreePresent(f"entry {v} in degree {i}")

    def stage(k):
        return ChainComplex(c.basis, {i: mx.truncate(m, k + 1) for i, m in c.d.items()}, c.ring, k + 1)

    here = stage(level)
    proj = None
    if c.precision is None or c.precision >= level + 2:
        above = stage(level + 1)
        proj = ChainMap(above, here, {i: mx.identity(c.rank(i), c.ring.one(level + 1)) for i in c.degrees})
        if proj.check(level + 1):
            raise AssemblyError("stage projection does not commute with d")
    return Stage(here, proj)


# -- filtered endomorphisms -------------------------------------------------------

@dataclass
class FilteredEndomorphism:
    """A square matrix over the nonnegative-power ring whose constant part is unitriangular.

    Columns are indexed by ``labels`` in increasing order; the z^0 part of column
    x may only involve x itself (with a unit coefficient) and smaller labels.
    """

    labels: Sequence[str]
    matrix: np.ndarray
    precision: int
    context: RingContext = RingContext()

    def __post_init__(self):
        k = len(self.labels)
        self.matrix = _series(mx.asmatrix(self.matrix, k, k), self.context, self.precision)
        problems = self.shape_problems()
        if problems:
            raise NotFilteredShape("; ".join(problems))

    def augmentation(self) -> np.ndarray:
        out = mx.zeros(*self.matrix.shape)
        for idx, v in np.ndenumerate(self.matrix):
            out[idx] = augment(v)
        return out

    def shape_problems(self) -> list[str]:
        out = []
        for idx, v in np.ndenumerate(self.matrix):
            if v.coeffs and v.order < 0:
                out.append(f"entry {idx} has negative z-degree")
        if out:
            return out
        eps = self.augmentation()
        for r in range(eps.shape[0]):
            if eps[r, r].unit_inverse() is None or len(eps[r, r].terms) != 1:
                out.append(f"diagonal entry {r} is not a signed group element")
            for c in range(r):
                if eps[r, c]:
                    out.append(f"constant part has ({r}, {c}) below the diagonal")
        return out


def _invert_augmentation(e: np.ndarray, ctx: RingContext) -> np.ndarray:
    """Back-substitution for an upper unitriangular-up-to-units matrix over Z[pi]."""
    k = e.shape[0]
    zero = GroupRingElement({}, ctx)
    one = ctx.group_element(1)
    x = mx.zeros(k, k)
    for r in reversed(range(k)):
        inv = e[r, r].unit_inverse()
        for c in range(k):
            acc = one if r == c else zero
            for m in range(r + 1, k):
                acc = acc - e[r, m] * x[m, c]
            x[r, c] = inv * acc
    return x


def invert_filtered(theta: FilteredEndomorphism, n: int | None = None) -> FilteredEndomorphism:
    """``eps^{-1} (1 + sum_j (-Psi)^j)`` with ``Psi = Theta eps^{-1} - 1``, mod z^n."""
    ctx = theta.context
    n = theta.precision if n is None else n
    eps_inv = _invert_augmentation(theta.augmentation(), ctx)
    eps_inv_series = mx.zeros(*eps_inv.shape)
    for idx, g in np.ndenumerate(eps_inv):
        eps_inv_series[idx] = NovikovElement({0: g} if g else {}, n, ctx)
    k = len(theta.labels)
    ident = _series(mx.identity(k), ctx, n)
    psi = mx.truncate(mx.matmul(theta.matrix, eps_inv_series), n) - ident
    neg = mx.scale(-1, psi)
    total, power = ident, ident
    for _ in range(max(n - 1, 0)):
        power = mx.truncate(mx.matmul(power, neg), n)
        total = total + power
    inv = mx.truncate(mx.matmul(eps_inv_series, total), n)
    return FilteredEndomorphism(theta.labels, inv, n, ctx)


def is_identity_mod(a: np.ndarray, n: int | None) -> bool:
    return mx.equal(a, mx.identity(a.shape[0], 1), n) if a.shape[0] == a.shape[1] else False


# -- comparisons -------------------------------------------------------------------

@dataclass
class Congruence:
    ok: bool
    first: tuple | None = None


def diff_congruence(c1: ChainComplex, c2: ChainComplex, n: int) -> Congruence:
    """Entrywise agreement of the differentials mod z^n."""
    degrees = sorted(set(c1.degrees) | set(c2.degrees))
    for i in degrees:
        if c1.names(i) != c2.names(i):
            raise BasisMismatch(f"bases differ in degree {i}")
    for i in degrees:
        a, b = c1.diff(i), c2.diff(i)
        for r, c in mx.nonzero_entries(a - b, n):
            return Congruence(False, (i, c1.labels(i - 1)[r].name, c1.labels(i)[c].name, a[r, c], b[r, c]))
    return Congruence(True)


def congruence_order(c1: ChainComplex, c2: ChainComplex, limit: int) -> int:
    """The largest n <= limit with the differentials congruent mod z^n."""
    best = 0
    for n in range(1, limit + 1):
        if not diff_congruence(c1, c2, n).ok:
            break
        best = n
    return best


def retraction_check(i: ChainMap, j: ChainMap, n: int | None = None) -> bool:
    if i.target.basis != j.source.basis:
        raise ChainError("j does not start where i ends")
    comp = j.compose(i)
    if comp.shift != 0 or comp.source.basis != comp.target.basis:
        raise ChainError("j i is not an endomorphism")
    one = comp.source.one_entry()
    return all(
        mx.equal(comp.matrix(k), mx.identity(comp.source.rank(k), one), n) for k in comp.source.degrees
    )
